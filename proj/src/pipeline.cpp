#include "flatscan/pipeline.hpp"

#include "flatscan/error.hpp"

namespace flatscan {

std::unique_ptr<PipelineRun> run_pipeline(const DiscreteMeasure& mu, const PipelineConfig& cfg) {
  if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "empty measure");
  if (cfg.n < 1 || cfg.n >= mu.dim()) throw Error(ErrorCode::InvalidArgument, "need 1 <= n < d");
  cfg.params.validate();
  auto p = std::make_unique<PipelineRun>();
  p->mu = mu;
  p->lattice = build_lattice(mu, cfg.A0, cfg.C0, cfg.depth > 0 ? cfg.depth : default_depth(mu, cfg.A0));
  const int level = cfg.root_level >= 0 ? cfg.root_level : default_root_level(p->lattice);
  p->root = choose_root(p->lattice, mu, level, cfg.n);
  if (p->root.fallback) p->warnings.push_back("no strongly doubling cube at the root level; using the closest cube");

  TreeOptions to;
  to.good = pipeline_good_set_options(mu, p->lattice, p->root.cube);
  p->hypothesis = check_main_lemma_hypothesis(mu, p->lattice, p->root.cube, cfg.n, cfg.params.eps0, to.good);
  if (!p->hypothesis.holds) p->warnings.push_back("hypothesis fails: mu(R0 \\ G) exceeds eps0 mu(3B0)");
  to.good_set = &p->hypothesis.good;
  p->tree = build_tree(mu, p->lattice, p->root.cube, cfg.n, cfg.params, to);
  for (const std::string& w : p->tree.warnings) p->warnings.push_back(w);
  if (p->tree.status == TreeStatus::Ok) {
    p->graph = build_graph(p->tree, p->lattice, cfg.graph);
    p->has_graph = true;
    if (cfg.build_nu) {
      p->nu = build_nu(p->tree, p->graph, cfg.nu);
      p->has_nu = true;
    }
  } else {
    p->warnings.push_back("root cube stops; no graph is built");
  }
  return p;
}

}  // namespace flatscan
