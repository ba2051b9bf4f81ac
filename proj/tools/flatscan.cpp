#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "flatscan/coefficients.hpp"
#include "flatscan/error.hpp"
#include "flatscan/generators.hpp"
#include "flatscan/io.hpp"
#include "flatscan/lattice.hpp"
#include "flatscan/parallel.hpp"
#include "flatscan/pipeline.hpp"
#include "flatscan/transport.hpp"
#include "flatscan/verify.hpp"
#include "json.hpp"

using namespace flatscan;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4, kVerification = 5 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParameterInfeasible:
      return kUsage;
    case ErrorCode::LpFailure:
    case ErrorCode::NodeCapExceeded:
    case ErrorCode::RootReached:
      return kNumerical;
    default:
      return kData;
  }
}

// Options that do not change results are left out of the provenance block.
const std::set<std::string> kNotProvenance = {"help", "config", "threads", "output", "out-dir"};

Provenance provenance(const CLI::App* sub) {
  Provenance p;
  p.command = sub->get_name();
  for (const CLI::Option* o : sub->get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || kNotProvenance.count(name)) continue;
    std::string v;
    if (o->count() > 0) {
      for (const std::string& r : o->results()) v += (v.empty() ? "" : " ") + r;
    } else {
      v = o->get_default_str();
    }
    p.config[name] = v;
    if (name == "seed" && !v.empty()) p.seed = std::stoull(v);
  }
  return p;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return f;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
}

// Evenly spaced atom indices, all atoms when k <= 0 or k >= N.
std::vector<int> atom_sample(int N, int k) {
  std::vector<int> out;
  if (k <= 0 || k >= N) k = N;
  for (int i = 0; i < k; ++i) out.push_back(static_cast<int>(static_cast<long long>(i) * N / k));
  return out;
}

struct ScaleArgs {
  double r_max = 0.0, r_min = 0.0, q = 0.70710678118654752;

  ScaleGrid grid(const DiscreteMeasure& mu) const {
    ScaleGrid g = ScaleGrid::from_measure(mu, q);
    if (r_max > 0) g.r_max = r_max;
    if (r_min > 0) g.r_min = r_min;
    if (!(g.r_min > 0) || g.r_min > g.r_max) throw Error(ErrorCode::InvalidArgument, "need 0 < r-min <= r-max");
    return g;
  }
};

void add_scale_args(CLI::App* s, ScaleArgs& a) {
  s->add_option("--r-max", a.r_max, "largest radius (0: data diameter)")->capture_default_str();
  s->add_option("--r-min", a.r_min, "smallest radius (0: 4 x median nearest-neighbour distance)")
      ->capture_default_str();
  s->add_option("--q", a.q, "ratio between consecutive radii")->default_str(fmt(a.q));
}

void add_pipeline_args(CLI::App* s, PipelineConfig& c) {
  StoppingParams& P = c.params;
  s->add_option("-n,--dim", c.n, "dimension of the approximating planes")->capture_default_str();
  s->add_option("--A0", c.A0, "lattice scale ratio")->capture_default_str();
  s->add_option("--C0", c.C0, "lattice doubling constant")->capture_default_str();
  s->add_option("--depth", c.depth, "lattice depth (0: from the data)")->capture_default_str();
  s->add_option("--root-level", c.root_level, "level of R0 (-1: default)")->capture_default_str();
  s->add_option("--A", P.A, "high density threshold")->capture_default_str();
  s->add_option("--tau", P.tau, "low density threshold")->capture_default_str();
  s->add_option("--theta", P.theta, "angle threshold")->capture_default_str();
  s->add_option("--eps0", P.eps0, "square-function budget")->capture_default_str();
  s->add_option("--gamma", P.gamma, "balanced-ball gamma")->capture_default_str();
  s->add_option("--rho1", P.rho1, "balanced-ball rho1")->capture_default_str();
  s->add_option("--rho2", P.rho2, "balanced-ball rho2")->capture_default_str();
  s->add_option("--eta", P.eta, "covering-ball scale")->capture_default_str();
  s->add_option("--probes", c.nu.probes, "partition-of-unity probes")->capture_default_str();
  s->add_option("--ad-samples", c.nu.ad_samples, "AD-regularity samples")->capture_default_str();
  s->add_option("--seed", c.nu.seed, "probe seed")->capture_default_str();
}

void warn(const std::vector<std::string>& ws) {
  for (const std::string& w : ws) std::cerr << "warning: " << w << '\n';
}

// ---- subcommands ----

int cmd_gen(CLI::App* sub, const std::string& kind, const std::vector<std::string>& params, const std::string& out) {
  GeneratorSpec spec;
  spec.kind = kind;
  for (const std::string& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected key=value, got '" + kv + "'");
    spec.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  const DiscreteMeasure mu = generate(spec);
  Provenance p;
  p.command = sub->get_name();
  p.config = spec.to_map();
  p.seed = spec.seed;
  std::ofstream f = open_out(out);
  if (out.size() >= 5 && out.compare(out.size() - 5, 5, ".json") == 0) write_measure_json(f, mu, &p);
  else write_measure_csv(f, mu, &p);
  if (kind == "cantor4") std::cerr << "warning: cantor4 is purely unrectifiable; decompose will report a failed hypothesis\n";
  return kOk;
}

struct CoeffArgs {
  std::string input, out_dir, kind = "beta_p";
  int p = 2, n = 1, atoms = 32, K = 12;
  ScaleArgs scales;
};

CoefficientTable coefficient_table(const DiscreteMeasure& mu, const CoeffArgs& a) {
  CoefficientTable t;
  t.kind = parse_kind(a.kind);
  t.p = a.p;
  t.atoms = atom_sample(mu.size(), a.atoms);
  t.radii = a.scales.grid(mu).radii();
  PlaneSearchConfig cfg;
  cfg.K = a.K;
  const int S = static_cast<int>(t.radii.size());
  t.cells.assign(t.atoms.size(), std::vector<CoefficientResult>(S));
  parallel_for(static_cast<int>(t.atoms.size()) * S, [&](int idx) {
    const int i = idx / S, s = idx % S;
    CoefficientResult r = coefficient(t.kind, mu, mu.point(t.atoms[i]), t.radii[s], a.p, a.n, cfg);
    r.plan = TransportPlan();  // plans are not reported
    t.cells[i][s] = std::move(r);
  });
  return t;
}

int cmd_coeff(CLI::App* sub, const CoeffArgs& a) {
  const DiscreteMeasure mu = read_measure(a.input);
  const CoefficientTable t = coefficient_table(mu, a);
  const Provenance p = provenance(sub);
  make_dir(a.out_dir);
  {
    std::ofstream f = open_out(join(a.out_dir, "coeff.csv"));
    write_coefficients_csv(f, t, mu, p);
  }
  {
    std::ofstream f = open_out(join(a.out_dir, "coeff.json"));
    write_coefficients_json(f, t, mu, p);
  }
  std::vector<std::vector<double>> values(t.radii.size(), std::vector<double>(t.atoms.size()));
  int undefined = 0;
  for (std::size_t i = 0; i < t.atoms.size(); ++i)
    for (std::size_t s = 0; s < t.radii.size(); ++s) {
      const CoefficientResult& c = t.cells[i][s];
      values[s][i] = c.defined() ? c.value : std::nan("");
      undefined += !c.defined();
    }
  std::ofstream f = open_out(join(a.out_dir, "coeff.svg"));
  write_heatmap_svg(f, values, std::string(kind_name(t.kind)) + " p=" + std::to_string(a.p), "atom sample",
                    "scale (largest at bottom)", p);
  std::cout << t.atoms.size() << " atoms x " << t.radii.size() << " scales, " << undefined << " undefined cells\n";
  return kOk;
}

int cmd_sqfn(CLI::App* sub, const CoeffArgs& a, const std::string& out) {
  const DiscreteMeasure mu = read_measure(a.input);
  const CoefKind kind = parse_kind(a.kind);
  const std::vector<int> atoms = atom_sample(mu.size(), a.atoms);
  const ScaleGrid grid = a.scales.grid(mu);
  PlaneSearchConfig cfg;
  cfg.K = a.K;
  std::vector<SquareFunction> sq(atoms.size());
  parallel_for(static_cast<int>(atoms.size()),
               [&](int i) { sq[i] = square_function(mu, mu.point(atoms[i]), grid, kind, a.p, a.n, cfg); });
  std::ofstream f = open_out(out);
  f << provenance(sub).comment() << "atom";
  for (int k = 0; k < mu.dim(); ++k) f << ",x" << k + 1;
  f << ",value,undefined_scales\n";
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    f << atoms[i];
    for (int k = 0; k < mu.dim(); ++k) f << ',' << fmt(mu.points()(k, atoms[i]));
    f << ',' << fmt(sq[i].value) << ',' << sq[i].undefined << '\n';
  }
  return kOk;
}

struct WdistArgs {
  std::string a, b, output, method = "exact";
  double p = 1.0, eps = 0.01;
  int max_iter = 2000;
};

int cmd_wdist(CLI::App* sub, const WdistArgs& w) {
  const DiscreteMeasure mu = read_measure(w.a), nu = read_measure(w.b);
  nlohmann::ordered_json j;
  const Provenance p = provenance(sub);
  j["provenance"] = {{"tool", "flatscan"}, {"version", kVersion}, {"command", p.command},
                     {"config_hash", p.hash()}, {"seed", p.seed}};
  j["p"] = w.p;
  j["method"] = w.method;
  if (w.method == "exact") {
    const WassersteinResult r = wasserstein(mu, nu, w.p);
    j["value"] = r.value;
    j["cost"] = r.cost;
    j["duality_gap"] = r.duality_gap;
    j["marginal_residual"] = r.marginal_residual;
    j["renormalized"] = r.renormalized;
    j["mass_mismatch"] = r.mass_mismatch;
  } else if (w.method == "entropic") {
    const EntropicResult r = wasserstein_entropic(mu, nu, w.p, w.eps, w.max_iter);
    j["value"] = r.value;
    j["cost"] = r.cost;
    j["eps"] = w.eps;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["marginal_residual"] = r.marginal_residual;
    if (!r.converged) std::cerr << "warning: Sinkhorn did not converge; value is approximate\n";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + w.method + "'");
  }
  const std::string text = j.dump(1) + "\n";
  if (w.output.empty()) std::cout << text;
  else open_out(w.output) << text;
  return kOk;
}

struct LatticeArgs {
  std::string input, output;
  double A0 = 4.0, C0 = 7.0, C_sdb = 0.0;
  int depth = 0, n = 1;
};

int cmd_lattice(CLI::App* sub, const LatticeArgs& a) {
  const DiscreteMeasure mu = read_measure(a.input);
  CubeLattice L = build_lattice(mu, a.A0, a.C0, a.depth > 0 ? a.depth : default_depth(mu, a.A0));
  detect_doubling(L, mu, a.C0);
  detect_strongly_doubling(L, mu, a.C_sdb > 0 ? a.C_sdb : 2.0 * std::pow(2800.0, a.n), a.C0);
  const std::vector<AxiomViolation> v = check_axioms(L, mu);
  std::ofstream f = open_out(a.output);
  write_lattice_json(f, L, provenance(sub));
  std::cout << L.cubes.size() << " cubes over " << L.depth + 1 << " levels, " << v.size() << " axiom violations\n";
  for (const AxiomViolation& x : v) std::cerr << "cube " << x.cube << ": " << x.axiom << " " << x.detail << '\n';
  return v.empty() ? kOk : kVerification;
}

void write_nu_csv(const std::string& path, const ApproximantNu& A, const Provenance& p) {
  std::ofstream f = open_out(path);
  write_measure_csv(f, A.nu, &p);
}

int cmd_decompose(CLI::App* sub, const std::string& input, const std::string& out_dir, const PipelineConfig& cfg,
                  bool nu_only) {
  const DiscreteMeasure mu = read_measure(input);
  const auto run = run_pipeline(mu, cfg);
  warn(run->warnings);
  const Provenance p = provenance(sub);
  make_dir(out_dir);
  PipelineReport rep{&run->hypothesis, &run->tree, run->has_graph ? &run->graph : nullptr,
                     run->has_nu ? &run->nu : nullptr};
  std::string summary = summary_table(rep);
  for (const std::string& w : run->warnings) summary += "warning: " + w + "\n";
  if (!nu_only) {
    std::ofstream f = open_out(join(out_dir, "decomposition.json"));
    write_decomposition_json(f, run->lattice, rep, p);
    if (run->has_graph) {
      std::ofstream g = open_out(join(out_dir, "graph.csv"));
      write_graph_csv(g, run->graph, p);
    }
  }
  if (run->has_nu) write_nu_csv(join(out_dir, "nu.csv"), run->nu, p);
  open_out(join(out_dir, "summary.txt")) << p.comment() << summary;
  std::cout << summary;
  return kOk;
}

struct VerifyArgs {
  std::string input, output;
  int n = 1, instances = 20;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a) {
  const DiscreteMeasure mu = read_measure(a.input);
  std::vector<CheckResult> all = verify_plane_chain(mu, a.n, a.instances, a.seed);
  for (CheckResult& c : verify_lattice_axioms(mu)) all.push_back(std::move(c));
  for (CheckResult& c : verify_duality_gap(mu, a.instances, a.seed)) all.push_back(std::move(c));
  std::ostringstream s;
  int failed = 0;
  for (const CheckResult& c : all) {
    s << check_json_line(c) << '\n';
    failed += !c.passed;
  }
  if (a.output.empty()) std::cout << s.str();
  else open_out(a.output) << s.str();
  std::cerr << all.size() - failed << "/" << all.size() << " checks passed\n";
  return failed ? kVerification : kOk;
}

// Bar chart of the maximal stopping cubes and Tree cubes per level, from decomposition JSON.
int cmd_report(const std::string& input, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + input + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  if (!j.contains("tree") || !j["tree"].contains("cubes"))
    throw Error(ErrorCode::Parse, "'" + input + "' is not a decomposition file");
  const std::vector<std::string> labels = {"Tree", "HD", "LD", "BS", "BA", "F"};
  const std::vector<std::string> colors = {"#9ecae1", "#e6550d", "#fdae6b", "#31a354", "#756bb1", "#636363"};
  std::map<int, std::map<std::string, int>> count;
  std::map<std::string, double> mass;
  for (const auto& c : j["tree"]["cubes"]) {
    const std::string l = c["label"].get<std::string>();
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) continue;
    ++count[c["level"].get<int>()][l];
  }
  int peak = 1;
  for (const auto& [lev, m] : count) {
    int s = 0;
    for (const auto& kv : m) s += kv.second;
    peak = std::max(peak, s);
  }
  std::ostringstream svg;
  const int bw = 40, H = 300, left = 50, top = 30;
  const int W = left + bw * static_cast<int>(std::max<std::size_t>(count.size(), 1)) * 3 / 2 + 160;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n";
  for (const auto& [k, v] : j["provenance"].items())
    if (!v.is_object()) svg << "  " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  svg << "-->\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H + top + 40
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">cubes per level</text>\n";
  int col = 0;
  for (const auto& [lev, m] : count) {
    const int x = left + col * bw * 3 / 2;
    double y = top + H;
    for (std::size_t li = 0; li < labels.size(); ++li) {
      const auto it = m.find(labels[li]);
      if (it == m.end()) continue;
      const double h = static_cast<double>(it->second) / peak * H;
      y -= h;
      svg << "<rect x=\"" << x << "\" y=\"" << fmt(y) << "\" width=\"" << bw << "\" height=\"" << fmt(h)
          << "\" fill=\"" << colors[li] << "\"/>\n";
    }
    svg << "<text x=\"" << x << "\" y=\"" << top + H + 15 << "\" font-family=\"sans-serif\" font-size=\"11\">k="
        << lev << "</text>\n";
    ++col;
  }
  const int lx = W - 140;
  for (std::size_t li = 0; li < labels.size(); ++li) {
    const int y = top + 20 * static_cast<int>(li);
    svg << "<rect x=\"" << lx << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << colors[li] << "\"/>\n"
        << "<text x=\"" << lx + 18 << "\" y=\"" << y + 11 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << labels[li] << "</text>\n";
  }
  svg << "</svg>\n";
  open_out(output) << svg.str();

  const auto& b = j["tree"]["budgets"];
  const double m0 = b["R0"].get<double>() > 0 ? b["R0"].get<double>() : 1.0;
  std::printf("%-8s %8s %14s\n", "family", "cubes", "mass / mu(R0)");
  for (const std::string& l : labels) {
    int c = 0;
    for (const auto& [lev, m] : count) {
      const auto it = m.find(l);
      if (it != m.end()) c += it->second;
    }
    const double frac = l == "Tree" ? std::nan("") : b[l].get<double>() / m0;
    std::printf("%-8s %8d %14s\n", l.c_str(), c, l == "Tree" ? "-" : fmt(frac).c_str());
  }
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    std::printf("Lip(F) %s, mu(R_G)/mu(R0) %s\n", fmt(g["lipschitz"].get<double>()).c_str(),
                fmt(g["mass_RG"].get<double>() / std::max(g["mass_R0"].get<double>(), 1e-300)).c_str());
  }
  return kOk;
}

int default_threads() {
  const unsigned h = std::thread::hardware_concurrency();
  return h ? static_cast<int>(h) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale flatness coefficients, cube lattices and stopping-time decompositions of point measures"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.set_version_flag("--version", kVersion);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads")->envname("FLATSCAN_THREADS")->check(CLI::PositiveNumber);

  // gen
  std::string gen_kind, gen_out;
  std::vector<std::string> gen_params;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic measure");
  gen->add_option("kind", gen_kind, "flat_plane | lipschitz_graph | circle_arc | cantor4 | two_lines | "
                                    "plane_plus_spike | rescaled")
      ->required();
  gen->add_option("params", gen_params, "key=value generator parameters");
  gen->add_option("-o,--output", gen_out, "output file (.csv or .json)")->required();

  // coeff, sqfn
  CoeffArgs ca, sa;
  std::string sq_out;
  CLI::App* coeff = app.add_subcommand("coeff", "coefficient matrix over atoms x scales");
  CLI::App* sqfn = app.add_subcommand("sqfn", "square function per atom");
  for (auto [s, a] : {std::pair{coeff, &ca}, std::pair{sqfn, &sa}}) {
    s->add_option("-i,--input", a->input, "measure file")->required();
    s->add_option("--kind", a->kind, "beta_p | beta_h_p | alpha | alpha_h | alpha_p")->capture_default_str();
    s->add_option("-p", a->p, "exponent")->capture_default_str();
    s->add_option("-n,--dim", a->n, "plane dimension")->capture_default_str();
    s->add_option("--atoms", a->atoms, "evenly spaced atom sample size (0: all)")->capture_default_str();
    s->add_option("--planes", a->K, "plane perturbations for alpha")->capture_default_str();
    add_scale_args(s, a->scales);
  }
  coeff->add_option("--out-dir", ca.out_dir, "directory for coeff.csv, coeff.json, coeff.svg")->required();
  sqfn->add_option("-o,--output", sq_out, "output CSV")->required();

  // wdist
  WdistArgs wa;
  CLI::App* wdist = app.add_subcommand("wdist", "Wasserstein distance between two measures");
  wdist->add_option("-a", wa.a, "first measure")->required();
  wdist->add_option("-b", wa.b, "second measure")->required();
  wdist->add_option("-p", wa.p, "exponent")->capture_default_str();
  wdist->add_option("--method", wa.method, "exact | entropic")->capture_default_str();
  wdist->add_option("--eps", wa.eps, "entropic regularization")->capture_default_str();
  wdist->add_option("--max-iter", wa.max_iter, "Sinkhorn iterations")->capture_default_str();
  wdist->add_option("-o,--output", wa.output, "output JSON (stdout if absent)");

  // lattice
  LatticeArgs la;
  CLI::App* lat = app.add_subcommand("lattice", "build and check the cube lattice");
  lat->add_option("-i,--input", la.input, "measure file")->required();
  lat->add_option("-n,--dim", la.n, "dimension used by the strong doubling constant")->capture_default_str();
  lat->add_option("--A0", la.A0, "scale ratio")->capture_default_str();
  lat->add_option("--C0", la.C0, "doubling constant")->capture_default_str();
  lat->add_option("--C-sdb", la.C_sdb, "strong doubling constant (0: 2 x 2800^n)")->capture_default_str();
  lat->add_option("--depth", la.depth, "depth (0: from the data)")->capture_default_str();
  lat->add_option("-o,--output", la.output, "lattice JSON")->required();

  // decompose, nu
  std::string dec_in, dec_out, nu_in, nu_out;
  PipelineConfig dcfg, ncfg;
  CLI::App* dec = app.add_subcommand("decompose", "stopping-time decomposition, Lipschitz graph and nu");
  dec->add_option("-i,--input", dec_in, "measure file")->required();
  dec->add_option("--out-dir", dec_out, "directory for decomposition.json, graph.csv, nu.csv, summary.txt")
      ->required();
  add_pipeline_args(dec, dcfg);
  CLI::App* nu = app.add_subcommand("nu", "approximating measure nu only");
  nu->add_option("-i,--input", nu_in, "measure file")->required();
  nu->add_option("--out-dir", nu_out, "directory for nu.csv and summary.txt")->required();
  add_pipeline_args(nu, ncfg);

  // verify
  VerifyArgs va;
  CLI::App* ver = app.add_subcommand("verify", "run the invariant suites; JSON line per check");
  ver->add_option("-i,--input", va.input, "measure file")->required();
  ver->add_option("-n,--dim", va.n, "plane dimension")->capture_default_str();
  ver->add_option("--instances", va.instances, "random instances per suite")->capture_default_str();
  ver->add_option("--seed", va.seed, "instance seed")->capture_default_str();
  ver->add_option("-o,--output", va.output, "JSON lines file (stdout if absent)");

  // report
  std::string rep_in, rep_out;
  CLI::App* rep = app.add_subcommand("report", "plot and tabulate a decomposition file");
  rep->add_option("-i,--input", rep_in, "decomposition.json")->required();
  rep->add_option("-o,--output", rep_out, "SVG bar chart")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    set_thread_count(threads);
    if (*gen) return cmd_gen(gen, gen_kind, gen_params, gen_out);
    if (*coeff) return cmd_coeff(coeff, ca);
    if (*sqfn) return cmd_sqfn(sqfn, sa, sq_out);
    if (*wdist) return cmd_wdist(wdist, wa);
    if (*lat) return cmd_lattice(lat, la);
    if (*dec) return cmd_decompose(dec, dec_in, dec_out, dcfg, false);
    if (*nu) {
      ncfg.build_nu = true;
      return cmd_decompose(nu, nu_in, nu_out, ncfg, true);
    }
    if (*ver) return cmd_verify(va);
    if (*rep) return cmd_report(rep_in, rep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
