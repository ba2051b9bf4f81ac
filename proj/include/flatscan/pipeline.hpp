#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flatscan/decomposition.hpp"

namespace flatscan {

struct PipelineConfig {
  int n = 1;
  double A0 = 4.0, C0 = 7.0;
  int depth = 0;       // 0: default_depth
  int root_level = -1; // < 0: default_root_level
  StoppingParams params;
  GraphOptions graph;
  NuOptions nu;
  bool build_nu = true;
};

// Lattice, root, hypothesis check, stopping tree, graph and nu for one measure. A failed
// hypothesis or a fallback root only adds a warning. Not movable: `nu` points into `graph`.
struct PipelineRun {
  DiscreteMeasure mu;
  CubeLattice lattice;
  RootChoice root;
  HypothesisReport hypothesis;
  TreeDecomposition tree;
  GraphModel graph;
  ApproximantNu nu;
  bool has_graph = false, has_nu = false;
  std::vector<std::string> warnings;

  PipelineRun() = default;
  PipelineRun(const PipelineRun&) = delete;
  PipelineRun& operator=(const PipelineRun&) = delete;
};

std::unique_ptr<PipelineRun> run_pipeline(const DiscreteMeasure& mu, const PipelineConfig& cfg);

}  // namespace flatscan
