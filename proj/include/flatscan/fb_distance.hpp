#pragma once

#include <cstddef>
#include <vector>

#include "flatscan/measure.hpp"

namespace flatscan {

struct FBOptions {
  std::size_t node_cap = 400;
  // Compute an optimal, fully feasible potential vector (shortest paths over
  // the constraint graph). The transport-dual gradient is always returned.
  bool potentials = true;
  // Orthonormal d x d basis orienting the aggregation cells; identity if empty.
  Mat cell_frame;
};

struct FBResult {
  double value = 0.0;
  Mat nodes;                 // d x K participating nodes (inside B)
  Vec excess;                // signed mass (mu - nu) per node
  Vec potentials;            // optimal phi per node, |phi_i - phi_j| <= |x_i - x_j|, |phi_i| <= dist(x_i, dB)
  Vec gradient;              // phi per node from the transport duals; d(value)/d(excess) where defined
  std::vector<int> node_of;  // input index -> node index, -1 if outside B or cancelled
  bool approximate = false;  // nodes were aggregated to respect node_cap
  double aggregation_error = 0.0;
  double potential_gap = 0.0;  // |value - sum phi_i excess_i|
};

// F_B between signed point masses: excess e_i at x_i (columns of x).
FBResult f_b_solve(const Mat& x, const Vec& e, const Ball& b, const FBOptions& opt = {});

// sup |int phi d(mu - nu)| over 1-Lipschitz phi supported in the open ball B.
FBResult f_b_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Ball& b,
                      const FBOptions& opt = {});

}  // namespace flatscan
