#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flatscan/measure.hpp"

namespace flatscan {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0.0;  // measured quantity
  double bound = 0.0;  // allowed maximum
  std::string detail;
};

// Plane-fixed chain on random (center atom, radius) pairs of mu: the distance integral is
// bounded by the W2 plan cost, F_B by W1, and alpha_1 by alpha_2, all at the PCA plane.
std::vector<CheckResult> verify_plane_chain(const DiscreteMeasure& mu, int n, int instances, std::uint64_t seed);
// Exhaustive cube-axiom check of the default lattice.
std::vector<CheckResult> verify_lattice_axioms(const DiscreteMeasure& mu);
// Primal W1 against the Lipschitz-potential dual on subsamples of mu and jittered copies.
std::vector<CheckResult> verify_duality_gap(const DiscreteMeasure& mu, int instances, std::uint64_t seed);

// One JSON object per line.
std::string check_json_line(const CheckResult& c);

}  // namespace flatscan
