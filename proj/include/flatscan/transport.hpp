#pragma once

#include "flatscan/measure.hpp"

namespace flatscan {

// Optimal solution of the balanced transportation problem
//   min sum C_ij pi_ij,  sum_j pi_ij = a_i,  sum_i pi_ij = b_j,  pi >= 0
// together with dual potentials u_i + v_j <= C_ij.
struct TransportSolution {
  double cost = 0.0;
  Mat plan;
  Vec u, v;
  double marginal_residual = 0.0;  // max |row/col sum - marginal|
  double dual_infeasibility = 0.0; // max (u_i + v_j - C_ij)_+
  double dual_value = 0.0;         // a.u + b.v
  int augmentations = 0;
};

// Successive shortest paths on the dense bipartite graph (Hungarian-style
// dual updates). Exact up to floating-point rounding.
TransportSolution solve_transport(const Vec& a, const Vec& b, const Mat& C);

// Cost matrix |x_i - y_j|^p, accumulated in long double.
Mat cost_matrix(const Mat& x, const Mat& y, double p);

struct TransportPlan {
  Mat pi;
  double p = 1.0;
};

struct WassersteinResult {
  double value = 0.0;       // (optimal cost)^(1/p)
  double cost = 0.0;        // optimal cost
  TransportPlan plan;
  Vec u, v;                 // dual potentials
  double duality_gap = 0.0; // |cost - dual value|
  double marginal_residual = 0.0;
  bool renormalized = false;
  double mass_mismatch = 0.0;  // relative mismatch before renormalization
};

WassersteinResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);
// Same, on raw point/weight arrays (columns are points).
WassersteinResult wasserstein(const Mat& x, const Vec& a, const Mat& y, const Vec& b, double p);

struct EntropicResult {
  double value = 0.0;  // (<pi_eps, C>)^(1/p)
  double cost = 0.0;
  double marginal_residual = 0.0;
  int iterations = 0;
  bool converged = false;  // false: value flagged approximate
};

// Log-domain Sinkhorn iterations.
EntropicResult wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                    double eps, int max_iter, double tol = 1e-6);

struct DualityGap {
  double primal = 0.0;  // W1 by the transportation solver
  double dual = 0.0;    // max sum phi (mu - nu) over Lip_1 potentials (simplex)
  double gap = 0.0;
};

DualityGap w1_duality_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

}  // namespace flatscan
