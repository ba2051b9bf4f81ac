#include "flatscan/verify.hpp"

#include <algorithm>
#include <cmath>

#include "flatscan/coefficients.hpp"
#include "flatscan/error.hpp"
#include "flatscan/fb_distance.hpp"
#include "flatscan/generators.hpp"
#include "flatscan/io.hpp"
#include "flatscan/lattice.hpp"
#include "flatscan/quadrature.hpp"
#include "flatscan/transport.hpp"
#include "json.hpp"

namespace flatscan {

namespace {

constexpr double kTol = 1e-6;

CheckResult le(const std::string& suite, const std::string& name, double value, double bound,
               const std::string& detail = "") {
  return {suite, name, value <= bound, value, bound, detail};
}

// Atoms drawn without replacement, at most k, ascending.
std::vector<int> sample_atoms(int N, int k, std::uint64_t& state) {
  std::vector<int> idx(N);
  for (int i = 0; i < N; ++i) idx[i] = i;
  k = std::min(k, N);
  for (int i = 0; i < k; ++i) {
    const int j = i + std::min(N - i - 1, static_cast<int>(unit_uniform(state) * (N - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<CheckResult> verify_plane_chain(const DiscreteMeasure& mu, int n, int instances, std::uint64_t seed) {
  if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "empty measure");
  if (n < 1 || n >= mu.dim()) throw Error(ErrorCode::InvalidArgument, "need 1 <= n < d");
  std::vector<CheckResult> out;
  std::uint64_t state = seed;
  const double diam = diameter(mu);
  const double r_lo = 4.0 * mu.median_nn_distance();
  const int d = mu.dim();
  // atom count inside 3B kept small enough for the dense transport solver
  const std::size_t cap = 120;
  for (int t = 0; t < instances; ++t) {
    const int c = std::min(mu.size() - 1, static_cast<int>(unit_uniform(state) * mu.size()));
    const double hi = std::max(r_lo, 0.25 * diam);
    const double r = r_lo * std::pow(hi / r_lo, unit_uniform(state));
    const Ball b{mu.point(c), r};
    const std::string tag = "atom=" + std::to_string(c) + " r=" + fmt(r);
    const CoefficientResult beta = beta_p(mu, b.z, b.r, 2, n);
    if (!beta.defined()) continue;
    const AffinePlane L = beta.plane.rebased(b.z);
    // both sides share the quadrature, so its spacing only needs to keep the node count small
    const double delta = std::max(b.r / 24.0, 6.0 * b.r / std::pow(190.0, 1.0 / n));
    const LocalizedPair lp = localized_pair(mu, b, L, delta, cap, Mat(), 2);
    const double m3 = mu.ball_mass(b.scaled(3.0));
    const WassersteinResult w2 = wasserstein(lp.x, lp.a, lp.y, lp.b, 2);
    const WassersteinResult w1 = wasserstein(lp.x, lp.a, lp.y, lp.b, 1);

    // aggregation moves mass by at most lp.aggregation_error in W2
    double lhs = 0.0;
    for (int i : mu.atoms_in(b)) lhs += mu.weight(i) * std::pow(L.dist(mu.point(i)), 2);
    double plan = 0.0;
    for (int i = 0; i < lp.x.cols(); ++i)
      for (int j = 0; j < lp.y.cols(); ++j) plan += w2.plan.pi(i, j) * (lp.x.col(i) - lp.y.col(j)).squaredNorm();
    const double slack = kTol + lp.aggregation_error;
    out.push_back(le("plane_chain", "dist_le_w2_plan", std::sqrt(lhs), std::sqrt(plan) + slack, tag));

    const PlaneQuadrature q = flat_quadrature(L, b, delta);
    Mat X(d, lp.x.cols() + q.size());
    Vec e(lp.x.cols() + q.size());
    X.leftCols(lp.x.cols()) = lp.x;
    X.rightCols(q.size()) = q.nodes;
    e.head(lp.x.cols()) = lp.a;
    e.tail(q.size()) = -lp.a_BL * q.weights;
    FBOptions fo;
    fo.node_cap = static_cast<std::size_t>(X.cols()) + 1;
    const double fb = f_b_solve(X, e, b, fo).value;
    out.push_back(le("plane_chain", "fb_le_w1", fb, w1.value + kTol * (1.0 + w1.value), tag));

    out.push_back(le("plane_chain", "alpha1_le_alpha2", w1.value / (b.r * m3),
                     w2.value / (b.r * std::sqrt(m3)) + kTol, tag));
  }
  return out;
}

std::vector<CheckResult> verify_lattice_axioms(const DiscreteMeasure& mu) {
  if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "empty measure");
  std::vector<CheckResult> out;
  CubeLattice L;
  try {
    L = build_lattice(mu);
  } catch (const Error& e) {
    out.push_back({"lattice_axioms", "build", false, 1.0, 0.0, e.what()});
    return out;
  }
  const std::vector<AxiomViolation> v = check_axioms(L, mu);
  std::string detail = std::to_string(L.cubes.size()) + " cubes, depth " + std::to_string(L.depth);
  if (!v.empty()) detail += "; first: cube " + std::to_string(v[0].cube) + " " + v[0].axiom + " " + v[0].detail;
  out.push_back(le("lattice_axioms", "violations", static_cast<double>(v.size()), 0.0, detail));
  return out;
}

std::vector<CheckResult> verify_duality_gap(const DiscreteMeasure& mu, int instances, std::uint64_t seed) {
  if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "empty measure");
  std::vector<CheckResult> out;
  std::uint64_t state = seed;
  const double jitter = std::max(mu.median_nn_distance(), 1e-12) * 4.0;
  for (int t = 0; t < instances; ++t) {
    const std::vector<int> a = sample_atoms(mu.size(), 10, state);
    const std::vector<int> b = sample_atoms(mu.size(), 10, state);
    const DiscreteMeasure A = mu.subset(a);
    Mat Y = mu.subset(b).points();
    for (int j = 0; j < Y.cols(); ++j)
      for (int k = 0; k < Y.rows(); ++k) Y(k, j) += jitter * (unit_uniform(state) - 0.5);
    Vec w = mu.subset(b).weights();
    w *= A.total_mass() / w.sum();
    const DiscreteMeasure B(Y, w);
    const DualityGap g = w1_duality_gap(A, B);
    out.push_back(le("duality_gap", "w1_primal_vs_dual", g.gap, 1e-7 * (1.0 + g.primal),
                     "primal=" + fmt(g.primal) + " dual=" + fmt(g.dual)));
  }
  return out;
}

std::string check_json_line(const CheckResult& c) {
  nlohmann::ordered_json j = {{"suite", c.suite}, {"check", c.name}, {"pass", c.passed},
                              {"value", c.value}, {"bound", c.bound}, {"detail", c.detail}};
  return j.dump();
}

}  // namespace flatscan
