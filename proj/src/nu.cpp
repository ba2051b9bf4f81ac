#include <algorithm>
#include <cmath>
#include <limits>

#include "flatscan/decomposition.hpp"
#include "flatscan/error.hpp"
#include "flatscan/generators.hpp"

namespace flatscan {

namespace {

// 1 on [0,2], quintic smoothstep down to 0 at 3 (radial profile of h_k).
double radial_bump(double t) {
  if (t <= 2.0) return 1.0;
  if (t >= 3.0) return 0.0;
  const double x = 3.0 - t;
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double area_element(const GraphModel& G, const Vec& u, double step) {
  const int n = G.n();
  Mat J(G.grid.F.rows(), n);
  for (int t = 0; t < n; ++t) {
    Vec a = u, b = u;
    a(t) -= step;
    b(t) += step;
    J.col(t) = (G.eval(b) - G.eval(a)) / (2 * step);
  }
  return std::sqrt((Mat::Identity(n, n) + J.transpose() * J).determinant());
}

}  // namespace

std::vector<std::pair<int, double>> ApproximantNu::partition(const Vec& x) const {
  std::vector<std::pair<int, double>> out;
  const Vec u = graph->grid.L0.coords(x);
  const int idx = graph->grid.index_of(u);
  if (idx < 0) return out;
  double sum = 0.0;
  for (int c : graph->node_cells[idx])
    for (int k = cell_begin[c]; k < cell_begin[c + 1]; ++k) {
      const double v = radial_bump((x - balls[k].z).norm() / balls[k].r);
      if (v > 0) {
        out.push_back({k, v});
        sum += v;
      }
    }
  std::sort(out.begin(), out.end());
  const double s = std::max(1.0, sum);
  for (auto& kv : out) kv.second /= s;
  return out;
}

ApproximantNu build_nu(const TreeDecomposition& T, const GraphModel& G, const NuOptions& opt) {
  const StoppingParams& P = T.params;
  const int n = G.n(), d = T.mu.dim();
  ApproximantNu A;
  A.graph = &G;
  A.c0 = T.c0;

  // covering points: centres of a grid of spacing 0.5 eta l(J) in each J
  const int per_axis = static_cast<int>(std::ceil(1.0 / (0.5 * P.eta)));
  std::vector<double> qweight;  // sigma quadrature weight at z_k
  for (std::size_t i = 0; i < G.whitney.size(); ++i) {
    const WhitneyCube& J = G.whitney[i];
    A.cell_begin.push_back(static_cast<int>(A.balls.size()));
    const double s = J.side / per_axis;
    int cnt = 1;
    for (int t = 0; t < n; ++t) cnt *= per_axis;
    for (int m = 0; m < cnt; ++m) {
      CoveringBall B;
      B.cell = static_cast<int>(i);
      B.in_K0 = J.in_I0;
      B.zp.resize(n);
      int rem = m;
      for (int t = 0; t < n; ++t) {
        B.zp(t) = J.center(t) - 0.5 * J.side + (rem % per_axis + 0.5) * s;
        rem /= per_axis;
      }
      B.z = G.grid.lift(B.zp, G.eval(B.zp));
      B.r = P.eta * J.side;
      A.balls.push_back(std::move(B));
      qweight.push_back(std::pow(s, n) * area_element(G, A.balls.back().zp, 1e-3 * s));
    }
  }
  A.cell_begin.push_back(static_cast<int>(A.balls.size()));
  const int K = static_cast<int>(A.balls.size());

  // integrals of h_k against mu and sigma
  for (int a = 0; a < T.mu.size(); ++a)
    for (const auto& [k, v] : A.partition(T.mu.point(a))) A.balls[k].int_mu += v * T.mu.weight(a);
  std::vector<std::vector<std::pair<int, double>>> node_h(K);
  for (int j = 0; j < K; ++j) {
    node_h[j] = A.partition(A.balls[j].z);
    for (const auto& [k, v] : node_h[j]) A.balls[k].int_sigma += v * qweight[j];
  }
  // balls too small to see atoms: measure the ratio with an unnormalized bump of radius r_min
  const double r_min =
      opt.min_support_radius > 0 ? opt.min_support_radius : 4.0 * T.mu.median_nn_distance();
  bool any_small = false;
  for (const CoveringBall& B : A.balls) any_small |= B.in_K0 && 3.0 * B.r < r_min;
  if (any_small) {
    const DiscreteMeasure sigma = graph_surface_measure(G.grid);
    const double s = r_min / 3.0;
    auto smoothed = [&](const DiscreteMeasure& m, const Vec& z) {
      double v = 0.0;
      for (int a : m.atoms_in({z, r_min})) v += radial_bump((m.point(a) - z).norm() / s) * m.weight(a);
      return v;
    };
    for (CoveringBall& B : A.balls)
      if (B.in_K0 && 3.0 * B.r < r_min) {
        B.int_mu = smoothed(T.mu, B.z);
        B.int_sigma = smoothed(sigma, B.z);
      }
  }
  A.c_min = std::numeric_limits<double>::infinity();
  A.c_max = 0.0;
  for (CoveringBall& B : A.balls) {
    B.c = (B.in_K0 && B.int_sigma > 0) ? B.int_mu / B.int_sigma : A.c0;
    if (B.in_K0) {
      A.c_min = std::min(A.c_min, B.c);
      A.c_max = std::max(A.c_max, B.c);
    }
  }
  if (A.c_max == 0.0) A.c_min = 0.0;

  // nu = mu|R_G + sum_k c_k h_k sigma
  std::vector<Vec> pts;
  std::vector<double> wts;
  for (int a : G.rg_atoms) {
    pts.push_back(T.mu.point(a));
    wts.push_back(T.mu.weight(a));
  }
  A.rg_atoms = static_cast<int>(pts.size());
  for (int j = 0; j < K; ++j) {
    double dens = 0.0;
    for (const auto& [k, v] : node_h[j]) dens += A.balls[k].c * v;
    if (dens * qweight[j] > 0) {
      pts.push_back(A.balls[j].z);
      wts.push_back(dens * qweight[j]);
    }
  }
  Mat X(d, pts.size());
  Vec W(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    X.col(i) = pts[i];
    W(i) = wts[i];
  }
  A.nu = DiscreteMeasure(std::move(X), std::move(W));

  // partition probes inside the union of 2B_k
  std::uint64_t state = opt.seed;
  if (K > 0)
    for (int p = 0; p < opt.probes; ++p) {
      const int k = std::min(K - 1, static_cast<int>(unit_uniform(state) * K));
      Vec dir(d);
      for (int t = 0; t < d; ++t) dir(t) = unit_uniform(state) - 0.5;
      if (dir.norm() == 0) dir(0) = 1;
      const Vec x = A.balls[k].z + dir.normalized() * (1.999 * A.balls[k].r * unit_uniform(state));
      double s = 0.0;
      for (const auto& kv : A.partition(x)) s += kv.second;
      A.partition_error = std::max(A.partition_error, std::abs(s - 1.0));
    }

  // AD scan: centres on the graph inside 2B_0, radii log-uniform
  if (A.nu.size() > 1) {
    const double rmin = 4.0 * std::max(G.grid.h, A.nu.median_nn_distance());
    const double rmax = G.r0;
    std::vector<int> inside;
    for (int i = 0; i < G.grid.nodes(); ++i)
      if ((G.grid.graph_point(i) - G.z0).norm() < 2.0 * G.r0) inside.push_back(i);
    A.ad_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < opt.ad_samples && !inside.empty() && rmax > rmin; ++s) {
      const int i = inside[std::min<int>(inside.size() - 1, static_cast<int>(unit_uniform(state) * inside.size()))];
      const double r = rmin * std::pow(rmax / rmin, unit_uniform(state));
      const double v = A.nu.ball_mass({G.grid.graph_point(i), r}) / std::pow(r, n);
      A.ad_min = std::min(A.ad_min, v);
      A.ad_max = std::max(A.ad_max, v);
    }
    A.ad_ratio = A.ad_min > 0 ? A.ad_max / A.ad_min : std::numeric_limits<double>::infinity();
    A.ad_ok = A.ad_min > 0 && std::isfinite(A.ad_max) && A.ad_ratio <= opt.ad_bound;
  }
  return A;
}

}  // namespace flatscan
