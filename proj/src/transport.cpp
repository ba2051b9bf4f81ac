#include "flatscan/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "flatscan/error.hpp"
#include "flatscan/lp.hpp"

namespace flatscan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow_p(long double d2, double p) {
  if (p == 2.0) return static_cast<double>(d2);
  if (p == 1.0) return static_cast<double>(std::sqrt(d2));
  return static_cast<double>(std::pow(d2, 0.5L * p));
}

bool canonical_swap(const Mat& x, const Vec& a, const Mat& y, const Vec& b) {
  if (x.cols() != y.cols()) return x.cols() > y.cols();
  for (int j = 0; j < x.cols(); ++j) {
    for (int k = 0; k < x.rows(); ++k)
      if (x(k, j) != y(k, j)) return x(k, j) > y(k, j);
    if (a(j) != b(j)) return a(j) > b(j);
  }
  return false;
}

}  // namespace

Mat cost_matrix(const Mat& x, const Mat& y, double p) {
  Mat C(x.cols(), y.cols());
  for (int j = 0; j < y.cols(); ++j)
    for (int i = 0; i < x.cols(); ++i) {
      long double s = 0.0L;
      for (int k = 0; k < x.rows(); ++k) {
        const long double e = static_cast<long double>(x(k, i)) - y(k, j);
        s += e * e;
      }
      C(i, j) = pow_p(s, p);
    }
  return C;
}

TransportSolution solve_transport(const Vec& a, const Vec& b, const Mat& C) {
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  if (C.rows() != m || C.cols() != n) throw Error(ErrorCode::InvalidArgument, "transport: cost shape mismatch");
  TransportSolution s;
  s.plan = Mat::Zero(m, n);
  s.u = Vec::Zero(m);
  s.v = Vec::Zero(n);
  if (m == 0 || n == 0) return s;
  for (int j = 0; j < n; ++j) s.v(j) = C.col(j).minCoeff();
  // row-major copy: the Dijkstra relaxations sweep rows
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Cr = C;
  for (int i = 0; i < m; ++i) s.u(i) = (Cr.row(i).transpose() - s.v).minCoeff();

  Vec ra = a, rb = b;
  const double tol = 1e-14 * std::max(a.sum(), b.sum());
  // greedy start on tight arcs keeps the flow optimal for the initial duals
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n && ra(i) > tol; ++j) {
      if (rb(j) <= tol || Cr(i, j) - s.u(i) - s.v(j) > 0.0) continue;
      const double f = std::min(ra(i), rb(j));
      s.plan(i, j) += f;
      ra(i) -= f;
      rb(j) -= f;
    }
  std::vector<double> ds(m), dt(n);
  std::vector<int> pred_t(n), pred_s(m);
  std::vector<char> vis_s(m), vis_t(n);

  while (true) {
    bool any_s = false, any_t = false;
    for (int i = 0; i < m; ++i) any_s |= ra(i) > tol;
    for (int j = 0; j < n; ++j) any_t |= rb(j) > tol;
    if (!any_s || !any_t) break;

    std::fill(ds.begin(), ds.end(), kInf);
    std::fill(dt.begin(), dt.end(), kInf);
    std::fill(vis_s.begin(), vis_s.end(), 0);
    std::fill(vis_t.begin(), vis_t.end(), 0);
    for (int i = 0; i < m; ++i) {
      pred_s[i] = -1;
      if (ra(i) > tol) ds[i] = 0.0;
    }
    int target = -1;
    double D = 0.0;
    while (true) {
      int bi = -1, bj = -1;
      double best = kInf;
      for (int i = 0; i < m; ++i)
        if (!vis_s[i] && ds[i] < best) best = ds[i], bi = i;
      for (int j = 0; j < n; ++j)
        if (!vis_t[j] && dt[j] < best) best = dt[j], bj = j, bi = -1;
      if (bi < 0 && bj < 0) break;
      if (bi >= 0) {
        vis_s[bi] = 1;
        for (int j = 0; j < n; ++j) {
          if (vis_t[j]) continue;
          const double r = std::max(0.0, Cr(bi, j) - s.u(bi) - s.v(j));
          if (ds[bi] + r < dt[j]) {
            dt[j] = ds[bi] + r;
            pred_t[j] = bi;
          }
        }
      } else {
        vis_t[bj] = 1;
        if (rb(bj) > tol) {
          target = bj;
          D = dt[bj];
          break;
        }
        for (int i = 0; i < m; ++i) {
          if (vis_s[i] || s.plan(i, bj) <= 0.0) continue;
          if (dt[bj] < ds[i]) {
            ds[i] = dt[bj];
            pred_s[i] = bj;
          }
        }
      }
    }
    if (target < 0) throw Error(ErrorCode::LpFailure, "transport: no augmenting path");

    for (int i = 0; i < m; ++i)
      if (vis_s[i] && ds[i] < D) s.u(i) += D - ds[i];
    for (int j = 0; j < n; ++j)
      if (vis_t[j] && dt[j] < D) s.v(j) -= D - dt[j];

    // bottleneck along the alternating path
    double delta = rb(target);
    int j = target;
    int root = -1;
    while (true) {
      const int i = pred_t[j];
      if (pred_s[i] < 0) {
        root = i;
        break;
      }
      j = pred_s[i];
      delta = std::min(delta, s.plan(i, j));
    }
    delta = std::min(delta, ra(root));
    j = target;
    while (true) {
      const int i = pred_t[j];
      s.plan(i, j) += delta;
      if (pred_s[i] < 0) break;
      j = pred_s[i];
      s.plan(i, j) -= delta;
      if (s.plan(i, j) < tol) s.plan(i, j) = 0.0;
    }
    ra(root) -= delta;
    rb(target) -= delta;
    ++s.augmentations;
  }

  long double cost = 0.0L, dual = 0.0L;
  double infeas = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      cost += static_cast<long double>(s.plan(i, j)) * C(i, j);
      infeas = std::max(infeas, s.u(i) + s.v(j) - C(i, j));
    }
  for (int i = 0; i < m; ++i) dual += static_cast<long double>(a(i)) * s.u(i);
  for (int j = 0; j < n; ++j) dual += static_cast<long double>(b(j)) * s.v(j);
  s.cost = static_cast<double>(cost);
  s.dual_value = static_cast<double>(dual);
  s.dual_infeasibility = infeas;
  s.marginal_residual = std::max((s.plan.rowwise().sum() - a).cwiseAbs().maxCoeff(),
                                 (s.plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff());
  return s;
}

WassersteinResult wasserstein(const Mat& x, const Vec& a_in, const Mat& y, const Vec& b_in, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "wasserstein needs p >= 1");
  if (a_in.size() == 0 || b_in.size() == 0) throw Error(ErrorCode::InvalidArgument, "wasserstein needs nonempty measures");
  if (x.rows() != y.rows()) throw Error(ErrorCode::InvalidArgument, "wasserstein: dimension mismatch");
  WassersteinResult r;
  Vec a = a_in, b = b_in;
  const double ma = a.sum(), mb = b.sum();
  const double rel = std::abs(ma - mb) / std::max(ma, mb);
  r.mass_mismatch = rel;
  if (rel > 1e-9)
    throw Error(ErrorCode::MassMismatch, "masses " + std::to_string(ma) + " vs " + std::to_string(mb));
  if (ma != mb) {
    r.renormalized = true;
    if (ma < mb) a *= mb / ma;
    else b *= ma / mb;
  }
  // Solve in a canonical orientation so that W_p(mu, nu) and W_p(nu, mu) are bit-identical.
  const bool swap = canonical_swap(x, a, y, b);
  const Mat C = swap ? cost_matrix(y, x, p) : cost_matrix(x, y, p);
  TransportSolution s = swap ? solve_transport(b, a, C) : solve_transport(a, b, C);
  if (swap) {
    s.plan.transposeInPlace();
    std::swap(s.u, s.v);
  }
  r.cost = std::max(0.0, s.cost);
  r.value = std::pow(r.cost, 1.0 / p);
  r.plan.pi = std::move(s.plan);
  r.plan.p = p;
  r.u = std::move(s.u);
  r.v = std::move(s.v);
  r.duality_gap = std::abs(s.cost - s.dual_value);
  r.marginal_residual = s.marginal_residual;
  return r;
}

WassersteinResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (mu.empty() || nu.empty()) throw Error(ErrorCode::InvalidArgument, "wasserstein needs nonempty measures");
  return wasserstein(mu.points(), mu.weights(), nu.points(), nu.weights(), p);
}

EntropicResult wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double eps,
                                    int max_iter, double tol) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "entropic regularization must be positive");
  if (mu.empty() || nu.empty()) throw Error(ErrorCode::InvalidArgument, "wasserstein needs nonempty measures");
  Vec a = mu.weights(), b = nu.weights();
  const double ma = a.sum(), mb = b.sum();
  if (std::abs(ma - mb) / std::max(ma, mb) > 1e-9) throw Error(ErrorCode::MassMismatch, "entropic: unequal masses");
  b *= ma / mb;
  const Mat C = cost_matrix(mu.points(), nu.points(), p);
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  const Vec la = a.array().log(), lb = b.array().log();
  Vec f = Vec::Zero(m), g = Vec::Zero(n);

  double cur = eps;
  auto lse_rows = [&](Vec& out) {  // out_i = log sum_j exp((g_j - C_ij)/cur)
    for (int i = 0; i < m; ++i) {
      double mx = -kInf;
      for (int j = 0; j < n; ++j) mx = std::max(mx, (g(j) - C(i, j)) / cur);
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += std::exp((g(j) - C(i, j)) / cur - mx);
      out(i) = mx + std::log(s);
    }
  };
  auto lse_cols = [&](Vec& out) {
    for (int j = 0; j < n; ++j) {
      double mx = -kInf;
      for (int i = 0; i < m; ++i) mx = std::max(mx, (f(i) - C(i, j)) / cur);
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += std::exp((f(i) - C(i, j)) / cur - mx);
      out(j) = mx + std::log(s);
    }
  };

  EntropicResult r;
  Vec tr(m), tc(n);
  // epsilon scaling: warm-start from coarse regularizations, halving down to eps
  std::vector<double> schedule;
  for (double e = std::max(eps, C.maxCoeff()); e > eps; e *= 0.5) schedule.push_back(e);
  schedule.push_back(eps);
  auto row_residual = [&]() {
    lse_rows(tr);
    double err = 0.0;
    for (int i = 0; i < m; ++i) err += std::abs(std::exp(f(i) / cur + tr(i)) - a(i));
    return err / ma;
  };
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    cur = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const double stage_tol = last ? tol : 1e-3;
    for (int it = 1; r.iterations < max_iter; ++it) {
      lse_rows(tr);
      f = cur * (la - tr);
      lse_cols(tc);
      g = cur * (lb - tc);
      ++r.iterations;
      if (it % 10 == 0 || r.iterations == max_iter) {
        r.marginal_residual = row_residual();
        if (r.marginal_residual < stage_tol) {
          r.converged = last;
          break;
        }
      }
    }
  }
  // round the plan onto the exact marginals so the reported cost is that of a feasible plan
  Mat P(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) P(i, j) = std::exp((f(i) + g(j) - C(i, j)) / eps);
  for (int i = 0; i < m; ++i) {
    const double rs = P.row(i).sum();
    if (rs > a(i)) P.row(i) *= a(i) / rs;
  }
  for (int j = 0; j < n; ++j) {
    const double cs = P.col(j).sum();
    if (cs > b(j)) P.col(j) *= b(j) / cs;
  }
  const Vec ea = a - P.rowwise().sum(), eb = b - P.colwise().sum().transpose();
  if (ea.sum() > 0) P += ea * eb.transpose() / ea.sum();
  long double cost = 0.0L;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) cost += static_cast<long double>(P(i, j)) * C(i, j);
  r.cost = static_cast<double>(cost);
  r.value = std::pow(r.cost, 1.0 / p);
  return r;
}

DualityGap w1_duality_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  DualityGap out;
  out.primal = wasserstein(mu, nu, 1.0).value;

  // union of supports with coincident points merged, excess = mu - nu (nu rescaled to mu's mass)
  const double scale = mu.total_mass() / nu.total_mass();
  std::vector<Vec> pts;
  std::vector<double> ex;
  auto add = [&](const Vec& x, double w) {
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (pts[k] == x) {
        ex[k] += w;
        return;
      }
    pts.push_back(x);
    ex.push_back(w);
  };
  for (int i = 0; i < mu.size(); ++i) add(mu.point(i), mu.weight(i));
  for (int j = 0; j < nu.size(); ++j) add(nu.point(j), -scale * nu.weight(j));
  const int N = static_cast<int>(pts.size());
  if (N <= 1) return out;

  // phi_0 = 0; variables psi_i = phi_i + d_i0 >= 0 for i >= 1
  auto dist = [&](int i, int j) { return (pts[i] - pts[j]).norm(); };
  const int nv = N - 1;
  Mat A = Mat::Zero(static_cast<long>(N) * (N - 1), nv);
  Vec rhs(static_cast<long>(N) * (N - 1));
  int row = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      // phi_i - phi_j <= d_ij  ->  psi_i - psi_j <= d_ij + d_i0 - d_j0
      if (i > 0) A(row, i - 1) += 1.0;
      if (j > 0) A(row, j - 1) -= 1.0;
      rhs(row) = std::max(0.0, dist(i, j) + dist(i, 0) - dist(j, 0));
      ++row;
    }
  Vec c(nv);
  double shift = 0.0;
  for (int i = 1; i < N; ++i) {
    c(i - 1) = ex[i];
    shift += ex[i] * dist(i, 0);
  }
  LpResult lp = simplex_max(A, rhs, c);
  if (lp.status != LpResult::Status::Optimal) throw Error(ErrorCode::LpFailure, "W1 dual LP did not reach optimum");
  out.dual = lp.value - shift;
  out.gap = std::abs(out.primal - out.dual);
  return out;
}

}  // namespace flatscan
