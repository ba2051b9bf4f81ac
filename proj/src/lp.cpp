#include "flatscan/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "flatscan/error.hpp"

namespace flatscan {

LpResult simplex_max(const Mat& A, const Vec& b, const Vec& c, int max_iter) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (b.size() != m || c.size() != n) throw Error(ErrorCode::InvalidArgument, "simplex: shape mismatch");
  for (int i = 0; i < m; ++i)
    if (b(i) < 0) throw Error(ErrorCode::InvalidArgument, "simplex: needs b >= 0");

  const double eps = 1e-11;
  // tableau rows 0..m-1 constraints, row m objective (reduced costs, negated)
  Mat T = Mat::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = b;
  T.row(m).head(n) = -c.transpose();
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  LpResult res;
  int degenerate_run = 0;
  const int cols = n + m;
  for (int it = 0;; ++it) {
    if (it >= max_iter) {
      res.status = LpResult::Status::IterationLimit;
      break;
    }
    const bool bland = degenerate_run > 50;
    int enter = -1;
    double best = -eps;
    for (int j = 0; j < cols; ++j) {
      if (T(m, j) < best) {
        enter = j;
        if (bland) break;
        best = T(m, j);
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = T(i, enter);
      if (a > eps) {
        const double q = T(i, cols) / a;
        if (q < ratio - 1e-15 || (std::abs(q - ratio) <= 1e-15 && basis[i] < basis[leave])) {
          ratio = q;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      res.status = LpResult::Status::Unbounded;
      break;
    }
    degenerate_run = ratio <= 1e-15 ? degenerate_run + 1 : 0;

    const double piv = T(leave, enter);
    T.row(leave) /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[leave] = enter;
    res.iterations = it + 1;
  }

  res.x = Vec::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) res.x(basis[i]) = T(i, cols);
  res.y = T.row(m).segment(n, m).transpose();
  res.value = c.dot(res.x);
  return res;
}

}  // namespace flatscan
