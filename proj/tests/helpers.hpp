#pragma once

#include <random>

#include "flatscan/lp.hpp"
#include "flatscan/measure.hpp"

namespace testutil {

using flatscan::Mat;
using flatscan::Vec;

inline Mat random_points(std::mt19937_64& rng, int d, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  Mat p(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) p(i, j) = U(rng);
  return p;
}

inline Vec random_weights(std::mt19937_64& rng, int n, double lo = 0.1, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  Vec w(n);
  for (int j = 0; j < n; ++j) w(j) = U(rng);
  return w;
}

inline flatscan::DiscreteMeasure random_measure(std::mt19937_64& rng, int d, int n) {
  return flatscan::DiscreteMeasure(random_points(rng, d, n), random_weights(rng, n));
}

// Haar-ish random rotation via QR of a Gaussian matrix, det forced to +1.
inline Mat random_rotation(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> G;
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = G(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

// Independent F_B oracle: the potential LP solved by the dense simplex.
//   max sum phi_i e_i,  |phi_i - phi_j| <= d_ij,  |phi_i| <= b_i
// using psi_i = phi_i + b_i in [0, 2 b_i].
inline double fb_lp_oracle(const Mat& x, const Vec& e, const Vec& z, double r) {
  std::vector<int> in;
  for (int i = 0; i < x.cols(); ++i)
    if ((x.col(i) - z).squaredNorm() < r * r) in.push_back(i);
  const int K = static_cast<int>(in.size());
  if (K == 0) return 0.0;
  Vec b(K);
  for (int i = 0; i < K; ++i) b(i) = r - (x.col(in[i]) - z).norm();
  Mat A = Mat::Zero(K * (K - 1) + K, K);
  Vec rhs(K * (K - 1) + K);
  int row = 0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      A(row, i) = 1.0;
      A(row, j) = -1.0;
      rhs(row++) = std::max(0.0, (x.col(in[i]) - x.col(in[j])).norm() + b(i) - b(j));
    }
  for (int i = 0; i < K; ++i) {
    A(row, i) = 1.0;
    rhs(row++) = 2.0 * b(i);
  }
  Vec c(K);
  double shift = 0.0;
  for (int i = 0; i < K; ++i) {
    c(i) = e(in[i]);
    shift += e(in[i]) * b(i);
  }
  auto res = flatscan::simplex_max(A, rhs, c);
  return res.value - shift;
}

}  // namespace testutil
