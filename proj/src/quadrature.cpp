#include "flatscan/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "flatscan/error.hpp"

namespace flatscan {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double PlaneQuadrature::mass_in(const Ball& b) const {
  const double r2 = b.r * b.r;
  double s = 0.0;
  for (int i = 0; i < size(); ++i)
    if ((nodes.col(i) - b.z).squaredNorm() < r2) s += weights(i);
  return s;
}

PlaneQuadrature flat_quadrature(const AffinePlane& L, const Ball& b, double delta, std::size_t cap) {
  if (!(delta > 0)) throw Error(ErrorCode::InvalidArgument, "quadrature spacing must be positive");
  const int n = L.n();
  const double h = L.dist(b.z);
  const double R = 3.0 * b.r;
  PlaneQuadrature q;
  q.plane = L.rebased(b.z);
  q.spacing = delta;
  if (!(h < R)) {
    q.nodes.resize(L.d(), 0);
    q.coords.resize(n, 0);
    q.weights.resize(0);
    return q;
  }
  const double rho2 = R * R - h * h;
  const int K = static_cast<int>(std::floor(std::sqrt(rho2) / delta));
  const double expected = unit_ball_volume(n) * std::pow(std::sqrt(rho2) / delta + 1.0, n);
  if (expected > 1.5 * static_cast<double>(cap))
    throw Error(ErrorCode::NodeCapExceeded, "quadrature would need about " +
                                                std::to_string(static_cast<long long>(expected)) + " nodes");

  // odometer over {-K..K}^n, first coordinate most significant
  std::vector<int> k(n, -K);
  std::vector<Vec> us;
  const double w = std::pow(delta, n);
  while (true) {
    Vec u(n);
    for (int j = 0; j < n; ++j) u(j) = delta * k[j];
    // |node - z|^2 = |u|^2 + h^2 by orthogonality; compare against the exact node below
    if (u.squaredNorm() < rho2) us.push_back(u);
    int j = n - 1;
    while (j >= 0 && k[j] == K) k[j--] = -K;
    if (j < 0) break;
    ++k[j];
  }
  std::vector<int> keep;
  const double R2 = R * R;
  Mat nodes(L.d(), us.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    nodes.col(i) = q.plane.at(us[i]);
    if ((nodes.col(i) - b.z).squaredNorm() < R2) keep.push_back(static_cast<int>(i));
  }
  if (keep.size() > cap)
    throw Error(ErrorCode::NodeCapExceeded, "quadrature needs " + std::to_string(keep.size()) + " nodes");
  q.nodes.resize(L.d(), keep.size());
  q.coords.resize(n, keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    q.nodes.col(i) = nodes.col(keep[i]);
    q.coords.col(i) = us[keep[i]];
  }
  q.weights = Vec::Constant(keep.size(), w);
  return q;
}

}  // namespace flatscan
