#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flatscan/error.hpp"
#include "flatscan/fb_distance.hpp"
#include "flatscan/plane.hpp"
#include "flatscan/quadrature.hpp"
#include "helpers.hpp"

using namespace flatscan;
using testutil::random_measure;
using testutil::random_rotation;

namespace {

double linear_scan_mass(const DiscreteMeasure& mu, const Ball& b) {
  double s = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    if ((mu.point(i) - b.z).squaredNorm() < b.r * b.r) s += mu.weight(i);
  return s;
}

DiscreteMeasure single(double x, double y, double w = 1.0) {
  Mat p(2, 1);
  p << x, y;
  return DiscreteMeasure(p, Vec::Constant(1, w));
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Discrete Hausdorff distance between sampled unit balls of two planes through 0.
double hausdorff_oracle(const AffinePlane& a, const AffinePlane& b, int samples) {
  auto sample = [&](const AffinePlane& L) {
    std::vector<Vec> pts;
    if (L.n() == 1) {
      for (int k = 0; k < samples; ++k) pts.push_back(L.frame.col(0) * (-1.0 + 2.0 * k / (samples - 1)));
    } else {
      const int m = static_cast<int>(std::sqrt(samples));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          Vec u(2);
          u << -1.0 + 2.0 * i / (m - 1), -1.0 + 2.0 * j / (m - 1);
          if (u.norm() <= 1.0) pts.push_back(L.frame * u);
        }
      for (int k = 0; k < 4 * m; ++k) {  // boundary circle carries the extremes
        const double t = 2 * std::numbers::pi * k / (4 * m);
        Vec u(2);
        u << std::cos(t), std::sin(t);
        pts.push_back(L.frame * u);
      }
    }
    return pts;
  };
  const auto pa = sample(a), pb = sample(b);
  auto directed = [](const std::vector<Vec>& p, const std::vector<Vec>& q) {
    double h = 0.0;
    for (const auto& x : p) {
      double m = 1e300;
      for (const auto& y : q) m = std::min(m, (x - y).norm());
      h = std::max(h, m);
    }
    return h;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace

TEST_CASE("ball_mass uses open balls") {
  CHECK(single(0, 0).ball_mass({v2(0, 0), 1.0}) == 1.0);
  CHECK(single(1, 0).ball_mass({v2(0, 0), 1.0}) == 0.0);
}

TEST_CASE("ball_mass agrees with a linear scan") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    auto mu = random_measure(rng, d, 100);
    Ball b{testutil::random_points(rng, d, 1).col(0), 0.05 + 0.02 * trial};
    CHECK(mu.ball_mass(b) == linear_scan_mass(mu, b));
  }
}

TEST_CASE("nearest neighbour agrees with a linear scan") {
  std::mt19937_64 rng(5);
  auto mu = random_measure(rng, 3, 300);
  for (int i = 0; i < mu.size(); i += 7) {
    int best = -1;
    double bd = 1e300;
    for (int j = 0; j < mu.size(); ++j) {
      if (j == i) continue;
      const double d = (mu.point(i) - mu.point(j)).squaredNorm();
      if (d < bd) bd = d, best = j;
    }
    CHECK(mu.nearest(mu.point(i), i) == best);
  }
}

TEST_CASE("density") {
  Mat p(2, 2);
  p << 0, 0.5, 0, 0;
  DiscreteMeasure mu(p, Vec::Constant(2, 2.0));
  CHECK(density(mu, {v2(0, 0), 2.0}, 1) == doctest::Approx(2.0));
  CHECK(density(mu, {v2(10, 0), 2.0}, 1) == 0.0);
  // joint dilation by lambda with weights scaled by lambda^n
  const double lam = 3.0;
  auto big = DiscreteMeasure(lam * p, Vec::Constant(2, 2.0 * lam));
  CHECK(density(big, {v2(0, 0), 2.0 * lam}, 1) == doctest::Approx(2.0));
}

TEST_CASE("plane basics") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    Mat span = testutil::random_points(rng, 4, 2);
    AffinePlane L(testutil::random_points(rng, 4, 1).col(0), span);
    CHECK(L.orthonormality_error() < 1e-12);
    Vec y = testutil::random_points(rng, 4, 1).col(0);
    const Mat P = L.frame * L.frame.transpose();
    const Vec direct = (y - L.base) - P * (y - L.base);
    CHECK(std::abs(L.dist(y) - direct.norm()) < 1e-12);
    CHECK(L.dist(L.project(y)) < 1e-12);
  }
}

TEST_CASE("plane_angle") {
  AffinePlane x(v2(0, 0), v2(1, 0)), y(v2(3, 1), v2(0, 1));
  CHECK(plane_angle(x, x) == 0.0);
  CHECK(plane_angle(x, y) == doctest::Approx(1.0));
  CHECK(std::abs(hausdorff_oracle(x, y, 10000) - plane_angle(x, y)) < 1e-3);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const int d = 2 + t % 2, n = (d == 3 && t % 4 == 1) ? 2 : 1;
    AffinePlane a(Vec::Zero(d), testutil::random_points(rng, d, n));
    AffinePlane b(Vec::Zero(d), testutil::random_points(rng, d, n));
    const double v = plane_angle(a, b);
    CHECK(v == doctest::Approx(plane_angle(b, a)).epsilon(1e-12));
    CHECK(std::abs(hausdorff_oracle(a, b, 10000) - v) < 0.03);
    // translation invariance
    AffinePlane bt = b;
    bt.base = testutil::random_points(rng, d, 1).col(0);
    CHECK(plane_angle(a, bt) == v);
  }
}

TEST_CASE("flat quadrature") {
  AffinePlane line(v2(0, 0), v2(1, 0));
  auto q = flat_quadrature(line, {v2(0, 0), 1.0}, 0.1);
  CHECK(std::abs(q.total() - 6.0) < 0.3);
  for (int i = 0; i < q.size(); ++i) CHECK(line.dist(q.nodes.col(i)) < 1e-12);

  Vec z3 = Vec::Zero(3);
  Mat span(3, 2);
  span << 1, 0, 0, 1, 0, 0;
  AffinePlane pl(z3, span);
  auto q2 = flat_quadrature(pl, {z3, 1.0}, 0.05);
  CHECK(std::abs(q2.total() - 9.0 * std::numbers::pi) < 0.05 * 9.0 * std::numbers::pi);

  // refinement converges at rate O(delta) to the closed-form disc area
  double prev = std::abs(q2.total() - 9.0 * std::numbers::pi);
  auto q3 = flat_quadrature(pl, {z3, 1.0}, 0.025);
  CHECK(std::abs(q3.total() - 9.0 * std::numbers::pi) <= prev + 1e-12);

  CHECK_THROWS_AS(flat_quadrature(pl, {z3, 1.0}, 1e-4, 1000), Error);
}

TEST_CASE("quadrature consistency on sub-balls") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int n = 1; n <= 2; ++n) {
    const int d = n + 1;
    AffinePlane L(Vec::Zero(d), testutil::random_points(rng, d, n));
    const double r = 1.0, delta = r / 24.0;
    auto q = flat_quadrature(L, {Vec::Zero(d), r}, delta);
    for (int t = 0; t < 40; ++t) {
      const double rb = 10 * delta + (0.8 - 10 * delta) * (0.5 + 0.5 * U(rng));
      Vec c = L.at(Vec::Constant(n, 0.0) + 0.8 * testutil::random_points(rng, n, 1).col(0));
      Vec dir = Vec::Ones(d - n) / std::sqrt(double(d - n));
      Vec off = L.normal_frame() * dir;
      off *= 0.25 * rb * U(rng);
      Ball sub{c + off, rb};
      const double h = L.dist(sub.z);
      const double exact = unit_ball_volume(n) * std::pow(rb * rb - h * h, 0.5 * n);
      CHECK(std::abs(q.mass_in(sub) - exact) <= exact * 3.0 * delta / rb);
    }
  }
}

TEST_CASE("F_B trivial cases") {
  Ball b{v2(0, 0), 1.0};
  auto mu = single(0, 0, 2.5);
  CHECK(f_b_distance(mu, mu, b).value == 0.0);
  auto r = f_b_distance(mu, DiscreteMeasure(), b);
  CHECK(r.value == doctest::Approx(2.5));
  CHECK(r.potentials(0) == doctest::Approx(1.0));
}

TEST_CASE("F_B matches the simplex oracle") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 40; ++t) {
    const int d = 1 + t % 3, k = 2 + t % 5;
    Mat x = testutil::random_points(rng, d, k);
    Vec e = testutil::random_weights(rng, k, -1.0, 1.0);
    Ball b{Vec::Zero(d), 0.9};
    auto r = f_b_solve(x, e, b);
    const double oracle = testutil::fb_lp_oracle(x, e, b.z, b.r);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(r.potential_gap < 1e-9);
    // returned potentials are feasible
    for (int i = 0; i < r.nodes.cols(); ++i) {
      CHECK(std::abs(r.potentials(i)) <= b.r - (r.nodes.col(i) - b.z).norm() + 1e-12);
      for (int j = 0; j < r.nodes.cols(); ++j)
        CHECK(std::abs(r.potentials(i) - r.potentials(j)) <= (r.nodes.col(i) - r.nodes.col(j)).norm() + 1e-12);
    }
  }
}

TEST_CASE("F_B is a pseudo-metric, rigid-motion invariant and scale covariant") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + t % 2;
    auto a = random_measure(rng, d, 6), b = random_measure(rng, d, 7), c = random_measure(rng, d, 5);
    Ball B{Vec::Zero(d), 1.0};
    const double ab = f_b_distance(a, b, B).value, ba = f_b_distance(b, a, B).value;
    const double ac = f_b_distance(a, c, B).value, cb = f_b_distance(c, b, B).value;
    CHECK(std::abs(ab - ba) < 1e-10);
    CHECK(ab <= ac + cb + 1e-8);

    Mat R = random_rotation(rng, d);
    Vec s = testutil::random_points(rng, d, 1).col(0);
    Ball Bt{R * B.z + s, B.r};
    CHECK(std::abs(f_b_distance(a.transformed(R, s), b.transformed(R, s), Bt).value - ab) < 1e-9);
    const double lam = 2.5;
    Ball Bs{lam * B.z, lam * B.r};
    CHECK(f_b_distance(a.transformed(Mat::Identity(d, d), Vec::Zero(d), lam),
                       b.transformed(Mat::Identity(d, d), Vec::Zero(d), lam), Bs)
              .value == doctest::Approx(lam * ab).epsilon(1e-9));
  }
}

TEST_CASE("F_B against a flat measure is convex in c") {
  std::mt19937_64 rng(9);
  AffinePlane L(v2(0, 0.05), v2(1, 0.2));
  Ball B{v2(0, 0), 1.0};
  auto q = flat_quadrature(L, B, B.r / 12);
  for (int t = 0; t < 10; ++t) {
    auto mu = random_measure(rng, 2, 12);
    auto f = [&](double c) {
      return f_b_distance(mu, DiscreteMeasure(q.nodes, c * q.weights), B).value;
    };
    const double c0 = 0.1 + 0.05 * t, c1 = c0 + 0.7, cm = 0.5 * (c0 + c1);
    CHECK(f(cm) <= 0.5 * (f(c0) + f(c1)) + 1e-9);
  }
}

TEST_CASE("F_B aggregation flags approximate values within the reported bound") {
  std::mt19937_64 rng(13);
  auto mu = random_measure(rng, 2, 120), nu = random_measure(rng, 2, 110);
  Ball B{Vec::Zero(2), 1.0};
  auto exact = f_b_distance(mu, nu, B);
  FBOptions o;
  o.node_cap = 60;
  auto approx = f_b_distance(mu, nu, B, o);
  CHECK(approx.approximate);
  CHECK_FALSE(exact.approximate);
  CHECK(approx.nodes.cols() <= 60);
  CHECK(std::abs(approx.value - exact.value) <= approx.aggregation_error + 1e-9);
}
