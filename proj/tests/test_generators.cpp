#include <cmath>

#include "doctest.h"
#include "flatscan/coefficients.hpp"
#include "flatscan/error.hpp"
#include "flatscan/generators.hpp"

using namespace flatscan;

TEST_CASE("generators are deterministic") {
  for (const char* kind : {"flat_plane", "lipschitz_graph", "circle_arc", "cantor4", "two_lines", "plane_plus_spike"}) {
    GeneratorSpec s;
    s.kind = kind;
    s.count = 200;
    s.depth = 3;
    s.seed = 17;
    const DiscreteMeasure a = generate(s), b = generate(s);
    CHECK(a.points() == b.points());
    CHECK(a.weights() == b.weights());
  }
  GeneratorSpec s;
  s.kind = "lipschitz_graph";
  s.seed = 1;
  const DiscreteMeasure a = generate(s);
  s.seed = 2;
  CHECK(a.points() != generate(s).points());
}

TEST_CASE("flat plane has unit density and zero beta") {
  GeneratorSpec s;
  s.count = 1000;
  const DiscreteMeasure mu = generate(s);
  CHECK(mu.size() == 1000);
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 100; i < 900; i += 50)
    for (double r : {0.01, 0.05, 0.1}) CHECK(beta_p(mu, mu.point(i), r, 2, 1).value < 1e-12);

  GeneratorSpec s2;
  s2.n = 2;
  s2.d = 3;
  s2.count = 400;
  const DiscreteMeasure sq = generate(s2);
  CHECK(sq.size() == 400);
  CHECK(sq.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sq.points().row(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cantor4 mass and self-similarity") {
  for (int depth = 1; depth <= 5; ++depth) {
    GeneratorSpec s;
    s.kind = "cantor4";
    s.depth = depth;
    const DiscreteMeasure c = generate(s);
    CHECK(c.size() == (1 << (2 * depth)));
    CHECK(c.total_mass() == doctest::Approx(1.0).epsilon(1e-12));

    s.depth = depth - 1;
    const DiscreteMeasure parent = generate(s);
    // each corner quadrant, blown up by 4, is the depth - 1 set
    for (int qx = 0; qx < 2; ++qx)
      for (int qy = 0; qy < 2; ++qy) {
        std::vector<Vec> pts;
        for (int i = 0; i < c.size(); ++i) {
          const Vec p = c.point(i);
          if ((p(0) > 0.5) == (qx == 1) && (p(1) > 0.5) == (qy == 1)) {
            Vec u = p;
            u(0) = 4.0 * (p(0) - 0.75 * qx);
            u(1) = 4.0 * (p(1) - 0.75 * qy);
            pts.push_back(u);
          }
        }
        REQUIRE(static_cast<int>(pts.size()) == parent.size());
        for (const Vec& u : pts) {
          const int j = parent.nearest(u);
          CHECK((parent.point(j) - u).norm() < 1e-12);
        }
      }
  }
  GeneratorSpec bad;
  bad.kind = "cantor4";
  bad.d = 3;
  CHECK_THROWS_AS(generate(bad), Error);
}

TEST_CASE("lipschitz graph respects its slope bound") {
  for (std::uint64_t seed : {1, 2, 3}) {
    GeneratorSpec s;
    s.kind = "lipschitz_graph";
    s.count = 200;
    s.lipschitz = 0.05;
    s.seed = seed;
    const DiscreteMeasure g = generate(s);
    double worst = 0.0;
    for (int i = 0; i < g.size(); ++i)
      for (int j = i + 1; j < g.size(); ++j) {
        const Vec a = g.point(i), b = g.point(j);
        worst = std::max(worst, std::abs(a(1) - b(1)) / std::abs(a(0) - b(0)));
      }
    CHECK(worst <= 0.05);
    CHECK(worst >= 0.01);
    // arclength weights exceed the flat cell length by at most the slope correction
    const double h = 1.0 / 200;
    for (int i = 0; i < g.size(); ++i) {
      CHECK(g.weight(i) >= h);
      CHECK(g.weight(i) <= h * std::sqrt(1 + 0.05 * 0.05) + 1e-15);
    }
  }
  GeneratorSpec s;
  s.kind = "lipschitz_graph";
  s.amplitude = 0.002;
  s.lipschitz = 1.0;
  const DiscreteMeasure g = generate(s);
  CHECK(g.points().row(1).cwiseAbs().maxCoeff() <= 0.002);
}

TEST_CASE("arc, crossing lines, spike and rescaled kinds") {
  GeneratorSpec s;
  s.kind = "circle_arc";
  s.count = 500;
  s.radius = 2.0;
  s.arc = 1.0;
  const DiscreteMeasure arc = generate(s);
  CHECK(arc.total_mass() == doctest::Approx(2.0).epsilon(1e-12));
  for (int i = 0; i < arc.size(); ++i) CHECK(arc.point(i).norm() == doctest::Approx(2.0).epsilon(1e-12));

  s = GeneratorSpec{};
  s.kind = "two_lines";
  s.count = 100;
  s.angle = 0.5;
  const DiscreteMeasure x = generate(s);
  CHECK(x.size() == 200);
  CHECK(x.total_mass() == doctest::Approx(2.0).epsilon(1e-12));

  s = GeneratorSpec{};
  s.kind = "plane_plus_spike";
  s.count = 100;
  s.spike_weight = 50;
  const DiscreteMeasure sp = generate(s);
  CHECK(sp.size() == 101);
  CHECK(sp.weight(100) == doctest::Approx(50.0 * sp.weight(0)));
  CHECK(sp.point(100)(1) == doctest::Approx(s.spike_height));

  s = GeneratorSpec{};
  s.kind = "rescaled";
  s.base = "flat_plane";
  s.count = 100;
  s.scale = 3.0;
  s.mass_scale = 2.0;
  s.rotation = 0.3;
  s.shift = 1.0;
  const DiscreteMeasure r = generate(s);
  CHECK(r.total_mass() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((r.point(99) - r.point(0)).norm() == doctest::Approx(3.0 * 0.99).epsilon(1e-12));
  CHECK(std::atan2(r.point(99)(1) - r.point(0)(1), r.point(99)(0) - r.point(0)(0)) == doctest::Approx(0.3));
}

TEST_CASE("generator spec parsing") {
  GeneratorSpec s;
  s.set("kind", "cantor4");
  s.set("depth", "3");
  s.set("seed", "9");
  CHECK(s.kind == "cantor4");
  CHECK(s.depth == 3);
  CHECK(s.seed == 9);
  CHECK_THROWS_AS(s.set("depth", "2.5"), Error);
  CHECK_THROWS_AS(s.set("bogus", "1"), Error);
  CHECK_THROWS_AS(s.set("radius", "abc"), Error);
  GeneratorSpec t;
  for (const auto& [k, v] : s.to_map()) t.set(k, v);
  CHECK(t.to_map() == s.to_map());
  s.kind = "nope";
  CHECK_THROWS_AS(generate(s), Error);
}
