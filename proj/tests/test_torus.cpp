#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pvsplit/torus.hpp"

using namespace pvsplit;

TEST_CASE("wrap maps raw vectors to [0,1)^2") {
  auto p = wrap(0.3, 0.7);
  CHECK(p.u == 0.3);
  CHECK(p.v == 0.7);

  p = wrap(1.25, -0.25);
  CHECK(p.u == Catch::Approx(0.25).margin(1e-15));
  CHECK(p.v == Catch::Approx(0.75).margin(1e-15));

  p = wrap(3.0, -2.0);
  CHECK(p.u == 0.0);
  CHECK(p.v == 0.0);

  // tiny negative values must not escape the invariant via 1.0
  p = wrap(-1e-18, -0.0);
  CHECK(p.u >= 0.0);
  CHECK(p.u < 1.0);
  CHECK(p.v == 0.0);

  CHECK_THROWS_AS(wrap(std::nan(""), 0.0), InvalidInput);
  CHECK_THROWS_AS(wrap(0.0, INFINITY), InvalidInput);
}

TEST_CASE("min_displacement picks the shorter lift") {
  Vec2 r = min_displacement(wrap(0.1, 0.1), wrap(0.9, 0.1));
  CHECK(r.x == Catch::Approx(0.2).margin(1e-15));
  CHECK(r.y == 0.0);

  r = min_displacement(wrap(0.37, 0.81), wrap(0.37, 0.81));
  CHECK(r.x == 0.0);
  CHECK(r.y == 0.0);
}

TEST_CASE("min_displacement resolves half-period ties to +1/2") {
  Vec2 r = min_displacement(wrap(0.6, 0.0), wrap(0.1, 0.5));
  CHECK(r.x == 0.5);
  CHECK(r.y == 0.5);
}

TEST_CASE("min_displacement satisfies wrap(b + r) = a and |r_i| <= 1/2") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    TorusPoint a = wrap(unif(rng), unif(rng));
    TorusPoint b = wrap(unif(rng), unif(rng));
    Vec2 r = min_displacement(a, b);
    CHECK(std::fabs(r.x) <= 0.5);
    CHECK(std::fabs(r.y) <= 0.5);
    TorusPoint back = translate(b, r);
    CHECK(torus_distance(back, a) < 1e-12);
    // antisymmetry away from ties
    if (std::fabs(std::fabs(r.x) - 0.5) > 1e-12 &&
        std::fabs(std::fabs(r.y) - 0.5) > 1e-12) {
      Vec2 s = min_displacement(b, a);
      CHECK(r.x == Catch::Approx(-s.x).margin(1e-12));
      CHECK(r.y == Catch::Approx(-s.y).margin(1e-12));
    }
  }
}

TEST_CASE("Configuration validates its invariants") {
  std::vector<TorusPoint> pos{wrap(0.1, 0.1), wrap(0.5, 0.5)};

  CHECK_NOTHROW(Configuration(pos, {1.0, -1.0}));
  CHECK_THROWS_AS(Configuration(pos, {1.0}), InvalidInput);          // size mismatch
  CHECK_THROWS_AS(Configuration(pos, {1.0, 0.0}), InvalidInput);     // zero intensity
  CHECK_THROWS_AS(Configuration({pos[0]}, {1.0}), InvalidInput);     // N < 2
  CHECK_THROWS_AS(Configuration(pos, {1.0, std::nan("")}), InvalidInput);

  Configuration coincident({wrap(0.2, 0.2), wrap(0.2, 0.2)}, {1.0, 1.0});
  CHECK_FALSE(coincident.is_distinct());
  Configuration distinct(pos, {1.0, 1.0});
  CHECK(distinct.is_distinct());
}

TEST_CASE("config_distance reproduces the defining formula") {
  // one coordinate differing by 0.9 contributes min(0.9, 0.1) = 0.1
  Configuration x({wrap(0.95, 0.3), wrap(0.1, 0.1)}, {1.0, 1.0});
  Configuration y({wrap(0.05, 0.3), wrap(0.1, 0.1)}, {1.0, 1.0});
  CHECK(config_distance(x, y) == Catch::Approx(0.1).margin(1e-12));

  // N=2, all four coordinates differ by 1/2: sqrt(4 * 1/4) = 1
  Configuration a({wrap(0.0, 0.0), wrap(0.25, 0.25)}, {1.0, 1.0});
  Configuration b({wrap(0.5, 0.5), wrap(0.75, 0.75)}, {1.0, 1.0});
  CHECK(config_distance(a, b) == Catch::Approx(1.0).margin(1e-12));

  CHECK(config_distance(x, x) == 0.0);

  Configuration n3({wrap(0.1, 0.1), wrap(0.2, 0.2), wrap(0.3, 0.3)}, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(config_distance(x, n3), InvalidInput);
}

TEST_CASE("config_distance is a metric") {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_config = [&] {
    std::vector<TorusPoint> pos;
    for (int i = 0; i < 3; ++i) pos.push_back(wrap(unif(rng), unif(rng)));
    return Configuration(pos, {1.0, 1.0, 1.0});
  };
  for (int trial = 0; trial < 200; ++trial) {
    Configuration x = random_config(), y = random_config(), z = random_config();
    const double dxy = config_distance(x, y);
    const double dyx = config_distance(y, x);
    const double dxz = config_distance(x, z);
    const double dzy = config_distance(z, y);
    CHECK(dxy >= 0.0);
    CHECK(dxy == Catch::Approx(dyx).margin(1e-14));
    CHECK(dxy <= dxz + dzy + 1e-12);
  }
}

TEST_CASE("config_distance ignores integer coordinate shifts") {
  Configuration x({wrap(0.15, 0.85), wrap(0.4, 0.6)}, {1.0, -2.0});
  std::vector<TorusPoint> shifted;
  for (TorusPoint p : x.positions()) shifted.push_back(wrap(p.u + 3.0, p.v - 2.0));
  Configuration y(shifted, x.intensities());
  CHECK(config_distance(x, y) == Catch::Approx(0.0).margin(1e-12));
}
