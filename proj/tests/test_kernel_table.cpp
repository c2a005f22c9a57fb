#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>

#include "pvsplit/green.hpp"
#include "pvsplit/kernel_table.hpp"
#include "support/oracles.hpp"

using namespace pvsplit;

namespace {
// Ewald evaluator at table-grade accuracy (tables trade accuracy for speed;
// sub-1e-8 work bypasses them).
const GreenEvaluator& table_evaluator() {
  static GreenEvaluator ge{GreenParams{4.0, 3, 32, 1e-8}};
  return ge;
}

double max_probe_error(const KernelTable& table, const GreenEvaluator& ge,
                       int probes) {
  oracle::R2Sequence seq(0.2, 0.8);
  double worst = 0.0;
  int n = 0;
  while (n < probes) {
    double u, v;
    seq.next(u, v);
    const TorusPoint x = wrap(u, v);
    if (torus_distance(x, wrap(0.0, 0.0)) <= KernelTable::kExclusionRadius) continue;
    worst = std::max(worst, norm(table.eval(x) - ge.biot_savart(x)));
    ++n;
  }
  return worst;
}
}  // namespace

TEST_CASE("kernel table reproduces direct evaluation off the singularity") {
  const auto& ge = table_evaluator();
  KernelTable table = build_kernel_table(ge, 256);
  CHECK(max_probe_error(table, ge, 100) < 1e-7);
}

TEST_CASE("kernel table interpolates node values exactly") {
  const auto& ge = table_evaluator();
  KernelTable table = build_kernel_table_from(
      [&](TorusPoint x) { return ge.biot_savart(x); }, 64, 1e-3);
  const int g = table.grid_size();
  double worst = 0.0;
  for (int i = 0; i < g; i += 7) {
    for (int j = 1; j < g; j += 5) {
      const Vec2 k = table.eval(wrap(double(i) / g, double(j) / g));
      worst = std::max(worst, std::fabs(k.x - table.samples()[(std::size_t(i) * g + j) * 2]));
      worst = std::max(worst, std::fabs(k.y - table.samples()[(std::size_t(i) * g + j) * 2 + 1]));
    }
  }
  CHECK(worst < 1e-12);  // B-spline prefilter makes interpolation exact at nodes
}

TEST_CASE("zero kernel tabulates to zero everywhere") {
  KernelTable table = build_kernel_table_from(
      [](TorusPoint) { return Vec2{0.0, 0.0}; }, 64, 1e-12);
  oracle::R2Sequence seq;
  for (int i = 0; i < 200; ++i) {
    double u, v;
    seq.next(u, v);
    const Vec2 k = table.eval(wrap(u, v));
    CHECK(k.x == 0.0);
    CHECK(k.y == 0.0);
  }
}

TEST_CASE("doubling the grid reduces the error at least 8x") {
  const auto& ge = table_evaluator();
  // loose validation tolerance so the coarse build is allowed to exist
  auto direct = [&](TorusPoint x) { return ge.biot_savart(x); };
  KernelTable coarse = build_kernel_table_from(direct, 128, 1e-3);
  KernelTable fine = build_kernel_table_from(direct, 256, 1e-3);
  const double e_coarse = max_probe_error(coarse, ge, 200);
  const double e_fine = max_probe_error(fine, ge, 200);
  CHECK(e_coarse >= 8.0 * e_fine);
}

TEST_CASE("too-coarse tables fail validation with TableAccuracy") {
  const auto& ge = table_evaluator();
  CHECK_THROWS_AS(build_kernel_table(ge, 64), TableAccuracy);
}

TEST_CASE("grid size below 64 is rejected") {
  const auto& ge = table_evaluator();
  CHECK_THROWS_AS(build_kernel_table(ge, 32), InvalidInput);
}

TEST_CASE("table files round-trip bit-exactly") {
  const auto& ge = table_evaluator();
  KernelTable table = build_kernel_table(ge, 256);
  const std::string path = "test_table_roundtrip.pvkt";
  save_kernel_table(table, path, {{"ewald_alpha", ge.params().ewald_alpha}});

  KernelTable loaded = load_kernel_table(path);
  REQUIRE(loaded.grid_size() == table.grid_size());
  CHECK(loaded.target_accuracy() == table.target_accuracy());
  REQUIRE(loaded.samples().size() == table.samples().size());
  CHECK(loaded.samples() == table.samples());  // bitwise

  // interpolation is a pure function of the payload, so it matches bitwise
  oracle::R2Sequence seq(0.3, 0.6);
  for (int i = 0; i < 50; ++i) {
    double u, v;
    seq.next(u, v);
    const Vec2 a = table.eval(wrap(u, v));
    const Vec2 b = loaded.eval(wrap(u, v));
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
  }

  // sidecar exists and is self-describing
  std::FILE* sf = std::fopen((path + ".json").c_str(), "rb");
  REQUIRE(sf != nullptr);
  std::fclose(sf);

  CHECK_THROWS_AS(load_kernel_table("does_not_exist.pvkt"), InvalidInput);

  // corrupted magic is refused
  std::FILE* cf = std::fopen(path.c_str(), "r+b");
  REQUIRE(cf != nullptr);
  std::fputs("XXXX", cf);
  std::fclose(cf);
  CHECK_THROWS_AS(load_kernel_table(path), InvalidInput);

  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
