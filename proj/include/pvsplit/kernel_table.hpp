#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pvsplit/errors.hpp"
#include "pvsplit/green.hpp"
#include "pvsplit/torus.hpp"

namespace pvsplit {

namespace detail {

// Solve the cyclic tridiagonal system (c_{i-1} + 4 c_i + c_{i+1})/6 = f_i
// (periodic cubic B-spline prefilter) by Sherman-Morrison over the Thomas
// algorithm.  f is overwritten with the solution.
inline void bspline_prefilter_line(std::vector<double>& f,
                                   std::vector<double>& scratch) {
  const std::size_t n = f.size();
  const double a = 1.0 / 6.0, b = 4.0 / 6.0;
  const double gamma = -b;

  // A' = A with modified corners; solve A' y = f and A' q = u,
  // u = (gamma, 0, ..., 0, a), v = (1, 0, ..., 0, a/gamma).
  scratch.assign(2 * n, 0.0);
  double* diag = scratch.data();       // running modified diagonal
  double* q = scratch.data() + n;      // second RHS

  std::vector<double>& y = f;
  q[0] = gamma;
  q[n - 1] = a;

  // forward elimination on both right-hand sides
  double d = b - gamma;
  diag[0] = d;
  for (std::size_t i = 1; i < n; ++i) {
    const double m = a / diag[i - 1];
    double di = b - m * a;
    if (i == n - 1) di = (b - a * a / gamma) - m * a;
    y[i] -= m * y[i - 1];
    q[i] -= m * q[i - 1];
    diag[i] = di;
  }
  // back substitution
  y[n - 1] /= diag[n - 1];
  q[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    y[i] = (y[i] - a * y[i + 1]) / diag[i];
    q[i] = (q[i] - a * q[i + 1]) / diag[i];
  }

  const double vy = y[0] + (a / gamma) * y[n - 1];
  const double vq = q[0] + (a / gamma) * q[n - 1];
  const double s = vy / (1.0 + vq);
  for (std::size_t i = 0; i < n; ++i) y[i] -= s * q[i];
}

}  // namespace detail

// Tabulated Biot-Savart kernel on a uniform periodic grid, interpolated with
// periodic cubic B-splines (4th-order accurate).  The table is only accurate
// away from the kernel singularity; callers keep a direct evaluator for the
// exclusion neighborhood.
class KernelTable {
public:
  // Radius of the neighborhood of 0 excluded from the accuracy contract.
  static constexpr double kExclusionRadius = 0.15;

  // samples: row-major (i*g + j) node pairs (Ku, Kv) at nodes (i/g, j/g).
  KernelTable(int grid_size, std::vector<double> samples, double target_accuracy)
      : g_(grid_size), ta_(target_accuracy), samples_(std::move(samples)) {
    if (g_ < 64) throw InvalidInput("KernelTable: grid_size must be >= 64");
    if (samples_.size() != std::size_t(2) * g_ * g_)
      throw InvalidInput("KernelTable: sample buffer has wrong size");
    if (!(std::isfinite(ta_) && ta_ > 0.0))
      throw InvalidInput("KernelTable: target_accuracy must be positive");
    prefilter();
  }

  int grid_size() const { return g_; }
  double target_accuracy() const { return ta_; }
  const std::vector<double>& samples() const { return samples_; }

  Vec2 eval(TorusPoint x) const {
    const double tu = x.u * g_;
    const double tv = x.v * g_;
    int iu = int(tu), iv = int(tv);
    if (iu >= g_) iu = g_ - 1;  // guards x.u == 1-ulp rounding up
    if (iv >= g_) iv = g_ - 1;
    const double fu = tu - iu;
    const double fv = tv - iv;

    std::array<double, 4> wu, wv;
    weights(fu, wu);
    weights(fv, wv);

    std::array<int, 4> ju, jv;
    for (int s = 0; s < 4; ++s) {
      ju[s] = modg(iu + s - 1);
      jv[s] = modg(iv + s - 1);
    }

    double ku = 0.0, kv = 0.0;
    for (int a = 0; a < 4; ++a) {
      double rowu = 0.0, rowv = 0.0;
      const double* base = coeff_.data() + std::size_t(2) * g_ * ju[a];
      for (int b = 0; b < 4; ++b) {
        const double* c = base + 2 * jv[b];
        rowu += wv[b] * c[0];
        rowv += wv[b] * c[1];
      }
      ku += wu[a] * rowu;
      kv += wu[a] * rowv;
    }
    return {ku, kv};
  }

private:
  int g_;
  double ta_;
  std::vector<double> samples_;
  std::vector<double> coeff_;

  int modg(int i) const { return (i % g_ + g_) % g_; }

  static void weights(double f, std::array<double, 4>& w) {
    const double f2 = f * f, f3 = f2 * f;
    w[0] = (1.0 - 3.0 * f + 3.0 * f2 - f3) / 6.0;
    w[1] = (4.0 - 6.0 * f2 + 3.0 * f3) / 6.0;
    w[2] = (1.0 + 3.0 * f + 3.0 * f2 - 3.0 * f3) / 6.0;
    w[3] = f3 / 6.0;
  }

  void prefilter() {
    coeff_ = samples_;
    std::vector<double> line(g_), scratch;
    // along v (contiguous within a row), both components
    for (int comp = 0; comp < 2; ++comp) {
      for (int i = 0; i < g_; ++i) {
        for (int j = 0; j < g_; ++j) line[j] = coeff_[(std::size_t(i) * g_ + j) * 2 + comp];
        detail::bspline_prefilter_line(line, scratch);
        for (int j = 0; j < g_; ++j) coeff_[(std::size_t(i) * g_ + j) * 2 + comp] = line[j];
      }
      // along u
      for (int j = 0; j < g_; ++j) {
        for (int i = 0; i < g_; ++i) line[i] = coeff_[(std::size_t(i) * g_ + j) * 2 + comp];
        detail::bspline_prefilter_line(line, scratch);
        for (int i = 0; i < g_; ++i) coeff_[(std::size_t(i) * g_ + j) * 2 + comp] = line[i];
      }
    }
  }
};

// Build a table by sampling an arbitrary kernel function (used directly by
// tests with debug kernels; the GreenEvaluator overload below is the
// production path).  `kernel` is called with torus points and must return
// finite values at every node except possibly (0,0), where the sample is
// pinned to (0,0) by the odd symmetry of K.
template <typename KernelFn>
KernelTable build_kernel_table_from(KernelFn&& kernel, int grid_size,
                                    double target_accuracy) {
  if (grid_size < 64) throw InvalidInput("build_kernel_table: grid_size must be >= 64");
  std::vector<double> samples(std::size_t(2) * grid_size * grid_size);
  for (int i = 0; i < grid_size; ++i) {
    for (int j = 0; j < grid_size; ++j) {
      Vec2 k{0.0, 0.0};
      if (i != 0 || j != 0)
        k = kernel(TorusPoint{double(i) / grid_size, double(j) / grid_size});
      samples[(std::size_t(i) * grid_size + j) * 2 + 0] = k.x;
      samples[(std::size_t(i) * grid_size + j) * 2 + 1] = k.y;
    }
  }
  return KernelTable(grid_size, std::move(samples), target_accuracy);
}

// Production builder: samples ge.biot_savart and validates the interpolant
// against direct evaluation at quasi-random probes outside the exclusion
// neighborhood of the singularity.
inline KernelTable build_kernel_table(const GreenEvaluator& ge, int grid_size) {
  KernelTable table = build_kernel_table_from(
      [&](TorusPoint x) { return ge.biot_savart(x); }, grid_size,
      ge.params().target_accuracy);

  const double tol = 10.0 * table.target_accuracy();
  double u = 0.5, v = 0.5;
  constexpr double a1 = 1.0 / 1.32471795724474602596;
  constexpr double a2 = a1 * a1;
  int probes = 0;
  double worst = 0.0;
  while (probes < 200) {
    u += a1;
    v += a2;
    u -= std::floor(u);
    v -= std::floor(v);
    const TorusPoint x{u, v};
    if (torus_distance(x, TorusPoint{0.0, 0.0}) <= KernelTable::kExclusionRadius)
      continue;
    worst = std::max(worst, norm(table.eval(x) - ge.biot_savart(x)));
    ++probes;
  }
  if (worst > tol) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "kernel table validation failed: max probe error %.3e > %.3e "
                  "(grid %d too coarse for target accuracy)",
                  worst, tol, grid_size);
    throw TableAccuracy(msg);
  }
  return table;
}

// ---- binary file format ----
//
// Header: magic "PVKT", version u32 (=1), grid_size u32, target_accuracy f64;
// payload: row-major f64 node pairs (Ku, Kv), native little-endian.
// A JSON sidecar (<path>.json) carries the build parameters.

inline void save_kernel_table(const KernelTable& table, const std::string& path,
                              const nlohmann::json& build_params = {}) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw InvalidInput("save_kernel_table: cannot open " + path);
  const char magic[4] = {'P', 'V', 'K', 'T'};
  const std::uint32_t version = 1;
  const std::uint32_t gs = std::uint32_t(table.grid_size());
  const double ta = table.target_accuracy();
  bool ok = std::fwrite(magic, 1, 4, f) == 4 &&
            std::fwrite(&version, sizeof version, 1, f) == 1 &&
            std::fwrite(&gs, sizeof gs, 1, f) == 1 &&
            std::fwrite(&ta, sizeof ta, 1, f) == 1 &&
            std::fwrite(table.samples().data(), sizeof(double),
                        table.samples().size(), f) == table.samples().size();
  ok = (std::fclose(f) == 0) && ok;
  if (!ok) throw InvalidInput("save_kernel_table: write failed for " + path);

  nlohmann::json sidecar{{"format", "PVKT"},
                         {"version", 1},
                         {"grid_size", table.grid_size()},
                         {"target_accuracy", table.target_accuracy()},
                         {"exclusion_radius", KernelTable::kExclusionRadius}};
  if (!build_params.empty()) sidecar["build_params"] = build_params;
  std::FILE* sf = std::fopen((path + ".json").c_str(), "wb");
  if (!sf) throw InvalidInput("save_kernel_table: cannot open sidecar for " + path);
  const std::string text = sidecar.dump(2) + "\n";
  ok = std::fwrite(text.data(), 1, text.size(), sf) == text.size();
  ok = (std::fclose(sf) == 0) && ok;
  if (!ok) throw InvalidInput("save_kernel_table: sidecar write failed for " + path);
}

inline KernelTable load_kernel_table(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw InvalidInput("load_kernel_table: cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, gs = 0;
  double ta = 0.0;
  bool ok = std::fread(magic, 1, 4, f) == 4 &&
            std::fread(&version, sizeof version, 1, f) == 1 &&
            std::fread(&gs, sizeof gs, 1, f) == 1 &&
            std::fread(&ta, sizeof ta, 1, f) == 1;
  if (!ok || std::memcmp(magic, "PVKT", 4) != 0) {
    std::fclose(f);
    throw InvalidInput("load_kernel_table: not a PVKT file: " + path);
  }
  if (version != 1) {
    std::fclose(f);
    throw InvalidInput("load_kernel_table: unsupported version in " + path);
  }
  if (gs < 64 || gs > 65536) {
    std::fclose(f);
    throw InvalidInput("load_kernel_table: implausible grid size in " + path);
  }
  std::vector<double> samples(std::size_t(2) * gs * gs);
  ok = std::fread(samples.data(), sizeof(double), samples.size(), f) == samples.size();
  std::fclose(f);
  if (!ok) throw InvalidInput("load_kernel_table: truncated payload in " + path);
  return KernelTable(int(gs), std::move(samples), ta);
}

}  // namespace pvsplit
