#pragma once

// Test-side oracles, deliberately independent of the library implementation:
//   * oracle_green / oracle_grad_green — the Fourier series of the zero-mean
//     Green function truncated at |k1| <= 200, with each row over k2 summed in
//     closed form (Bernoulli polynomial for k1 = 0, cosh/sinh rows otherwise),
//     so the truncation error decays like e^{-2*pi*200*d} instead of 1/K².
//     No Ewald images, no exponential integrals — a disjoint code path.
//   * reference_rk4 — fixed-step classical RK4 for trajectory cross-checks.
//   * R2 low-discrepancy sequence for quasi-random probe points.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Zero-mean Green function of -Δ on T² via row-resummed Fourier series:
//   G(u,v) = (v² - v + 1/6)/2
//          + Σ_{k=1}^{200} cos(2πku) · cosh(2πk(1/2 - v)) / (2πk · sinh(πk))
// valid for v in [0,1]; axes are swapped so the exponentially decaying
// direction uses the larger distance-to-axis.
inline double green(double u, double v) {
  u -= std::floor(u);
  v -= std::floor(v);
  const double du = std::min(u, 1.0 - u);
  const double dv = std::min(v, 1.0 - v);
  if (dv < du) std::swap(u, v);
  double s = (v * v - v + 1.0 / 6.0) / 2.0;
  for (int k = 1; k <= 200; ++k) {
    const double a = kPi * k;
    const double x = 2.0 * kPi * k * (0.5 - v);
    // cosh(x)/sinh(a) = (e^{x-a} + e^{-x-a}) / (1 - e^{-2a}), overflow-free
    const double t = (std::exp(x - a) + std::exp(-x - a)) / (1.0 - std::exp(-2.0 * a));
    s += std::cos(2.0 * kPi * k * u) * t / (2.0 * kPi * k);
    if (t / (2.0 * kPi * k) < 1e-18) break;
  }
  return s;
}

struct Grad {
  double du, dv;
};

inline Grad grad_green(double u, double v) {
  u -= std::floor(u);
  v -= std::floor(v);
  const double au = std::min(u, 1.0 - u);
  const double av = std::min(v, 1.0 - v);
  const bool swapped = av < au;
  if (swapped) std::swap(u, v);
  double gu = 0.0;
  double gv = v - 0.5;
  for (int k = 1; k <= 200; ++k) {
    const double a = kPi * k;
    const double x = 2.0 * kPi * k * (0.5 - v);
    const double den = 1.0 - std::exp(-2.0 * a);
    const double ch = (std::exp(x - a) + std::exp(-x - a)) / den;
    const double sh = (std::exp(x - a) - std::exp(-x - a)) / den;
    gu -= std::sin(2.0 * kPi * k * u) * ch;
    gv -= std::cos(2.0 * kPi * k * u) * sh;
    if (std::fabs(ch) + std::fabs(sh) < 1e-18) break;
  }
  if (swapped) std::swap(gu, gv);
  return {gu, gv};
}

// Biot-Savart kernel K = -∇⊥G = (∂v G, -∂u G), from the oracle gradient.
inline Grad kernel(double u, double v) {
  const Grad g = grad_green(u, v);
  return {g.dv, -g.du};
}

// R2 low-discrepancy sequence (plastic-constant Kronecker lattice) on [0,1)².
class R2Sequence {
public:
  explicit R2Sequence(double seed_u = 0.5, double seed_v = 0.5)
      : u_(seed_u), v_(seed_v) {}

  void next(double& u, double& v) {
    constexpr double g = 1.32471795724474602596;  // plastic constant
    constexpr double a1 = 1.0 / g;
    constexpr double a2 = 1.0 / (g * g);
    u_ += a1;
    v_ += a2;
    u_ -= std::floor(u_);
    v_ -= std::floor(v_);
    u = u_;
    v = v_;
  }

private:
  double u_, v_;
};

// Classical fixed-step RK4 on R^d, for reference trajectories.  `rhs` is
// called as rhs(t, y, dydt) with y and dydt of equal size.
template <typename Rhs>
void reference_rk4(Rhs&& rhs, std::vector<double>& y, double t0, double t1,
                   std::size_t steps) {
  const std::size_t d = y.size();
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
  const double h = (t1 - t0) / double(steps);
  double t = t0;
  for (std::size_t s = 0; s < steps; ++s) {
    rhs(t, y, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(t + h, tmp, k4);
    for (std::size_t i = 0; i < d; ++i)
      y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = t0 + (double(s) + 1.0) * h;
  }
}

}  // namespace oracle
