#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pvsplit/errors.hpp"
#include "pvsplit/torus.hpp"

namespace pvsplit {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Distance-to-origin threshold below which the singular kernel refuses to
// evaluate (below the roundoff resolution of wrapped coordinates).
inline constexpr double kSingularThreshold = 1e-14;

// Minimum of the zero-mean Green function, attained at the half-period
// point (1/2,1/2).  Used as the offset that keeps the L functional
// nonnegative; re-derived from the evaluator in the test suite.
inline constexpr double kGreenMinimum = -0.055158900038162886;

namespace detail {

// Exponential integral E1(z) = ∫_z^∞ e^-t/t dt for z > 0.
inline double exp_integral_e1(double z) {
  if (z > 700.0) return 0.0;  // below double underflow anyway
  return -std::expint(-z);
}

}  // namespace detail

struct GreenParams {
  double ewald_alpha = 4.0;   // Gaussian splitting parameter
  int real_cutoff = 3;        // image shells: n ∈ [-real_cutoff, real_cutoff]^2
  int fourier_cutoff = 32;    // reciprocal sum bound on |k|∞ (pruned further)
  double target_accuracy = 1e-12;
};

// Periodic zero-mean Green function of -Δ on T^2 and the derived kernels.
//
// Ewald splitting: with φ(r) = (α²/π) e^{-α² r²} of unit mass,
//   G(x) = Σ_n (1/4π) E1(α²|x+n|²)                        (screened images)
//        + Σ_{k≠0} e^{-π²|k|²/α²} cos(2π k·x) / (4π²|k|²)  (reciprocal sum)
//        - 1/(4α²)                                         (zero-mean shift)
// Both sums converge like Gaussians, so a handful of images and modes give
// machine precision; the constant is the exact mean of the image part.
class GreenEvaluator {
public:
  explicit GreenEvaluator(GreenParams params = {}) : p_(params) {
    if (!(std::isfinite(p_.ewald_alpha) && p_.ewald_alpha > 0.0))
      throw InvalidInput("GreenEvaluator: ewald_alpha must be positive");
    if (p_.real_cutoff < 1 || p_.real_cutoff > 16)
      throw InvalidInput("GreenEvaluator: real_cutoff must be in [1,16]");
    if (p_.fourier_cutoff < 1 || p_.fourier_cutoff > 64)
      throw InvalidInput("GreenEvaluator: fourier_cutoff must be in [1,64]");
    if (!(std::isfinite(p_.target_accuracy) && p_.target_accuracy > 0.0))
      throw InvalidInput("GreenEvaluator: target_accuracy must be positive");
    build_tables();
    validate();
  }

  const GreenParams& params() const { return p_; }

  double green(TorusPoint x) const {
    Vec2 c = centered(x);
    double g;
    accumulate<false>(c, &g, nullptr);
    return g;
  }

  Vec2 grad_green(TorusPoint x) const {
    Vec2 c = centered(x);
    Vec2 grad;
    accumulate<true>(c, nullptr, &grad);
    return grad;
  }

  void green_and_grad(TorusPoint x, double& value, Vec2& grad) const {
    Vec2 c = centered(x);
    accumulate<true>(c, &value, &grad);
  }

  // Biot-Savart kernel K = -∇⊥G with (a,b)⊥ = (-b,a), i.e. K = (∂v G, -∂u G).
  Vec2 biot_savart(TorusPoint x) const {
    Vec2 g = grad_green(x);
    return {g.y, -g.x};
  }

private:
  GreenParams p_;

  // Image offsets (covering-lattice translates) that can contribute above
  // the pruning threshold for |centered x| ≤ √2/2, plus that threshold.
  struct Image {
    double nx, ny;
  };
  std::vector<Image> images_;
  double real_r2_cut_ = 0.0;

  // Reciprocal terms over a half lattice (k1 > 0, any k2; or k1 = 0, k2 > 0);
  // wv multiplies cos(2πk·x) in the value, wg = 4π²|k|²·... see accumulate().
  struct Mode {
    int k1, k2;
    double wv;  // 2·e^{-π²|k|²/α²} / (4π²|k|²)   (±k pair combined)
    double wg;  // 2π·wv, gradient weight
  };
  std::vector<Mode> modes_;
  int kmax_ = 0;

  static Vec2 centered(TorusPoint x) {
    return min_displacement(x, TorusPoint{0.0, 0.0});
  }

  void build_tables() {
    const double alpha2 = p_.ewald_alpha * p_.ewald_alpha;
    const double prune = p_.target_accuracy * 1e-4;

    // Real-space part: E1(α²r²) < prune once α²r² is large enough; any image
    // whose closest approach to the centered fundamental cell exceeds that
    // radius can never contribute.
    double z_cut = 40.0;  // E1(40) ~ 1e-19, generous floor
    while (detail::exp_integral_e1(z_cut) > prune && z_cut < 700.0) z_cut += 5.0;
    real_r2_cut_ = z_cut / alpha2;
    const double reach = std::sqrt(real_r2_cut_) + 0.7072;  // + max |centered x|
    for (int nx = -p_.real_cutoff; nx <= p_.real_cutoff; ++nx)
      for (int ny = -p_.real_cutoff; ny <= p_.real_cutoff; ++ny)
        if (nx * nx + ny * ny <= reach * reach)
          images_.push_back({double(nx), double(ny)});

    for (int k1 = 0; k1 <= p_.fourier_cutoff; ++k1) {
      for (int k2 = (k1 == 0 ? 1 : -p_.fourier_cutoff); k2 <= p_.fourier_cutoff; ++k2) {
        const double kk = double(k1) * k1 + double(k2) * k2;
        const double wv = 2.0 * std::exp(-kPi * kPi * kk / alpha2) / (4.0 * kPi * kPi * kk);
        const double wg = kTwoPi * wv;
        if (wv < prune && wg * std::sqrt(kk) < prune) continue;
        modes_.push_back({k1, k2, wv, wg});
        kmax_ = std::max({kmax_, std::abs(k1), std::abs(k2)});
      }
    }
  }

  // Single pass over images and modes; grad is filled only when WithGrad.
  template <bool WithGrad>
  void accumulate(Vec2 c, double* value, Vec2* grad) const {
    const double r2c = norm2(c);
    if (r2c < kSingularThreshold * kSingularThreshold)
      throw SingularPoint("kernel evaluated at zero separation");

    const double alpha2 = p_.ewald_alpha * p_.ewald_alpha;
    double g = -1.0 / (4.0 * alpha2);
    Vec2 dg{0.0, 0.0};

    for (const Image& im : images_) {
      const Vec2 d{c.x + im.nx, c.y + im.ny};
      const double r2 = norm2(d);
      if (r2 > real_r2_cut_) continue;
      g += detail::exp_integral_e1(alpha2 * r2) / (4.0 * kPi);
      if constexpr (WithGrad) {
        // d/dx E1(α²r²)/4π = -e^{-α²r²} x/(2π r²)
        dg -= (std::exp(-alpha2 * r2) / (kTwoPi * r2)) * d;
      }
    }

    // Axis trig tables cos/sin(2π k u), built by angle-addition recurrence.
    double cu[65], su[65], cv[65], sv[65];
    cu[0] = cv[0] = 1.0;
    su[0] = sv[0] = 0.0;
    if (kmax_ >= 1) {
      cu[1] = std::cos(kTwoPi * c.x);
      su[1] = std::sin(kTwoPi * c.x);
      cv[1] = std::cos(kTwoPi * c.y);
      sv[1] = std::sin(kTwoPi * c.y);
      for (int k = 2; k <= kmax_; ++k) {
        cu[k] = cu[k - 1] * cu[1] - su[k - 1] * su[1];
        su[k] = su[k - 1] * cu[1] + cu[k - 1] * su[1];
        cv[k] = cv[k - 1] * cv[1] - sv[k - 1] * sv[1];
        sv[k] = sv[k - 1] * cv[1] + cv[k - 1] * sv[1];
      }
    }

    for (const Mode& m : modes_) {
      const int a1 = std::abs(m.k2);
      const double c2 = cv[a1];
      const double s2 = (m.k2 < 0) ? -sv[a1] : sv[a1];
      const double cs = cu[m.k1] * c2 - su[m.k1] * s2;  // cos(2π k·x)
      g += m.wv * cs;
      if constexpr (WithGrad) {
        const double sn = su[m.k1] * c2 + cu[m.k1] * s2;  // sin(2π k·x)
        dg.x -= m.wg * m.k1 * sn;
        dg.y -= m.wg * m.k2 * sn;
      }
    }

    if (value) *value = g;
    if constexpr (WithGrad) *grad = dg;
  }

  // Construction-time self-checks: zero mean and evenness.
  //
  // The grid mean of the log-singular image part would be limited to O(h²)
  // by the midpoint rule, far above target accuracy, so the image part is
  // accounted for semi-analytically instead: the kept images tile at least
  // the square |y|∞ ≤ real_cutoff + 1/2 around the centered cell, and
  //   ∫_{R²} E1(α²|y|²)/4π dy = 1/(4α²),
  //   ∫_{|y| ≥ R} E1(α²|y|²)/4π dy = (e^{-z} - z·E1(z))/(4α²), z = α²R²,
  // which bounds the truncation deficit.  The reciprocal-plus-constant part
  // is averaged on a midpoint grid fine enough that no retained mode aliases
  // to zero, so its grid mean is its true mean up to roundoff.
  void validate() const {
    const int n = std::max(64, 2 * kmax_ + 2);
    const double alpha2 = p_.ewald_alpha * p_.ewald_alpha;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const TorusPoint x{(i + 0.5) / n, (j + 0.5) / n};
        const Vec2 c = centered(x);
        double img = 0.0;
        for (const Image& im : images_) {
          const Vec2 d{c.x + im.nx, c.y + im.ny};
          const double r2 = norm2(d);
          if (r2 <= real_r2_cut_)
            img += detail::exp_integral_e1(alpha2 * r2) / (4.0 * kPi);
        }
        mean += green(x) - img;
      }
    }
    const double R = p_.real_cutoff + 0.5;
    const double z = alpha2 * R * R;
    const double tail = (std::exp(-z) - z * detail::exp_integral_e1(z)) / (4.0 * alpha2);
    mean = mean / (double(n) * n) + 1.0 / (4.0 * alpha2) - tail;
    if (std::fabs(mean) > 10.0 * p_.target_accuracy)
      throw InvalidInput("GreenEvaluator: zero-mean check failed; "
                         "increase real_cutoff/fourier_cutoff or lower target_accuracy");

    const double pts[8][2] = {{0.137, 0.318}, {0.741, 0.529}, {0.062, 0.911},
                              {0.433, 0.187}, {0.858, 0.246}, {0.391, 0.672},
                              {0.215, 0.044}, {0.969, 0.583}};
    for (const auto& q : pts) {
      const double a = green(wrap(q[0], q[1]));
      const double b = green(wrap(-q[0], -q[1]));
      if (std::fabs(a - b) > p_.target_accuracy)
        throw InvalidInput("GreenEvaluator: evenness check failed");
    }
  }
};

// Radial C² cutoff supported in the δ-ball: χ_δ = 1 for d ≤ δ/2, 0 for
// d ≥ δ, quintic smoothstep in between.
class Mollifier {
public:
  explicit Mollifier(double delta) : delta_(delta) {
    if (!(std::isfinite(delta) && delta > 0.0 && delta <= 0.25))
      throw InvalidInput("Mollifier: delta must lie in (0, 1/4]");
  }

  double delta() const { return delta_; }

  double chi(double r) const {
    const double s = r / delta_;
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    const double t = 2.0 * s - 1.0;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  }

private:
  double delta_;
};

// K_δ(x) = (1 - χ_δ(x)) K(x): agrees with K outside the δ-ball, vanishes on
// the δ/2-ball (in particular at the singularity), and is C² in between.
inline Vec2 regularized_kernel(const GreenEvaluator& ge, TorusPoint x, double delta) {
  const Mollifier chi(delta);
  const double r = torus_distance(x, TorusPoint{0.0, 0.0});
  if (r <= 0.5 * delta) return {0.0, 0.0};  // never evaluates the singular K
  const Vec2 k = ge.biot_savart(x);
  if (r >= delta) return k;
  return (1.0 - chi.chi(r)) * k;
}

}  // namespace pvsplit
