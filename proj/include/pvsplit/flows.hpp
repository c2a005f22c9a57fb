#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "pvsplit/errors.hpp"
#include "pvsplit/green.hpp"
#include "pvsplit/kernel_table.hpp"
#include "pvsplit/observables.hpp"
#include "pvsplit/schedule.hpp"
#include "pvsplit/torus.hpp"
#include "pvsplit/trajectory.hpp"

namespace pvsplit {

enum class KernelMode {
  exact,        // singular Biot-Savart kernel, Ewald-evaluated
  table,        // bicubic table away from the singularity, Ewald inside
  regularized,  // K_δ = (1 − χ_δ)K, globally smooth
};

struct KernelSpec {
  KernelMode mode = KernelMode::exact;
  double delta = 0.0;                  // regularized mode only
  const KernelTable* table = nullptr;  // table mode only
};

inline KernelSpec exact_kernel() { return {}; }
inline KernelSpec regularized_kernel_spec(double delta) {
  return {KernelMode::regularized, delta, nullptr};
}
inline KernelSpec table_kernel(const KernelTable& table) {
  return {KernelMode::table, 0.0, &table};
}

struct FlowParams {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = 0.05;
  double collision_radius = 1e-6;  // deterministic-flow guard
  KernelSpec kernel;
  // Debug/negative-control hook: scales the u-component of the moving
  // vortex's velocity inside single-component integrations (1.0 = off).
  // A non-unit value also disables the level-set projection, since the
  // faulted field conserves nothing.
  double fault_u_scale = 1.0;

  void validate() const {
    auto tol_ok = [](double t) { return t >= 1e-14 && t <= 1e-3; };
    if (!tol_ok(rel_tol) || !tol_ok(abs_tol))
      throw InvalidInput("FlowParams: tolerances must lie in [1e-14, 1e-3]");
    if (!(max_step > 0.0 && max_step <= 1.0))
      throw InvalidInput("FlowParams: max_step must lie in (0, 1]");
    if (!(collision_radius > 0.0 && collision_radius <= 0.5))
      throw InvalidInput("FlowParams: collision_radius must lie in (0, 0.5]");
    if (!(std::isfinite(fault_u_scale) && fault_u_scale > 0.0))
      throw InvalidInput("FlowParams: fault_u_scale must be positive");
    if (kernel.mode == KernelMode::regularized &&
        !(kernel.delta > 0.0 && kernel.delta <= 0.25))
      throw InvalidInput("FlowParams: regularized delta must lie in (0, 1/4]");
    if (kernel.mode == KernelMode::table && kernel.table == nullptr)
      throw InvalidInput("FlowParams: table mode without a table");
  }
};

struct FlowDiagnostics {
  double h_drift_rel = 0.0;  // |H(out) − H(in)| / max(1, |H(in)|); exact/table only
  long accepted_steps = 0;
  long rejected_steps = 0;
};

namespace detail {

// Mode-dispatched evaluation of K(a - b).
class KernelContext {
public:
  KernelContext(const GreenEvaluator& ge, const KernelSpec& spec)
      : ge_(ge), spec_(spec) {}

  const GreenEvaluator& evaluator() const { return ge_; }
  KernelMode mode() const { return spec_.mode; }
  bool singular() const { return spec_.mode != KernelMode::regularized; }

  Vec2 eval(TorusPoint a, TorusPoint b) const {
    const TorusPoint d = wrap(a.u - b.u, a.v - b.v);
    switch (spec_.mode) {
      case KernelMode::exact:
        return ge_.biot_savart(d);
      case KernelMode::table:
        if (torus_distance(d, TorusPoint{0.0, 0.0}) < KernelTable::kExclusionRadius)
          return ge_.biot_savart(d);
        return spec_.table->eval(d);
      case KernelMode::regularized:
        return regularized_kernel(ge_, d, spec_.delta);
    }
    return {0.0, 0.0};
  }

private:
  const GreenEvaluator& ge_;
  KernelSpec spec_;
};

inline void require_distinct_for(const KernelContext& kc, const Configuration& x,
                                 const char* who) {
  if (kc.singular() && !x.is_distinct())
    throw SingularConfiguration(std::string(who) +
                                ": coincident vortices with a singular kernel");
}

// ---- Dormand–Prince 5(4) with step-size control ----
//
// rhs(t, y, dydt); post(t, y) runs after every accepted step and may mutate y
// (level-set projection) or throw (collision guard).  No FSAL reuse: post may
// have invalidated the last stage.
template <typename Rhs, typename Post>
void dopri5(Rhs&& rhs, std::vector<double>& y, double t0, double t1,
            double rel_tol, double abs_tol, double max_step, Post&& post,
            FlowDiagnostics* diag = nullptr) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b − b̂ (5th-order weights minus the embedded 4th-order ones)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t d = y.size();
  if (!(t1 >= t0)) throw InvalidInput("dopri5: t1 must be >= t0");
  if (t1 == t0) return;

  std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), tmp(d), ynew(d);
  double t = t0;
  double h = std::min(max_step, t1 - t0);
  long guard = 0;

  while (t < t1) {
    if (++guard > 20000000L)
      throw Error("dopri5: step budget exhausted (integration stalled)");
    h = std::min(h, t1 - t);

    rhs(t, y, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + h / 5, tmp, k2);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + 3 * h / 10, tmp, k3);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + 4 * h / 5, tmp, k4);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + 8 * h / 9, tmp, k5);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                           a65 * k5[i]);
    rhs(t + h, tmp, k6);
    for (std::size_t i = 0; i < d; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                            b6 * k6[i]);
    rhs(t + h, ynew, k7);

    double err2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                            e6 * k6[i] + e7 * k7[i]);
      const double sc = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      err2 += (e / sc) * (e / sc);
    }
    const double err = std::sqrt(err2 / double(d));

    if (err <= 1.0) {
      t += h;
      y = ynew;
      post(t, y);
      if (diag) ++diag->accepted_steps;
      const double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
      h *= std::clamp(grow, 0.2, 5.0);
      h = std::min(h, max_step);
    } else {
      if (diag) ++diag->rejected_steps;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (!(h > 1e-15 * std::max(1.0, std::fabs(t))))
        throw Error("dopri5: step size underflow (velocity field too stiff)");
    }
  }
}

inline TorusPoint point_at(const std::vector<double>& y, std::size_t i) {
  return wrap(y[2 * i], y[2 * i + 1]);
}

}  // namespace detail

// Full velocity field of eq. of motion: v_i(x) = Σ_{j≠i} ξ_j K(x_i − x_j).
// Pairs are evaluated once and accumulated antisymmetrically, so momentum-type
// cancellations hold to roundoff.
inline std::vector<Vec2> velocity(const GreenEvaluator& ge, const Configuration& x,
                                  const KernelSpec& spec = {}) {
  detail::KernelContext kc(ge, spec);
  detail::require_distinct_for(kc, x, "velocity");
  std::vector<Vec2> v(x.size(), Vec2{0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const Vec2 kij = kc.eval(x.position(i), x.position(j));
      v[i] += x.intensity(j) * kij;
      v[j] -= x.intensity(i) * kij;
    }
  }
  return v;
}

// The i-th component field on its own (the generator of Φ^(i)).
inline Vec2 single_component_velocity(const GreenEvaluator& ge, const Configuration& x,
                                      std::size_t i, const KernelSpec& spec = {}) {
  if (i >= x.size()) throw InvalidInput("single_component_velocity: index out of range");
  detail::KernelContext kc(ge, spec);
  Vec2 v{0.0, 0.0};
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    if (kc.singular() && torus_distance(x.position(i), x.position(j)) < kSingularThreshold)
      throw SingularConfiguration("single_component_velocity: vortex coincides with another");
    v += x.intensity(j) * kc.eval(x.position(i), x.position(j));
  }
  return v;
}

// Deterministic flow Φ_t: adaptive integration of the full system.  Energy
// drift is monitored (not enforced); a pair closing below collision_radius
// aborts with NearCollision carrying the stop time.
inline Configuration deterministic_flow(const GreenEvaluator& ge, const Configuration& x,
                                        double t, const FlowParams& p,
                                        FlowDiagnostics* diag = nullptr) {
  p.validate();
  if (!(t >= 0.0 && t <= 1.0))
    throw InvalidInput("deterministic_flow: t must lie in [0,1]");
  detail::KernelContext kc(ge, p.kernel);
  detail::require_distinct_for(kc, x, "deterministic_flow");

  const std::size_t n = x.size();
  Configuration cur = x;
  auto check_collision = [&](double at, const Configuration& c) {
    if (min_pair_distance(c) < p.collision_radius) {
      char msg[96];
      std::snprintf(msg, sizeof msg,
                    "pair distance fell below collision radius %.3e at t = %.6f",
                    p.collision_radius, at);
      throw NearCollision(msg, at);
    }
  };
  check_collision(0.0, cur);

  const double h_in = kc.singular() ? hamiltonian(ge, x) : 0.0;

  std::vector<double> y(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[2 * i] = x.position(i).u;
    y[2 * i + 1] = x.position(i).v;
  }

  auto rhs = [&](double, const std::vector<double>& yy, std::vector<double>& dy) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < 2; ++k) dy[2 * i + k] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const TorusPoint pi = detail::point_at(yy, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec2 kij = kc.eval(pi, detail::point_at(yy, j));
        dy[2 * i] += x.intensity(j) * kij.x;
        dy[2 * i + 1] += x.intensity(j) * kij.y;
        dy[2 * j] -= x.intensity(i) * kij.x;
        dy[2 * j + 1] -= x.intensity(i) * kij.y;
      }
    }
  };
  auto post = [&](double at, std::vector<double>& yy) {
    for (std::size_t i = 0; i < n; ++i) cur.set_position(i, detail::point_at(yy, i));
    check_collision(at, cur);
  };

  detail::dopri5(rhs, y, 0.0, t, p.rel_tol, p.abs_tol, p.max_step, post, diag);

  for (std::size_t i = 0; i < n; ++i) cur.set_position(i, detail::point_at(y, i));
  if (diag && kc.singular())
    diag->h_drift_rel = std::fabs(hamiltonian(ge, cur) - h_in) / std::max(1.0, std::fabs(h_in));
  return cur;
}

// Single-vortex flow Φ^(i)_s: vortex i moves in the frozen field of the rest.
// With the singular kernel the motion follows a level curve of the stream
// function ψ_i, and a post-step Newton projection pins it there, conserving H
// to near machine precision; the flow is globally defined in s.
inline Configuration single_vortex_flow(const GreenEvaluator& ge, const Configuration& x,
                                        std::size_t i, double s, const FlowParams& p,
                                        FlowDiagnostics* diag = nullptr) {
  p.validate();
  if (i >= x.size()) throw InvalidInput("single_vortex_flow: index out of range");
  if (!(std::isfinite(s) && s >= 0.0))
    throw InvalidInput("single_vortex_flow: duration must be finite and nonnegative");
  detail::KernelContext kc(ge, p.kernel);
  // The moving vortex must start separated in every mode; spectator pairs are
  // additionally required distinct only when the kernel is singular.
  for (std::size_t j = 0; j < x.size(); ++j)
    if (j != i && torus_distance(x.position(i), x.position(j)) < kSingularThreshold)
      throw SingularConfiguration("single_vortex_flow: moving vortex coincides with another");
  detail::require_distinct_for(kc, x, "single_vortex_flow");
  if (s == 0.0) return x;

  const bool project = kc.singular() && p.fault_u_scale == 1.0;
  double psi0 = 0.0;
  Vec2 grad0;
  if (project) stream_function(ge, x, i, x.position(i), psi0, grad0);
  const double psi_scale = std::max(1.0, std::fabs(psi0));

  std::vector<double> y{x.position(i).u, x.position(i).v};

  auto rhs = [&](double, const std::vector<double>& yy, std::vector<double>& dy) {
    const TorusPoint pos = wrap(yy[0], yy[1]);
    Vec2 v{0.0, 0.0};
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j == i) continue;
      v += x.intensity(j) * kc.eval(pos, x.position(j));
    }
    dy[0] = v.x * p.fault_u_scale;
    dy[1] = v.y;
  };
  auto post = [&](double, std::vector<double>& yy) {
    if (!project) return;
    // Newton steps back onto the level set {ψ_i = ψ_i(start)}
    for (int it = 0; it < 3; ++it) {
      double psi;
      Vec2 g;
      stream_function(ge, x, i, wrap(yy[0], yy[1]), psi, g);
      const double miss = psi - psi0;
      if (std::fabs(miss) <= 1e-13 * psi_scale) break;
      const double g2 = norm2(g);
      if (g2 < 1e-30) break;  // critical point: projection direction undefined
      yy[0] -= miss * g.x / g2;
      yy[1] -= miss * g.y / g2;
    }
  };

  detail::dopri5(rhs, y, 0.0, s, p.rel_tol, p.abs_tol, p.max_step, post, diag);

  Configuration out = x;
  out.set_position(i, wrap(y[0], y[1]));
  if (diag && kc.singular()) {
    double psi_end;
    Vec2 g_end;
    stream_function(ge, out, i, out.position(i), psi_end, g_end);
    const double dh = 2.0 * x.intensity(i) * (psi_end - psi0);
    diag->h_drift_rel = std::fabs(dh) / std::max(1.0, std::fabs(hamiltonian(ge, x)));
  }
  return out;
}

namespace detail {

// ⌊q⌋ with a tiny forward nudge so that q within a few ulps below an integer
// (the inevitable roundoff of m*t at grid times t = k/m) still counts the
// completed slot.  The nudge trades a 1e-9-wide sliver of each slot for exact
// grid-time consistency between the jumping and interpolated flows.
inline long completed_units(double q) {
  return long(std::floor(q + 1e-9));
}

}  // namespace detail

// Jumping flow Φ^m_t: ℓ = ⌊mt⌋ complete sweeps, each sweep composing the N
// single-vortex flows in index order with durations τ_s/m (global 1-based
// slot index s); constant between sweep completions.
class JumpingWalker {
public:
  JumpingWalker(const GreenEvaluator& ge, Configuration x, int m,
                const TauSchedule& sched, FlowParams p)
      : ge_(ge), cur_(std::move(x)), m_(m), sched_(sched), p_(std::move(p)) {
    p_.validate();
    if (m_ < 1) throw InvalidInput("jumping flow: m must be >= 1");
    detail::KernelContext kc(ge_, p_.kernel);
    detail::require_distinct_for(kc, cur_, "jumping_flow");
  }

  // Monotone in t; returns the state after ⌊mt⌋ complete sweeps.
  const Configuration& advance_to(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("jumping flow: t must lie in [0,1]");
    if (t < last_t_) throw InvalidInput("JumpingWalker: time must not decrease");
    last_t_ = t;
    const long target_sweeps = detail::completed_units(double(m_) * t);
    const std::size_t n = cur_.size();
    while (sweeps_ < target_sweeps) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t slot = std::size_t(sweeps_) * n + k + 1;
        cur_ = single_vortex_flow(ge_, cur_, k, sched_.tau(slot) / double(m_), p_);
      }
      ++sweeps_;
    }
    return cur_;
  }

  long completed_sweeps() const { return sweeps_; }

private:
  const GreenEvaluator& ge_;
  Configuration cur_;
  int m_;
  const TauSchedule& sched_;
  FlowParams p_;
  long sweeps_ = 0;
  double last_t_ = 0.0;
};

inline Configuration jumping_flow(const GreenEvaluator& ge, const Configuration& x,
                                  double t, int m, const TauSchedule& sched,
                                  const FlowParams& p) {
  JumpingWalker w(ge, x, m, sched, p);
  return w.advance_to(t);
}

// Interpolated flow Ψ^m_t: wall-clock slot s (1-based, width 1/(Nm)) moves
// vortex (s−1) mod N with speed Nτ_s; equivalently, by reparametrization,
// vortex (s−1) mod N flows for internal duration θ·τ_s/m where θ ∈ [0,1] is
// the wall-clock progress through the slot.  Coincides with Φ^m at integer
// multiples of 1/m.
class InterpolatedWalker {
public:
  InterpolatedWalker(const GreenEvaluator& ge, Configuration x, int m,
                     const TauSchedule& sched, FlowParams p)
      : ge_(ge), cur_(std::move(x)), m_(m), sched_(sched), p_(std::move(p)) {
    p_.validate();
    if (m_ < 1) throw InvalidInput("interpolated flow: m must be >= 1");
    detail::KernelContext kc(ge_, p_.kernel);
    detail::require_distinct_for(kc, cur_, "interpolated_flow");
  }

  const Configuration& advance_to(double t) {
    if (!(t >= 0.0 && t <= 1.0))
      throw InvalidInput("interpolated flow: t must lie in [0,1]");
    if (t < last_t_) throw InvalidInput("InterpolatedWalker: time must not decrease");
    last_t_ = t;

    const std::size_t n = cur_.size();
    const long total_slots = long(n) * m_;
    long full = detail::completed_units(double(n) * double(m_) * t);
    full = std::min(full, total_slots);

    while (completed_ < full) {
      const std::size_t slot = std::size_t(completed_) + 1;
      const double span = sched_.tau(slot) / double(m_);
      const double remaining = span - consumed_;
      if (remaining > 0.0)
        cur_ = single_vortex_flow(ge_, cur_, vortex_of(slot), remaining, p_);
      ++completed_;
      consumed_ = 0.0;
    }

    if (completed_ < total_slots) {
      const double theta = std::clamp(double(n) * double(m_) * t - double(completed_), 0.0, 1.0);
      const std::size_t slot = std::size_t(completed_) + 1;
      const double target = theta * sched_.tau(slot) / double(m_);
      if (target > consumed_) {
        cur_ = single_vortex_flow(ge_, cur_, vortex_of(slot), target - consumed_, p_);
        consumed_ = target;
      }
    }
    return cur_;
  }

private:
  const GreenEvaluator& ge_;
  Configuration cur_;
  int m_;
  const TauSchedule& sched_;
  FlowParams p_;
  long completed_ = 0;    // finished slots
  double consumed_ = 0.0; // internal time already integrated in current slot
  double last_t_ = 0.0;

  std::size_t vortex_of(std::size_t slot) const { return (slot - 1) % cur_.size(); }
};

inline Configuration interpolated_flow(const GreenEvaluator& ge, const Configuration& x,
                                       double t, int m, const TauSchedule& sched,
                                       const FlowParams& p) {
  InterpolatedWalker w(ge, x, m, sched, p);
  return w.advance_to(t);
}

// ---- trajectory sampling ----

namespace detail {

inline void check_time_grid(const std::vector<double>& ts) {
  if (ts.empty()) throw InvalidInput("time grid must be nonempty");
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (!(ts[k] >= 0.0 && ts[k] <= 1.0))
      throw InvalidInput("time grid must lie within [0,1]");
    if (k > 0 && !(ts[k] > ts[k - 1]))
      throw InvalidInput("time grid must be strictly increasing");
  }
}

}  // namespace detail

inline std::vector<double> uniform_time_grid(std::size_t count, double t_max = 1.0) {
  if (count < 2 || !(t_max > 0.0 && t_max <= 1.0))
    throw InvalidInput("uniform_time_grid: need count >= 2 and t_max in (0,1]");
  std::vector<double> ts(count);
  for (std::size_t k = 0; k < count; ++k)
    ts[k] = t_max * double(k) / double(count - 1);
  return ts;
}

inline Trajectory sample_deterministic_trajectory(const GreenEvaluator& ge,
                                                  const Configuration& x,
                                                  const std::vector<double>& ts,
                                                  const FlowParams& p) {
  detail::check_time_grid(ts);
  std::vector<TrajectorySample> samples;
  samples.reserve(ts.size());
  Configuration cur = x;
  double t_prev = 0.0;
  for (double t : ts) {
    if (t > t_prev) {
      // segment restart: Φ_{t} = Φ_{t - t_prev} ∘ Φ_{t_prev}
      cur = deterministic_flow(ge, cur, t - t_prev, p);
      t_prev = t;
    } else if (t == 0.0) {
      cur = deterministic_flow(ge, cur, 0.0, p);  // runs the entry checks
    }
    samples.push_back({t, cur});
  }
  return Trajectory(FlowKind::deterministic, std::move(samples));
}

inline Trajectory sample_single_vortex_trajectory(const GreenEvaluator& ge,
                                                  const Configuration& x, std::size_t i,
                                                  const std::vector<double>& ts,
                                                  const FlowParams& p) {
  // single flows are global in s, so the grid is only required increasing
  if (ts.empty()) throw InvalidInput("time grid must be nonempty");
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (!(ts[k] >= 0.0)) throw InvalidInput("time grid must be nonnegative");
    if (k > 0 && !(ts[k] > ts[k - 1]))
      throw InvalidInput("time grid must be strictly increasing");
  }
  std::vector<TrajectorySample> samples;
  samples.reserve(ts.size());
  Configuration cur = x;
  double s_prev = 0.0;
  for (double s : ts) {
    if (s > s_prev) {
      cur = single_vortex_flow(ge, cur, i, s - s_prev, p);
      s_prev = s;
    }
    samples.push_back({s, cur});
  }
  return Trajectory(FlowKind::single, std::move(samples), 0, int(i));
}

inline Trajectory sample_jumping_trajectory(const GreenEvaluator& ge, const Configuration& x,
                                            const std::vector<double>& ts, int m,
                                            const TauSchedule& sched, const FlowParams& p) {
  detail::check_time_grid(ts);
  JumpingWalker w(ge, x, m, sched, p);
  std::vector<TrajectorySample> samples;
  samples.reserve(ts.size());
  for (double t : ts) samples.push_back({t, w.advance_to(t)});
  return Trajectory(FlowKind::jumping, std::move(samples), m, -1, sched.fingerprint());
}

inline Trajectory sample_interpolated_trajectory(const GreenEvaluator& ge,
                                                 const Configuration& x,
                                                 const std::vector<double>& ts, int m,
                                                 const TauSchedule& sched,
                                                 const FlowParams& p) {
  detail::check_time_grid(ts);
  InterpolatedWalker w(ge, x, m, sched, p);
  std::vector<TrajectorySample> samples;
  samples.reserve(ts.size());
  for (double t : ts) samples.push_back({t, w.advance_to(t)});
  return Trajectory(FlowKind::interpolated, std::move(samples), m, -1, sched.fingerprint());
}

// ---- convergence of Ψ^m to Φ ----

struct ConvergenceRow {
  int m;
  double mean_sup_error;  // sup over the grid of d_T(Ψ^m_t, Φ_t), seed-averaged
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  int decreasing_pairs = 0;  // consecutive rows with strictly decreasing error
};

inline ConvergenceTable convergence_sweep(const GreenEvaluator& ge, const Configuration& x,
                                          const std::vector<int>& m_list,
                                          const std::vector<std::uint64_t>& seeds,
                                          TauDistribution distribution,
                                          const std::vector<double>& ts,
                                          const FlowParams& p) {
  p.validate();
  detail::check_time_grid(ts);
  if (m_list.empty() || seeds.empty())
    throw InvalidInput("convergence_sweep: need at least one m and one seed");
  if (p.kernel.mode == KernelMode::regularized &&
      !(min_pair_distance(x) > 2.0 * p.kernel.delta))
    throw InvalidInput("convergence_sweep: regularized mode needs min distance > 2*delta");

  const Trajectory reference = sample_deterministic_trajectory(ge, x, ts, p);

  ConvergenceTable table;
  for (int m : m_list) {
    double acc = 0.0;
    for (std::uint64_t seed : seeds) {
      TauSchedule sched(distribution, seed);
      InterpolatedWalker w(ge, x, m, sched, p);
      double sup = 0.0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        const Configuration& psi = w.advance_to(ts[k]);
        sup = std::max(sup, config_distance(psi, reference.samples()[k].config));
      }
      acc += sup;
    }
    table.rows.push_back({m, acc / double(seeds.size())});
  }
  for (std::size_t r = 0; r + 1 < table.rows.size(); ++r)
    if (table.rows[r + 1].mean_sup_error < table.rows[r].mean_sup_error)
      ++table.decreasing_pairs;
  return table;
}

// ---- Liouville check ----

// Jacobian determinant of an arbitrary configuration map by central finite
// differences (each coordinate perturbed ±h), with displacements read through
// the minimal torus lift.  Volume preservation means the result is 1.
template <typename MapFn>
double jacobian_determinant(const Configuration& x, MapFn&& map, double h = 1e-6) {
  if (!(h > 0.0 && h < 0.1)) throw InvalidInput("jacobian_determinant: bad step");
  const std::size_t n = x.size();
  const std::size_t dim = 2 * n;
  std::vector<double> mat(dim * dim);

  for (std::size_t c = 0; c < dim; ++c) {
    const std::size_t j = c / 2;
    const bool is_u = (c % 2) == 0;
    auto shifted = [&](double sign) {
      TorusPoint pj = x.position(j);
      Vec2 d{is_u ? sign * h : 0.0, is_u ? 0.0 : sign * h};
      Configuration y = x.with_position(j, translate(pj, d));
      return map(y);
    };
    const Configuration plus = shifted(+1.0);
    const Configuration minus = shifted(-1.0);
    for (std::size_t r = 0; r < n; ++r) {
      const Vec2 diff = min_displacement(plus.position(r), minus.position(r));
      mat[(2 * r) * dim + c] = diff.x / (2.0 * h);
      mat[(2 * r + 1) * dim + c] = diff.y / (2.0 * h);
    }
  }

  // LU with partial pivoting
  double det = 1.0;
  for (std::size_t k = 0; k < dim; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < dim; ++r)
      if (std::fabs(mat[r * dim + k]) > std::fabs(mat[piv * dim + k])) piv = r;
    if (piv != k) {
      for (std::size_t c = 0; c < dim; ++c)
        std::swap(mat[k * dim + c], mat[piv * dim + c]);
      det = -det;
    }
    const double pivot = mat[k * dim + k];
    if (pivot == 0.0) return 0.0;
    det *= pivot;
    for (std::size_t r = k + 1; r < dim; ++r) {
      const double f = mat[r * dim + k] / pivot;
      for (std::size_t c = k; c < dim; ++c) mat[r * dim + c] -= f * mat[k * dim + c];
    }
  }
  return det;
}

}  // namespace pvsplit
