#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pvsplit/errors.hpp"
#include "pvsplit/green.hpp"
#include "pvsplit/torus.hpp"
#include "pvsplit/trajectory.hpp"

namespace pvsplit {

namespace detail {

inline void require_distinct(const Configuration& x, const char* who) {
  if (!x.is_distinct())
    throw SingularConfiguration(std::string(who) + ": coincident vortices");
}

}  // namespace detail

// Renormalized kinetic energy H(x) = Σ_{i≠j} ξ_i ξ_j G(x_i - x_j)
// (ordered-pair sum: every unordered pair counts twice).
inline double hamiltonian(const GreenEvaluator& ge, const Configuration& x) {
  detail::require_distinct(x, "hamiltonian");
  double h = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const TorusPoint d = wrap(x.position(i).u - x.position(j).u,
                                x.position(i).v - x.position(j).v);
      h += 2.0 * x.intensity(i) * x.intensity(j) * ge.green(d);
    }
  }
  return h;
}

// H(x with vortex i at `to`) − H(x): the Metropolis update cost, evaluated
// incrementally from the 2(N−1) affected pair interactions.
inline double hamiltonian_move_delta(const GreenEvaluator& ge, const Configuration& x,
                                     std::size_t i, TorusPoint to) {
  double dh = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    const TorusPoint d_new = wrap(to.u - x.position(j).u, to.v - x.position(j).v);
    const TorusPoint d_old = wrap(x.position(i).u - x.position(j).u,
                                  x.position(i).v - x.position(j).v);
    dh += 2.0 * x.intensity(i) * x.intensity(j) * (ge.green(d_new) - ge.green(d_old));
  }
  return dh;
}

// Stream function of the single-vortex flow Φ^(i): ψ_i(y) = Σ_{j≠i} ξ_j G(y−x_j),
// with gradient; the moving vortex's conserved quantity.
inline void stream_function(const GreenEvaluator& ge, const Configuration& x,
                            std::size_t i, TorusPoint y, double& psi, Vec2& grad) {
  psi = 0.0;
  grad = {0.0, 0.0};
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    const TorusPoint d = wrap(y.u - x.position(j).u, y.v - x.position(j).v);
    double g;
    Vec2 dg;
    ge.green_and_grad(d, g, dg);
    psi += x.intensity(j) * g;
    grad += x.intensity(j) * dg;
  }
}

// Minimum pairwise torus distance (0 iff some pair coincides).
inline double min_pair_distance(const Configuration& x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      best = std::min(best, torus_distance(x.position(i), x.position(j)));
  return best;
}

// Minimum distance over same-sign pairs (the aggregation-sensitive variant).
inline double same_sign_min_distance(const Configuration& x) {
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (x.intensity(i) * x.intensity(j) <= 0.0) continue;
      best = std::min(best, torus_distance(x.position(i), x.position(j)));
      found = true;
    }
  }
  if (!found)
    throw InvalidInput("same_sign_min_distance: no same-sign pair in configuration");
  return best;
}

// Center-of-vorticity coordinates Σ ξ_i x_i, reduced mod 1.  Computed from
// the canonical representatives in [0,1)^2; a well-defined torus quantity for
// integer intensities, and in general still a legitimate (deterministic)
// observable of the stored configuration.
inline double center_of_vorticity_u(const Configuration& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.intensity(i) * x.position(i).u;
  return wrap_unit(s);
}

inline double center_of_vorticity_v(const Configuration& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.intensity(i) * x.position(i).v;
  return wrap_unit(s);
}

// Offset that keeps L nonnegative: N(N−1)·max(0, −G_min), the tight choice
// for the ordered-pair sum (G attains G_min at the half-period point).
inline double l_offset(std::size_t n) {
  return double(n) * double(n - 1) * std::max(0.0, -kGreenMinimum);
}

// Coefficient Ĉ of the tested minimum-distance bound
// L(x) ≤ −Ĉ·log(min distance) + offset: (ordered pair count)·(1/2π)·1.1.
inline double l_estimate_coefficient(std::size_t n) {
  return double(n) * double(n - 1) * (1.1 / kTwoPi);
}

// The minimum-distance control functional L(x) = Σ_{i≠j} G(x_i−x_j) + c.
// Unweighted (no intensities) by construction; diverges to +∞ as any pair
// collides, which is what makes it a collision barrier.
inline double l_functional(const GreenEvaluator& ge, const Configuration& x) {
  detail::require_distinct(x, "l_functional");
  double l = l_offset(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const TorusPoint d = wrap(x.position(i).u - x.position(j).u,
                                x.position(i).v - x.position(j).v);
      l += 2.0 * ge.green(d);
    }
  }
  return l;
}

inline double sup_l_along(const GreenEvaluator& ge, const Trajectory& traj) {
  double sup = -std::numeric_limits<double>::infinity();
  for (const TrajectorySample& s : traj.samples())
    sup = std::max(sup, l_functional(ge, s.config));
  return sup;
}

// Scalar time series extracted from a trajectory, with summary statistics.
// sup_drift is max_t |value(t) − value(t_0)| / max(1, |value(t_0)|), the same
// normalization used for Hamiltonian drift monitoring.
struct ObservableReport {
  std::string name;
  std::vector<std::pair<double, double>> values;  // (t, value)
  struct Summary {
    double min = 0.0, max = 0.0, mean = 0.0, sup_drift = 0.0;
  } summary;
};

template <typename Fn>
ObservableReport make_observable_report(const std::string& name,
                                        const Trajectory& traj, Fn&& fn) {
  ObservableReport rep;
  rep.name = name;
  rep.values.reserve(traj.samples().size());
  for (const TrajectorySample& s : traj.samples())
    rep.values.emplace_back(s.t, fn(s.config));

  const double v0 = rep.values.front().second;
  const double scale = std::max(1.0, std::fabs(v0));
  double mn = v0, mx = v0, sum = 0.0, drift = 0.0;
  for (const auto& [t, v] : rep.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    sum += v;
    drift = std::max(drift, std::fabs(v - v0) / scale);
  }
  rep.summary = {mn, mx, sum / double(rep.values.size()), drift};
  return rep;
}

}  // namespace pvsplit
