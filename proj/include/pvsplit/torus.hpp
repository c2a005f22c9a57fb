#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pvsplit/errors.hpp"

namespace pvsplit {

// Plain 2-vector in the covering space R^2 (velocities, displacements,
// gradients).  TorusPoint below is the wrapped representative on [0,1)^2.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }

// Counterclockwise quarter turn: (a,b) -> (-b,a).
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

// Reduce a real to its canonical representative in [0,1).  Floor-based so a
// single operation suffices for arbitrarily large inputs; the stray result
// 1.0 (possible when r is a tiny negative number) is folded back to 0.
inline double wrap_unit(double r) {
  double w = r - std::floor(r);
  return (w >= 1.0) ? 0.0 : w;
}

// A point of the flat torus T^2 = [0,1)^2.  Both coordinates are always
// wrapped; construct through wrap() for raw vectors.
struct TorusPoint {
  double u = 0.0;
  double v = 0.0;
};

inline TorusPoint wrap(Vec2 p) {
  if (!is_finite(p)) throw InvalidInput("wrap: non-finite coordinates");
  return {wrap_unit(p.x), wrap_unit(p.y)};
}

inline TorusPoint wrap(double u, double v) { return wrap(Vec2{u, v}); }

// Translate a torus point by a covering-space displacement.
inline TorusPoint translate(TorusPoint p, Vec2 d) {
  return wrap(Vec2{p.u + d.x, p.v + d.y});
}

namespace detail {

// Minimal lift of a scalar difference, in (-1/2, 1/2].  Ties |d| = 1/2 are
// resolved to +1/2 so the result is deterministic across platforms.
inline double min_lift(double diff) {
  double d = wrap_unit(diff);
  return (d > 0.5) ? d - 1.0 : d;
}

}  // namespace detail

// The shortest covering-space vector r with wrap(b + r) = a;
// each |r_i| <= 1/2, ties resolved to +1/2.
inline Vec2 min_displacement(TorusPoint a, TorusPoint b) {
  return {detail::min_lift(a.u - b.u), detail::min_lift(a.v - b.v)};
}

// Geodesic distance on T^2.
inline double torus_distance(TorusPoint a, TorusPoint b) {
  return norm(min_displacement(a, b));
}

// State of the point-vortex system: N positions on T^2 with nonzero
// intensities.  Coincident positions are representable (the split flows are
// defined for arbitrary initial data); callers that require pairwise-distinct
// positions query is_distinct().
class Configuration {
public:
  Configuration() = default;

  Configuration(std::vector<TorusPoint> positions, std::vector<double> intensities)
      : positions_(std::move(positions)), intensities_(std::move(intensities)) {
    if (positions_.size() != intensities_.size())
      throw InvalidInput("Configuration: positions/intensities size mismatch");
    if (positions_.size() < 2)
      throw InvalidInput("Configuration: need at least 2 vortices");
    for (double xi : intensities_) {
      if (!std::isfinite(xi) || xi == 0.0)
        throw InvalidInput("Configuration: intensities must be finite and nonzero");
    }
    for (TorusPoint p : positions_) {
      if (!(std::isfinite(p.u) && std::isfinite(p.v)) ||
          p.u < 0.0 || p.u >= 1.0 || p.v < 0.0 || p.v >= 1.0)
        throw InvalidInput("Configuration: positions must be wrapped to [0,1)^2");
    }
  }

  std::size_t size() const { return positions_.size(); }
  const std::vector<TorusPoint>& positions() const { return positions_; }
  const std::vector<double>& intensities() const { return intensities_; }
  TorusPoint position(std::size_t i) const { return positions_.at(i); }
  double intensity(std::size_t i) const { return intensities_.at(i); }

  // Membership in the good set X: all pairwise separations strictly positive.
  bool is_distinct() const {
    for (std::size_t i = 0; i < positions_.size(); ++i)
      for (std::size_t j = i + 1; j < positions_.size(); ++j)
        if (torus_distance(positions_[i], positions_[j]) == 0.0) return false;
    return true;
  }

  // Value-preserving position update (keeps the class invariant checked at
  // one spot instead of exposing mutable references).
  Configuration with_position(std::size_t i, TorusPoint p) const {
    Configuration out = *this;
    out.positions_.at(i) = p;
    return out;
  }

  void set_position(std::size_t i, TorusPoint p) { positions_.at(i) = p; }

private:
  std::vector<TorusPoint> positions_;
  std::vector<double> intensities_;
};

// Same intensity vectors, bitwise.
inline bool same_species(const Configuration& x, const Configuration& y) {
  return x.intensities() == y.intensities();
}

// The configuration metric d_T: squared distance is the sum over all 2N
// coordinates of the squared circle distance min(|du|, 1-|du|).
inline double config_distance(const Configuration& x, const Configuration& y) {
  if (x.size() != y.size() || !same_species(x, y))
    throw InvalidInput("config_distance: configurations of different species");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double du = std::fabs(x.position(j).u - y.position(j).u);
    double dv = std::fabs(x.position(j).v - y.position(j).v);
    du = std::min(du, 1.0 - du);
    dv = std::min(dv, 1.0 - dv);
    s += du * du + dv * dv;
  }
  return std::sqrt(s);
}

}  // namespace pvsplit
