#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pvsplit/errors.hpp"

namespace pvsplit {

// Mean-one waiting-time laws offered for the split flows.  All have
// sub-exponential tails; constant(1) recovers plain deterministic splitting.
enum class TauDistribution {
  exponential,  // Exp(1)
  uniform,      // U(0,2)
  constant,     // ≡ 1
};

inline std::string tau_distribution_name(TauDistribution d) {
  switch (d) {
    case TauDistribution::exponential: return "exponential";
    case TauDistribution::uniform: return "uniform";
    case TauDistribution::constant: return "constant";
  }
  return "?";
}

inline TauDistribution parse_tau_distribution(const std::string& name) {
  if (name == "exponential") return TauDistribution::exponential;
  if (name == "uniform") return TauDistribution::uniform;
  if (name == "constant") return TauDistribution::constant;
  throw InvalidInput("unknown tau distribution: " + name +
                     " (expected exponential | uniform | constant)");
}

// splitmix64: cheap, well-mixed 64-bit hash used to derive independent
// worker/stream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

// Canonical 64-bit-engine to double conversion: 53 mantissa bits, range [0,1).
// Pinned explicitly (instead of std::uniform_real_distribution, whose output
// is implementation-defined) so sequences are bit-for-bit reproducible.
inline double uniform01(std::mt19937_64& eng) {
  return double(eng() >> 11) * 0x1.0p-53;
}

// The i.i.d. schedule (τ_1, τ_2, ...) of the stochastic splitting.  Draws are
// extended lazily and cached; identical (distribution, seed) give identical
// sequences bit-for-bit.  Indices are 1-based to match the slot arithmetic.
class TauSchedule {
public:
  TauSchedule(TauDistribution distribution, std::uint64_t seed)
      : dist_(distribution), seed_(seed), eng_(seed) {}

  TauDistribution distribution() const { return dist_; }
  std::uint64_t seed() const { return seed_; }

  // τ_k for k = 1, 2, ...; k = 0 is a contract violation.
  double tau(std::size_t k) const {
    if (k == 0) throw InvalidInput("TauSchedule::tau: indices are 1-based");
    while (draws_.size() < k) draws_.push_back(draw());
    return draws_[k - 1];
  }

  // Stable identifier of (distribution, seed) for trajectory metadata.  The
  // seed is hashed before the distribution tag is mixed in, so nearby
  // (seed, distribution) pairs cannot cancel.
  std::uint64_t fingerprint() const {
    std::uint64_t s = seed_;
    std::uint64_t h = splitmix64(s);
    std::uint64_t tagged = h ^ (0xa5a5a5a5a5a5a5a5ULL * (std::uint64_t(dist_) + 1));
    return splitmix64(tagged);
  }

private:
  TauDistribution dist_;
  std::uint64_t seed_;
  mutable std::mt19937_64 eng_;
  mutable std::vector<double> draws_;

  double draw() const {
    switch (dist_) {
      case TauDistribution::exponential: {
        // inverse CDF; u ∈ [0,1) keeps the argument of log in (0,1]
        const double u = uniform01(eng_);
        return -std::log1p(-u);
      }
      case TauDistribution::uniform:
        return 2.0 * uniform01(eng_);
      case TauDistribution::constant:
        return 1.0;
    }
    return 1.0;
  }
};

}  // namespace pvsplit
