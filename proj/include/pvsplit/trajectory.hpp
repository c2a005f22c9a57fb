#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pvsplit/errors.hpp"
#include "pvsplit/torus.hpp"

namespace pvsplit {

enum class FlowKind {
  deterministic,  // Φ_t, all vortices move
  single,         // Φ^(i)_s, one vortex in the frozen field of the rest
  jumping,        // Φ^m_t, piecewise-constant composition of single flows
  interpolated,   // Ψ^m_t, continuous one-vortex-per-slot version
};

inline std::string flow_kind_name(FlowKind k) {
  switch (k) {
    case FlowKind::deterministic: return "deterministic";
    case FlowKind::single: return "single";
    case FlowKind::jumping: return "jumping";
    case FlowKind::interpolated: return "interpolated";
  }
  return "?";
}

struct TrajectorySample {
  double t;
  Configuration config;
};

// Time-stamped flow output.  m and vortex_index are meaningful only for the
// flow kinds that use them; schedule_fingerprint identifies the TauSchedule
// (0 when no schedule was involved).
class Trajectory {
public:
  Trajectory(FlowKind kind, std::vector<TrajectorySample> samples, int m = 0,
             int vortex_index = -1, std::uint64_t schedule_fingerprint = 0)
      : kind_(kind),
        samples_(std::move(samples)),
        m_(m),
        vortex_index_(vortex_index),
        schedule_fingerprint_(schedule_fingerprint) {
    if (samples_.empty()) throw InvalidInput("Trajectory: no samples");
    for (std::size_t k = 0; k + 1 < samples_.size(); ++k) {
      if (!(samples_[k].t < samples_[k + 1].t))
        throw InvalidInput("Trajectory: timestamps must be strictly increasing");
    }
    for (const TrajectorySample& s : samples_) {
      if (s.config.size() != samples_.front().config.size() ||
          !same_species(s.config, samples_.front().config))
        throw InvalidInput("Trajectory: samples must share N and intensities");
    }
  }

  FlowKind kind() const { return kind_; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  int m() const { return m_; }
  int vortex_index() const { return vortex_index_; }
  std::uint64_t schedule_fingerprint() const { return schedule_fingerprint_; }

private:
  FlowKind kind_;
  std::vector<TrajectorySample> samples_;
  int m_;
  int vortex_index_;
  std::uint64_t schedule_fingerprint_;
};

}  // namespace pvsplit
