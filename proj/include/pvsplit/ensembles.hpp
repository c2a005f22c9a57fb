#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pvsplit/errors.hpp"
#include "pvsplit/flows.hpp"
#include "pvsplit/green.hpp"
#include "pvsplit/observables.hpp"
#include "pvsplit/parallel.hpp"
#include "pvsplit/schedule.hpp"
#include "pvsplit/stats.hpp"
#include "pvsplit/torus.hpp"

namespace pvsplit {

// Canonical Gibbs sampler parameters.  beta may be negative (negative
// temperature, the aggregation regime); positive beta is accepted with a
// warning up to the partition-function existence threshold 4*pi / min|xi|,
// at which sampling is refused.
struct CanonicalParams {
  double beta = 0.0;
  double proposal_scale = 0.1;
  long burn_in = 1000;
  long thinning = 10;
  std::uint64_t seed = 0;
  bool log_moves = false;  // keep (delta_H, accept draw) pairs for audits

  void validate() const {
    if (!std::isfinite(beta)) throw InvalidInput("CanonicalParams: beta must be finite");
    if (!(proposal_scale > 0.0 && proposal_scale <= 0.5))
      throw InvalidInput("CanonicalParams: proposal_scale must lie in (0, 0.5]");
    if (burn_in < 0 || thinning < 1)
      throw InvalidInput("CanonicalParams: burn_in >= 0 and thinning >= 1 required");
  }
};

// Thickened microcanonical shell {|H - E| <= shell_width}.
struct MicrocanonicalParams {
  double energy = 0.0;
  double shell_width = 0.0;
  double proposal_scale = 0.1;
  long burn_in = 1000;
  long thinning = 10;
  std::uint64_t seed = 0;
  long search_budget = 200000;  // greedy proposals allowed to reach the shell

  void validate() const {
    if (!std::isfinite(energy))
      throw InvalidInput("MicrocanonicalParams: energy must be finite");
    if (!(shell_width > 0.0))
      throw InvalidInput("MicrocanonicalParams: shell_width must be positive");
    if (!(proposal_scale > 0.0 && proposal_scale <= 0.5))
      throw InvalidInput("MicrocanonicalParams: proposal_scale must lie in (0, 0.5]");
    if (burn_in < 0 || thinning < 1 || search_budget < 1)
      throw InvalidInput("MicrocanonicalParams: bad chain lengths");
  }
};

struct MoveRecord {
  double delta_h;
  double accept_draw;
  bool accepted;
};

struct EnsembleSample {
  std::vector<Configuration> configurations;
  long accepted = 0;
  long rejected = 0;
  double acceptance_rate = 0.0;
  // integrated autocorrelation time of scalar chains, per observable name
  std::vector<std::pair<std::string, double>> autocorrelation;
  std::vector<std::string> warnings;
  std::vector<MoveRecord> move_log;  // empty unless logging was requested
};

namespace detail {

// One symmetric proposal: vortex index and a uniform-in-disk displacement.
// Exactly four uniforms are consumed per move in a pinned order, so chains
// with different beta but equal seeds see identical proposal streams.
struct Proposal {
  std::size_t vortex;
  TorusPoint to;
  double accept_draw;
};

inline Proposal draw_proposal(std::mt19937_64& eng, const Configuration& x,
                              double scale) {
  const double u_pick = uniform01(eng);
  const double u_radius = uniform01(eng);
  const double u_angle = uniform01(eng);
  const double u_accept = uniform01(eng);
  std::size_t i = std::size_t(u_pick * double(x.size()));
  if (i >= x.size()) i = x.size() - 1;  // u_pick < 1 makes this unreachable
  const double r = scale * std::sqrt(u_radius);
  const double th = kTwoPi * u_angle;
  return {i, translate(x.position(i), {r * std::cos(th), r * std::sin(th)}),
          u_accept};
}

inline bool proposal_collides(const Configuration& x, std::size_t i, TorusPoint to) {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (j != i && torus_distance(to, x.position(j)) < kSingularThreshold) return true;
  return false;
}

inline void append_chain_diagnostics(const GreenEvaluator& ge, EnsembleSample& s) {
  const long total = s.accepted + s.rejected;
  s.acceptance_rate = total > 0 ? double(s.accepted) / double(total) : 0.0;
  if (s.configurations.size() < 8) return;
  std::vector<double> h, mind;
  h.reserve(s.configurations.size());
  mind.reserve(s.configurations.size());
  for (const Configuration& c : s.configurations) {
    h.push_back(hamiltonian(ge, c));
    mind.push_back(min_pair_distance(c));
  }
  s.autocorrelation.emplace_back("hamiltonian", integrated_autocorrelation_time(h));
  s.autocorrelation.emplace_back("min_pair_distance",
                                 integrated_autocorrelation_time(mind));
}

}  // namespace detail

// Threshold above which Z_beta is non-finite: 4*pi / min_i |xi_i|.
inline double canonical_beta_threshold(const Configuration& x) {
  double min_abs = std::fabs(x.intensity(0));
  for (std::size_t i = 1; i < x.size(); ++i)
    min_abs = std::min(min_abs, std::fabs(x.intensity(i)));
  return 4.0 * kPi / min_abs;
}

// Metropolis chain for the canonical density e^{-beta H} dx^N.  Proposals are
// symmetric (uniform in a disk around one uniformly chosen vortex), so the
// acceptance probability is exactly min(1, e^{-beta dH}).
inline EnsembleSample sample_canonical(const GreenEvaluator& ge,
                                       const Configuration& tmpl,
                                       const CanonicalParams& p, long count) {
  p.validate();
  if (count < 1) throw InvalidInput("sample_canonical: count must be >= 1");
  if (!tmpl.is_distinct())
    throw SingularConfiguration("sample_canonical: template has coincident vortices");

  EnsembleSample out;
  const double threshold = canonical_beta_threshold(tmpl);
  if (p.beta > 0.0) {
    if (p.beta >= threshold)
      throw InvalidTemperature("sample_canonical: beta >= 4*pi/min|xi| (Z diverges)");
    out.warnings.push_back(
        "positive beta: partition function finite only below 4*pi/min|xi|; "
        "proceeding");
  }

  std::mt19937_64 eng(p.seed);
  Configuration x = tmpl;
  const long total_moves = p.burn_in + count * p.thinning;
  out.configurations.reserve(std::size_t(count));

  for (long move = 0; move < total_moves; ++move) {
    const detail::Proposal prop = detail::draw_proposal(eng, x, p.proposal_scale);
    bool accept = false;
    double dh = 0.0;
    if (!detail::proposal_collides(x, prop.vortex, prop.to)) {
      if (p.beta == 0.0) {
        accept = true;  // Lebesgue: every non-colliding proposal passes
      } else {
        dh = hamiltonian_move_delta(ge, x, prop.vortex, prop.to);
        accept = prop.accept_draw < std::exp(-p.beta * dh);
      }
    }
    if (accept) {
      x.set_position(prop.vortex, prop.to);
      ++out.accepted;
    } else {
      ++out.rejected;
    }
    if (p.log_moves) out.move_log.push_back({dh, prop.accept_draw, accept});
    if (move >= p.burn_in && (move - p.burn_in + 1) % p.thinning == 0)
      out.configurations.push_back(x);
  }

  while (out.configurations.size() < std::size_t(count))
    out.configurations.push_back(x);  // unreachable by arithmetic; belt and braces
  detail::append_chain_diagnostics(ge, out);
  return out;
}

// Uniform sampler on the thickened shell {|H - E| <= shell_width}: a greedy
// search walks the template into the shell (EmptyShell on budget exhaustion),
// then a Metropolis chain accepts exactly the proposals that stay inside.
inline EnsembleSample sample_microcanonical(const GreenEvaluator& ge,
                                            const Configuration& tmpl,
                                            const MicrocanonicalParams& p, long count) {
  p.validate();
  if (count < 1) throw InvalidInput("sample_microcanonical: count must be >= 1");
  if (!tmpl.is_distinct())
    throw SingularConfiguration("sample_microcanonical: template has coincident vortices");

  std::mt19937_64 eng(p.seed);
  Configuration x = tmpl;
  double h = hamiltonian(ge, x);

  long spent = 0;
  while (std::fabs(h - p.energy) > p.shell_width) {
    if (++spent > p.search_budget)
      throw EmptyShell("sample_microcanonical: shell |H-E| <= width not reached "
                       "within the search budget");
    const detail::Proposal prop = detail::draw_proposal(eng, x, p.proposal_scale);
    if (detail::proposal_collides(x, prop.vortex, prop.to)) continue;
    const double dh = hamiltonian_move_delta(ge, x, prop.vortex, prop.to);
    if (std::fabs(h + dh - p.energy) < std::fabs(h - p.energy)) {
      x.set_position(prop.vortex, prop.to);
      h += dh;
    }
  }

  EnsembleSample out;
  out.configurations.reserve(std::size_t(count));
  const long total_moves = p.burn_in + count * p.thinning;
  for (long move = 0; move < total_moves; ++move) {
    const detail::Proposal prop = detail::draw_proposal(eng, x, p.proposal_scale);
    bool accept = false;
    if (!detail::proposal_collides(x, prop.vortex, prop.to)) {
      const double dh = hamiltonian_move_delta(ge, x, prop.vortex, prop.to);
      accept = std::fabs(h + dh - p.energy) <= p.shell_width;  // uniform target
      if (accept) h += dh;
    }
    if (accept) {
      x.set_position(prop.vortex, prop.to);
      ++out.accepted;
    } else {
      ++out.rejected;
    }
    if (move >= p.burn_in && (move - p.burn_in + 1) % p.thinning == 0)
      out.configurations.push_back(x);
  }
  detail::append_chain_diagnostics(ge, out);
  return out;
}

// ---- ensemble invariance under the split flows ----

// Which interpolated flow pushes the ensemble forward.  Every configuration
// gets an independent schedule derived from (seed, index), matching the
// one-schedule-per-worker concurrency rule.
struct FlowSpec {
  int m = 16;
  double t = 0.5;
  TauDistribution distribution = TauDistribution::exponential;
  std::uint64_t seed = 0;
  FlowParams params;
};

using NamedObservable =
    std::pair<std::string, std::function<double(const Configuration&)>>;

// The non-conserved observables used by the invariance tests (H itself is
// exactly conserved, so its histogram is trivially invariant).
inline std::vector<NamedObservable> standard_invariance_observables(
    const Configuration& tmpl) {
  std::vector<NamedObservable> obs;
  obs.emplace_back("min_pair_distance",
                   [](const Configuration& c) { return min_pair_distance(c); });
  bool has_same_sign = false;
  for (std::size_t i = 0; i < tmpl.size() && !has_same_sign; ++i)
    for (std::size_t j = i + 1; j < tmpl.size(); ++j)
      if (tmpl.intensity(i) * tmpl.intensity(j) > 0.0) {
        has_same_sign = true;
        break;
      }
  if (has_same_sign)
    obs.emplace_back("same_sign_min_distance", [](const Configuration& c) {
      return same_sign_min_distance(c);
    });
  obs.emplace_back("center_of_vorticity_u",
                   [](const Configuration& c) { return center_of_vorticity_u(c); });
  obs.emplace_back("center_of_vorticity_v",
                   [](const Configuration& c) { return center_of_vorticity_v(c); });
  return obs;
}

struct InvarianceRow {
  std::string observable;
  double ks_distance;
  double critical_value;
  bool pass;
};

struct InvarianceReport {
  double alpha = 0.01;
  std::vector<InvarianceRow> rows;

  bool all_pass() const {
    for (const InvarianceRow& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

// Pushes every sampled configuration through the interpolated flow and
// compares observable distributions before/after with the two-sample KS
// statistic at level alpha.
inline InvarianceReport invariance_test(const GreenEvaluator& ge,
                                        const EnsembleSample& sample,
                                        const FlowSpec& flow,
                                        const std::vector<NamedObservable>& observables,
                                        double alpha = 0.01) {
  const std::size_t n = sample.configurations.size();
  if (n < 500)
    throw InvalidInput("invariance_test: need at least 500 configurations");
  if (observables.empty())
    throw InvalidInput("invariance_test: need at least one observable");
  flow.params.validate();

  const std::vector<Configuration> pushed =
      parallel_map<Configuration>(n, [&](std::size_t k) {
        TauSchedule sched(flow.distribution, derive_seed(flow.seed, k));
        return interpolated_flow(ge, sample.configurations[k], flow.t, flow.m, sched,
                                 flow.params);
      });

  InvarianceReport report;
  report.alpha = alpha;
  const double critical = ks_critical_value_two_sample(n, n, alpha);
  for (const NamedObservable& obs : observables) {
    std::vector<double> before, after;
    before.reserve(n);
    after.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      before.push_back(obs.second(sample.configurations[k]));
      after.push_back(obs.second(pushed[k]));
    }
    const double ks = ks_statistic_two_sample(std::move(before), std::move(after));
    report.rows.push_back({obs.first, ks, critical, ks < critical});
  }
  return report;
}

}  // namespace pvsplit
