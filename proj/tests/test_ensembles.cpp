#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "pvsplit/ensembles.hpp"
#include "support/configs.hpp"

using namespace pvsplit;
using testsupport::random_configuration;

namespace {

const GreenEvaluator& shared_ge() {
  static GreenEvaluator ge;
  return ge;
}

Configuration square_template(std::vector<double> xi) {
  std::vector<TorusPoint> pos{wrap(0.25, 0.25), wrap(0.75, 0.25), wrap(0.25, 0.75),
                              wrap(0.75, 0.75)};
  pos.resize(xi.size() <= 4 ? xi.size() : 4);
  return Configuration(pos, std::move(xi));
}

}  // namespace

TEST_CASE("beta = 0 canonical samples have uniform coordinate marginals") {
  const GreenEvaluator& ge = shared_ge();
  CanonicalParams p;
  p.beta = 0.0;
  p.burn_in = 2000;
  p.thinning = 200;
  p.seed = 1001;
  const Configuration tmpl = square_template({1.0, 1.0, -1.0, -1.0});
  const EnsembleSample s = sample_canonical(ge, tmpl, p, 5000);
  REQUIRE(s.configurations.size() == 5000);

  const double crit = ks_critical_value_one_sample(5000, 0.01);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    std::vector<double> us, vs;
    for (const Configuration& c : s.configurations) {
      us.push_back(c.position(i).u);
      vs.push_back(c.position(i).v);
    }
    CHECK(ks_statistic_uniform(us) < crit);
    CHECK(ks_statistic_uniform(vs) < crit);
  }
  CHECK(s.acceptance_rate == 1.0);  // beta = 0 accepts every proposal
  CHECK(s.warnings.empty());
}

TEST_CASE("acceptance bookkeeping is consistent") {
  const GreenEvaluator& ge = shared_ge();
  CanonicalParams p;
  p.beta = 4.0;
  p.burn_in = 100;
  p.thinning = 5;
  p.seed = 77;
  const EnsembleSample s = sample_canonical(ge, square_template({1.0, 1.0}), p, 200);
  CHECK(s.accepted + s.rejected == p.burn_in + 200 * p.thinning);
  CHECK(s.acceptance_rate ==
        double(s.accepted) / double(s.accepted + s.rejected));
  CHECK(s.acceptance_rate > 0.0);
  CHECK(s.acceptance_rate < 1.0);
  REQUIRE(s.autocorrelation.size() == 2);
  CHECK(s.autocorrelation[0].second >= 1.0);
}

TEST_CASE("logged moves satisfy the Metropolis rule exactly") {
  const GreenEvaluator& ge = shared_ge();
  CanonicalParams p;
  p.beta = 2.0;
  p.burn_in = 0;
  p.thinning = 1;
  p.seed = 31;
  p.log_moves = true;
  const EnsembleSample s = sample_canonical(ge, square_template({1.0, -1.0, 1.0}), p, 4000);
  REQUIRE(s.move_log.size() == 4000);
  for (const MoveRecord& rec : s.move_log) {
    const bool should_accept = rec.accept_draw < std::exp(-p.beta * rec.delta_h);
    CHECK(rec.accepted == should_accept);
  }
}

TEST_CASE("detailed balance holds on a 3-state discretized toy") {
  // vortex 0 restricted to three positions; companion fixed.  The Metropolis
  // rule with symmetric proposals must equalize the a<->b transition fluxes.
  const GreenEvaluator& ge = shared_ge();
  const double beta = 3.0;
  const std::array<TorusPoint, 3> states{wrap(0.2, 0.3), wrap(0.45, 0.3),
                                         wrap(0.7, 0.3)};
  const TorusPoint companion = wrap(0.1, 0.8);
  std::array<double, 3> energy{};
  for (int a = 0; a < 3; ++a)
    energy[a] = hamiltonian(
        ge, Configuration({states[a], companion}, {1.0, 1.0}));

  std::mt19937_64 eng(555);
  int cur = 0;
  std::array<std::array<long, 3>, 3> flux{};
  for (long step = 0; step < 300000; ++step) {
    const int other = (uniform01(eng) < 0.5) ? 1 : 2;  // symmetric proposal
    const int cand = (cur + other) % 3;
    const double dh = energy[std::size_t(cand)] - energy[std::size_t(cur)];
    if (uniform01(eng) < std::exp(-beta * dh)) {
      ++flux[std::size_t(cur)][std::size_t(cand)];
      cur = cand;
    }
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const double forward = double(flux[a][b]);
      const double backward = double(flux[b][a]);
      const double se = std::sqrt(forward + backward);
      REQUIRE(se > 0.0);
      CHECK(std::fabs(forward - backward) <= 3.0 * se);
    }
  }
}

TEST_CASE("negative temperature aggregates same-sign vortices") {
  const GreenEvaluator& ge = shared_ge();
  std::mt19937_64 rng(1234);
  const Configuration tmpl =
      random_configuration(rng, 6, 0.1, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0});

  auto mean_min_dist = [&](double beta) {
    CanonicalParams p;
    p.beta = beta;
    p.burn_in = 5000;
    p.thinning = 50;
    p.seed = 2024;  // identical seeds: paired comparison
    const EnsembleSample s = sample_canonical(ge, tmpl, p, 400);
    double sum = 0.0;
    for (const Configuration& c : s.configurations) sum += min_pair_distance(c);
    return sum / double(s.configurations.size());
  };
  const double at_zero = mean_min_dist(0.0);
  const double at_negative = mean_min_dist(-30.0);
  CHECK(at_negative < at_zero);
}

TEST_CASE("positive beta warns below the threshold and refuses at it") {
  const GreenEvaluator& ge = shared_ge();
  const Configuration tmpl = square_template({1.0, -1.0});
  CanonicalParams p;
  p.burn_in = 10;
  p.thinning = 1;
  p.seed = 3;

  p.beta = 12.0;  // threshold is 4*pi = 12.566...
  const EnsembleSample s = sample_canonical(ge, tmpl, p, 10);
  REQUIRE(s.warnings.size() == 1);

  p.beta = 4.0 * kPi;
  CHECK_THROWS_AS(sample_canonical(ge, tmpl, p, 10), InvalidTemperature);
  p.beta = 13.0;
  CHECK_THROWS_AS(sample_canonical(ge, tmpl, p, 10), InvalidTemperature);
}

TEST_CASE("canonical chains are reproducible and parameter-validated") {
  const GreenEvaluator& ge = shared_ge();
  const Configuration tmpl = square_template({1.0, 1.0, -1.0});
  CanonicalParams p;
  p.beta = -5.0;
  p.burn_in = 200;
  p.thinning = 7;
  p.seed = 99;
  const EnsembleSample a = sample_canonical(ge, tmpl, p, 50);
  const EnsembleSample b = sample_canonical(ge, tmpl, p, 50);
  REQUIRE(a.configurations.size() == b.configurations.size());
  for (std::size_t k = 0; k < a.configurations.size(); ++k)
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      CHECK(a.configurations[k].position(i).u == b.configurations[k].position(i).u);
      CHECK(a.configurations[k].position(i).v == b.configurations[k].position(i).v);
    }

  CanonicalParams bad;
  bad.proposal_scale = 0.0;
  CHECK_THROWS_AS(sample_canonical(ge, tmpl, bad, 10), InvalidInput);
  CHECK_THROWS_AS(sample_canonical(ge, tmpl, p, 0), InvalidInput);
}

TEST_CASE("microcanonical samples stay inside the shell") {
  const GreenEvaluator& ge = shared_ge();
  const Configuration tmpl = square_template({1.0, -1.0, 1.0, -1.0});
  MicrocanonicalParams p;
  p.energy = hamiltonian(ge, tmpl) + 0.05;  // nearby but off the template level
  p.shell_width = 0.01;
  p.burn_in = 500;
  p.thinning = 10;
  p.seed = 11;
  const EnsembleSample s = sample_microcanonical(ge, tmpl, p, 300);
  REQUIRE(s.configurations.size() == 300);
  for (const Configuration& c : s.configurations)
    CHECK(std::fabs(hamiltonian(ge, c) - p.energy) <= p.shell_width + 1e-9);
  CHECK(s.acceptance_rate > 0.0);
}

TEST_CASE("a very wide shell recovers beta = 0 statistics") {
  const GreenEvaluator& ge = shared_ge();
  const Configuration tmpl = square_template({1.0, -1.0});

  // spread of H under the uniform law, estimated from 2000 uniform draws
  std::mt19937_64 rng(77);
  std::vector<double> hs;
  for (int k = 0; k < 2000; ++k)
    hs.push_back(hamiltonian(ge, testsupport::uniform_configuration(
                                     rng, 2, {1.0, -1.0})));
  const double sd = std::sqrt(variance(hs));

  MicrocanonicalParams p;
  p.energy = mean(hs);
  p.shell_width = 10.0 * sd;
  p.burn_in = 2000;
  p.thinning = 150;
  p.seed = 21;
  const EnsembleSample s = sample_microcanonical(ge, tmpl, p, 2000);

  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> us, vs;
    for (const Configuration& c : s.configurations) {
      us.push_back(c.position(i).u);
      vs.push_back(c.position(i).v);
    }
    CHECK(ks_statistic_uniform(us) < 0.05);
    CHECK(ks_statistic_uniform(vs) < 0.05);
  }
}

TEST_CASE("microcanonical sampling reports EmptyShell for unreachable energies") {
  const GreenEvaluator& ge = shared_ge();
  MicrocanonicalParams p;
  p.energy = -1e6;  // H is bounded well above this
  p.shell_width = 0.01;
  p.seed = 5;
  p.search_budget = 20000;
  CHECK_THROWS_AS(sample_microcanonical(ge, square_template({1.0, 1.0}), p, 10),
                  EmptyShell);
}

TEST_CASE("the split flow keeps microcanonical samples inside the shell") {
  const GreenEvaluator& ge = shared_ge();
  const Configuration tmpl = square_template({1.0, -1.0, 1.0, -1.0});
  MicrocanonicalParams p;
  p.energy = hamiltonian(ge, tmpl);
  p.shell_width = 0.02;
  p.burn_in = 300;
  p.thinning = 20;
  p.seed = 8;
  const EnsembleSample s = sample_microcanonical(ge, tmpl, p, 100);

  FlowParams fp;
  for (std::size_t k = 0; k < s.configurations.size(); ++k) {
    TauSchedule sched(TauDistribution::exponential, derive_seed(404, k));
    const Configuration pushed =
        interpolated_flow(ge, s.configurations[k], 0.5, 16, sched, fp);
    CHECK(std::fabs(hamiltonian(ge, pushed) - p.energy) <= p.shell_width + 1e-7);
  }
}

TEST_CASE("invariance_test with the identity flow reports zero distances") {
  const GreenEvaluator& ge = shared_ge();
  CanonicalParams p;
  p.beta = 0.0;
  p.burn_in = 100;
  p.thinning = 20;
  p.seed = 61;
  const Configuration tmpl = square_template({1.0, 1.0, -1.0, -1.0});
  const EnsembleSample s = sample_canonical(ge, tmpl, p, 500);

  FlowSpec flow;
  flow.t = 0.0;  // identity
  flow.seed = 42;
  const InvarianceReport rep =
      invariance_test(ge, s, flow, standard_invariance_observables(tmpl));
  REQUIRE(rep.rows.size() == 4);
  for (const InvarianceRow& row : rep.rows) {
    CHECK(row.ks_distance == 0.0);
    CHECK(row.pass);
  }
  CHECK(rep.all_pass());
}

TEST_CASE("invariance_test rejects undersized ensembles") {
  const GreenEvaluator& ge = shared_ge();
  CanonicalParams p;
  p.seed = 1;
  p.burn_in = 10;
  p.thinning = 1;
  const Configuration tmpl = square_template({1.0, -1.0});
  const EnsembleSample s = sample_canonical(ge, tmpl, p, 100);
  FlowSpec flow;
  CHECK_THROWS_AS(invariance_test(ge, s, flow, standard_invariance_observables(tmpl)),
                  InvalidInput);
}

TEST_CASE("microcanonical ensembles are invariant under the split flow") {
  // The shell measure 1_{|H-E|<=dE} dx is exactly invariant: every split flow
  // conserves H and preserves volume.  The H constraint also keeps pairs well
  // separated, so the pushed flows stay cheap.
  const GreenEvaluator& ge = shared_ge();
  const Configuration tmpl = square_template({1.0, 1.0, -1.0, -1.0});
  MicrocanonicalParams p;
  p.energy = hamiltonian(ge, tmpl);
  p.shell_width = 0.02;
  p.burn_in = 5000;
  p.thinning = 40;
  p.seed = 7001;
  const EnsembleSample s = sample_microcanonical(ge, tmpl, p, 600);

  FlowSpec flow;
  flow.m = 16;
  flow.t = 0.5;
  flow.seed = 8001;
  flow.params.rel_tol = 1e-9;
  flow.params.abs_tol = 1e-9;
  std::vector<NamedObservable> observables = standard_invariance_observables(tmpl);
  observables.emplace_back("hamiltonian", [&ge](const Configuration& c) {
    return hamiltonian(ge, c);
  });
  const InvarianceReport rep = invariance_test(ge, s, flow, observables);
  for (const InvarianceRow& row : rep.rows) {
    INFO(row.observable << ": KS " << row.ks_distance << " vs " << row.critical_value);
    CHECK(row.pass);
  }

  // negative control: scaling one velocity component breaks H conservation,
  // which the shell-pinned hamiltonian marginal detects immediately.  The
  // broken dynamics can also spiral a vortex into a neighbour, in which case
  // the integrator reports a stalled step budget instead.
  FlowSpec broken = flow;
  broken.params.fault_u_scale = 1.5;
  bool detected = false;
  try {
    const InvarianceReport bad = invariance_test(ge, s, broken, observables);
    for (const InvarianceRow& row : bad.rows) detected = detected || !row.pass;
  } catch (const Error&) {
    detected = true;
  }
  CHECK(detected);
}
