#pragma once

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pvsplit/ensembles.hpp"
#include "pvsplit/flows.hpp"
#include "pvsplit/io.hpp"
#include "pvsplit/kernel_table.hpp"
#include "pvsplit/parallel.hpp"

namespace pvsplit {

// A parsed experiment request.  `params` is the experiment-specific document;
// `resolved` accumulates every parameter with defaults filled in and is
// written next to the outputs so a rerun can reproduce the artifacts exactly.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  json params;
  json resolved;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "simulate",  "converge",   "conserve",      "liouville",
      "ensemble-invariance", "green-table", "mindist-survey"};
  return names;
}

inline ExperimentConfig parse_experiment_config(const json& document) {
  reject_unknown_keys(document, {"experiment", "seed", "output_dir", "params"},
                      "config");
  ExperimentConfig cfg;
  cfg.experiment = as_string(require_key(document, "experiment", "config"),
                             "config.experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("config.experiment: unknown experiment \"" + cfg.experiment +
                      "\"");

  // seeds are mandatory: every run must be reproducible from its config alone
  const json& seed_j = require_key(document, "seed", "config");
  const std::int64_t seed = as_integer(seed_j, "config.seed");
  if (seed < 0) throw ConfigError("config.seed: must be nonnegative");
  cfg.seed = std::uint64_t(seed);

  if (document.contains("output_dir"))
    cfg.output_dir = as_string(document.at("output_dir"), "config.output_dir");
  if (document.contains("params")) {
    if (!document.at("params").is_object())
      throw ConfigError("config.params: expected a JSON object");
    cfg.params = document.at("params");
  } else {
    cfg.params = json::object();
  }
  return cfg;
}

namespace detail {

// ---- typed param readers that materialize defaults into `resolved` ----

inline double read_number(const json& p, const char* key, double fallback,
                          json& resolved, const std::string& ctx) {
  double v = fallback;
  if (p.contains(key)) v = as_number(p.at(key), ctx + "." + key);
  resolved[key] = v;
  return v;
}

inline std::int64_t read_integer(const json& p, const char* key, std::int64_t fallback,
                                 json& resolved, const std::string& ctx) {
  std::int64_t v = fallback;
  if (p.contains(key)) v = as_integer(p.at(key), ctx + "." + key);
  resolved[key] = v;
  return v;
}

inline std::string read_string(const json& p, const char* key, std::string fallback,
                               json& resolved, const std::string& ctx) {
  std::string v = std::move(fallback);
  if (p.contains(key)) v = as_string(p.at(key), ctx + "." + key);
  resolved[key] = v;
  return v;
}

inline TauDistribution read_distribution(const json& p, json& resolved,
                                         const std::string& ctx) {
  const std::string name = read_string(p, "distribution", "exponential", resolved, ctx);
  try {
    return parse_tau_distribution(name);
  } catch (const InvalidInput& e) {
    throw ConfigError(ctx + ".distribution: " + e.what());
  }
}

// Kernel choice plus ownership of a loaded table, if one is requested.
struct KernelChoice {
  KernelSpec spec;
  std::unique_ptr<KernelTable> table;
};

inline KernelChoice read_kernel(const json& p, json& resolved, const std::string& ctx,
                                const std::string& default_mode = "exact") {
  json kernel_j = json::object();
  if (p.contains("kernel")) {
    if (!p.at("kernel").is_object())
      throw ConfigError(ctx + ".kernel: expected a JSON object");
    kernel_j = p.at("kernel");
  }
  reject_unknown_keys(kernel_j, {"mode", "delta", "table_path"}, ctx + ".kernel");
  json rk = json::object();
  const std::string mode = read_string(kernel_j, "mode", default_mode, rk, ctx + ".kernel");

  KernelChoice choice;
  if (mode == "exact") {
    choice.spec = exact_kernel();
  } else if (mode == "regularized") {
    const double delta = read_number(kernel_j, "delta", 0.05, rk, ctx + ".kernel");
    choice.spec = regularized_kernel_spec(delta);
  } else if (mode == "table") {
    const std::string path =
        read_string(kernel_j, "table_path", "", rk, ctx + ".kernel");
    if (path.empty())
      throw ConfigError(ctx + ".kernel: table mode requires table_path");
    choice.table = std::make_unique<KernelTable>(load_kernel_table(path));
    choice.spec = table_kernel(*choice.table);
  } else {
    throw ConfigError(ctx + ".kernel.mode: expected exact | regularized | table");
  }
  resolved["kernel"] = std::move(rk);
  return choice;
}

inline FlowParams read_flow_params(const json& p, const KernelSpec& kernel,
                                   json& resolved, const std::string& ctx) {
  FlowParams fp;
  fp.kernel = kernel;
  fp.rel_tol = read_number(p, "rel_tol", fp.rel_tol, resolved, ctx);
  fp.abs_tol = read_number(p, "abs_tol", fp.abs_tol, resolved, ctx);
  fp.max_step = read_number(p, "max_step", fp.max_step, resolved, ctx);
  fp.collision_radius =
      read_number(p, "collision_radius", fp.collision_radius, resolved, ctx);
  try {
    fp.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  return fp;
}

// Rejection-sample n vortices with pairwise distance >= min_sep; intensities
// alternate +1/-1 unless given.  Deterministic in the rng state.
inline Configuration random_admissible(std::mt19937_64& rng, std::size_t n,
                                       double min_sep, std::vector<double> xi) {
  if (xi.empty()) {
    xi.resize(n);
    for (std::size_t i = 0; i < n; ++i) xi[i] = (i % 2 == 0) ? 1.0 : -1.0;
  }
  if (xi.size() != n)
    throw ConfigError("random configuration: intensities length must equal n");
  std::vector<TorusPoint> pos;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    pos.clear();
    while (pos.size() < n) {
      const TorusPoint cand = wrap(uniform01(rng), uniform01(rng));
      bool ok = true;
      for (const TorusPoint& q : pos) ok = ok && torus_distance(cand, q) >= min_sep;
      if (!ok) break;
      pos.push_back(cand);
    }
    if (pos.size() == n) return Configuration(pos, xi);
  }
  throw InvalidInput("random configuration: rejection sampling failed; min_distance too large");
}

// Initial configuration: either explicit {"xi", "positions"} or
// {"random": {"n", "min_distance", "intensities"}}.
inline Configuration read_configuration(const json& p, std::uint64_t seed,
                                        json& resolved, const std::string& ctx) {
  if (!p.contains("configuration"))
    throw ConfigError(ctx + ": missing required field \"configuration\"");
  const json& c = p.at("configuration");
  if (c.is_object() && c.contains("random")) {
    reject_unknown_keys(c, {"random"}, ctx + ".configuration");
    const json& r = c.at("random");
    reject_unknown_keys(r, {"n", "min_distance", "intensities"},
                        ctx + ".configuration.random");
    json rr = json::object();
    const std::int64_t n =
        read_integer(r, "n", 4, rr, ctx + ".configuration.random");
    if (n < 2) throw ConfigError(ctx + ".configuration.random.n: need n >= 2");
    const double min_sep =
        read_number(r, "min_distance", 0.05, rr, ctx + ".configuration.random");
    std::vector<double> xi;
    if (r.contains("intensities")) {
      for (const json& x : r.at("intensities"))
        xi.push_back(as_number(x, ctx + ".configuration.random.intensities"));
    }
    rr["intensities"] = xi;
    std::mt19937_64 rng(derive_seed(seed, 0xC0F1Cull));
    Configuration out = random_admissible(rng, std::size_t(n), min_sep, std::move(xi));
    resolved["configuration"] = json{{"random", std::move(rr)}};
    // snapshot the realized draw too, so the artifact is self-describing
    resolved["configuration"]["realized"] = configuration_to_json(out);
    return out;
  }
  Configuration out = configuration_from_json(c);
  resolved["configuration"] = configuration_to_json(out);
  return out;
}

inline std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

inline void write_artifact(const ExperimentConfig& cfg, const std::string& name,
                           const std::string& content) {
  namespace fs = std::filesystem;
  write_text_file((fs::path(cfg.output_dir) / name).string(), content);
}

inline void write_json_artifact(const ExperimentConfig& cfg, const std::string& name,
                                const json& j) {
  write_artifact(cfg, name, j.dump(2) + "\n");
}

inline json base_metadata(const ExperimentConfig& cfg) {
  return json{{"experiment", cfg.experiment},
              {"seed", cfg.seed},
              {"generated_at", timestamp_utc()}};
}

// Written as soon as parameter validation finishes, before any heavy work:
// even a run that later fails numerically leaves its exact inputs behind.
inline void snapshot_resolved(const ExperimentConfig& cfg) {
  write_json_artifact(cfg, "resolved_config.json", cfg.resolved);
}

// ---- the experiments ----

inline void run_simulate(ExperimentConfig& cfg, const GreenEvaluator& ge) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p,
                      {"flow", "m", "vortex", "distribution", "t_max", "samples",
                       "kernel", "rel_tol", "abs_tol", "max_step", "collision_radius",
                       "configuration"},
                      ctx);
  json& rp = cfg.resolved["params"];
  const std::string flow = read_string(p, "flow", "interpolated", rp, ctx);
  const std::int64_t m = read_integer(p, "m", 16, rp, ctx);
  const std::int64_t vortex = read_integer(p, "vortex", 0, rp, ctx);
  const TauDistribution dist = read_distribution(p, rp, ctx);
  const double t_max = read_number(p, "t_max", 1.0, rp, ctx);
  const std::int64_t samples = read_integer(p, "samples", 101, rp, ctx);
  if (samples < 2) throw ConfigError("params.samples: need at least 2");
  KernelChoice kernel = read_kernel(p, rp, ctx);
  const FlowParams fp = read_flow_params(p, kernel.spec, rp, ctx);
  const Configuration x0 = read_configuration(p, cfg.seed, rp, ctx);
  snapshot_resolved(cfg);

  const std::vector<double> ts = uniform_time_grid(std::size_t(samples), t_max);
  Trajectory traj = [&] {
    if (flow == "deterministic")
      return sample_deterministic_trajectory(ge, x0, ts, fp);
    if (flow == "single") {
      if (vortex < 0 || std::size_t(vortex) >= x0.size())
        throw ConfigError("params.vortex: out of range");
      return sample_single_vortex_trajectory(ge, x0, std::size_t(vortex), ts, fp);
    }
    if (flow == "jumping")
      return sample_jumping_trajectory(ge, x0, ts, int(m),
                                       TauSchedule(dist, cfg.seed), fp);
    if (flow == "interpolated")
      return sample_interpolated_trajectory(ge, x0, ts, int(m),
                                            TauSchedule(dist, cfg.seed), fp);
    throw ConfigError(
        "params.flow: expected deterministic | single | jumping | interpolated");
  }();

  write_artifact(cfg, "trajectory.csv", trajectory_csv(traj));
  json meta = base_metadata(cfg);
  meta["trajectory"] = trajectory_metadata(traj);
  if (kernel.spec.mode != KernelMode::regularized) {
    const double h0 = hamiltonian(ge, traj.samples().front().config);
    const double h1 = hamiltonian(ge, traj.samples().back().config);
    meta["hamiltonian"] = json{{"initial", h0},
                               {"final", h1},
                               {"rel_drift", std::fabs(h1 - h0) / std::max(1.0, std::fabs(h0))}};
  }
  write_json_artifact(cfg, "metadata.json", meta);
}

inline void run_converge(ExperimentConfig& cfg, const GreenEvaluator& ge) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p,
                      {"m_list", "seeds", "distribution", "t_max", "samples", "kernel",
                       "rel_tol", "abs_tol", "max_step", "collision_radius",
                       "configuration"},
                      ctx);
  json& rp = cfg.resolved["params"];
  std::vector<int> m_list{8, 16, 32, 64};
  if (p.contains("m_list")) {
    m_list.clear();
    for (const json& mj : p.at("m_list"))
      m_list.push_back(int(as_integer(mj, "params.m_list")));
  }
  rp["m_list"] = m_list;
  const std::int64_t seed_count = read_integer(p, "seeds", 10, rp, ctx);
  if (seed_count < 1) throw ConfigError("params.seeds: need at least 1");
  const TauDistribution dist = read_distribution(p, rp, ctx);
  const double t_max = read_number(p, "t_max", 1.0, rp, ctx);
  const std::int64_t samples = read_integer(p, "samples", 101, rp, ctx);
  KernelChoice kernel = read_kernel(p, rp, ctx, "regularized");
  const FlowParams fp = read_flow_params(p, kernel.spec, rp, ctx);
  const Configuration x0 = read_configuration(p, cfg.seed, rp, ctx);

  snapshot_resolved(cfg);

  std::vector<std::uint64_t> seeds;
  for (std::int64_t k = 0; k < seed_count; ++k)
    seeds.push_back(derive_seed(cfg.seed, std::uint64_t(k)));
  const std::vector<double> ts = uniform_time_grid(std::size_t(samples), t_max);
  const ConvergenceTable table = convergence_sweep(ge, x0, m_list, seeds, dist, ts, fp);

  std::string csv = "m,mean_sup_error\n";
  for (const ConvergenceRow& row : table.rows) {
    csv += std::to_string(row.m);
    csv += ',';
    csv += format_double(row.mean_sup_error);
    csv += '\n';
  }
  write_artifact(cfg, "convergence.csv", csv);
  json meta = base_metadata(cfg);
  meta["decreasing_pairs"] = table.decreasing_pairs;
  meta["monotone"] = table.decreasing_pairs + 1 == int(table.rows.size());
  write_json_artifact(cfg, "metadata.json", meta);
}

inline void run_conserve(ExperimentConfig& cfg, const GreenEvaluator& ge) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p,
                      {"m", "seeds", "distribution", "t_max", "samples", "kernel",
                       "rel_tol", "abs_tol", "max_step", "collision_radius",
                       "configuration"},
                      ctx);
  json& rp = cfg.resolved["params"];
  const std::int64_t m = read_integer(p, "m", 32, rp, ctx);
  const std::int64_t seed_count = read_integer(p, "seeds", 10, rp, ctx);
  if (seed_count < 1) throw ConfigError("params.seeds: need at least 1");
  const TauDistribution dist = read_distribution(p, rp, ctx);
  const double t_max = read_number(p, "t_max", 1.0, rp, ctx);
  const std::int64_t samples = read_integer(p, "samples", 101, rp, ctx);
  KernelChoice kernel = read_kernel(p, rp, ctx);
  if (kernel.spec.mode == KernelMode::regularized)
    throw ConfigError("params.kernel: conserve requires a kernel that conserves H "
                      "(exact or table)");
  const FlowParams fp = read_flow_params(p, kernel.spec, rp, ctx);
  const Configuration x0 = read_configuration(p, cfg.seed, rp, ctx);
  snapshot_resolved(cfg);

  const std::vector<double> ts = uniform_time_grid(std::size_t(samples), t_max);
  const double h0 = hamiltonian(ge, x0);
  const double scale = std::max(1.0, std::fabs(h0));

  struct Row { std::uint64_t seed; double drift; };
  std::vector<Row> rows = parallel_map<Row>(std::size_t(seed_count), [&](std::size_t k) {
    const std::uint64_t s = derive_seed(cfg.seed, k);
    const Trajectory traj =
        sample_interpolated_trajectory(ge, x0, ts, int(m), TauSchedule(dist, s), fp);
    double worst = 0.0;
    for (const TrajectorySample& smp : traj.samples())
      worst = std::max(worst, std::fabs(hamiltonian(ge, smp.config) - h0) / scale);
    return Row{s, worst};
  });

  std::string csv = "seed,max_rel_h_drift\n";
  double overall = 0.0;
  for (const Row& row : rows) {
    csv += std::to_string(row.seed);
    csv += ',';
    csv += format_double(row.drift);
    csv += '\n';
    overall = std::max(overall, row.drift);
  }
  write_artifact(cfg, "conserve.csv", csv);
  json meta = base_metadata(cfg);
  meta["max_rel_h_drift"] = overall;
  meta["hamiltonian_initial"] = h0;
  write_json_artifact(cfg, "metadata.json", meta);
}

inline void run_liouville(ExperimentConfig& cfg, const GreenEvaluator& ge) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p,
                      {"flows", "t", "m", "points", "fd_step", "vortex", "distribution",
                       "kernel", "rel_tol", "abs_tol", "max_step", "collision_radius",
                       "n", "min_distance"},
                      ctx);
  json& rp = cfg.resolved["params"];
  std::vector<std::string> flows{"deterministic", "single", "interpolated"};
  if (p.contains("flows")) {
    flows.clear();
    for (const json& f : p.at("flows")) flows.push_back(as_string(f, "params.flows"));
  }
  rp["flows"] = flows;
  const double t = read_number(p, "t", 0.3, rp, ctx);
  const std::int64_t m = read_integer(p, "m", 8, rp, ctx);
  const std::int64_t points = read_integer(p, "points", 20, rp, ctx);
  const double fd_step = read_number(p, "fd_step", 1e-6, rp, ctx);
  const std::int64_t vortex = read_integer(p, "vortex", 0, rp, ctx);
  const TauDistribution dist = read_distribution(p, rp, ctx);
  KernelChoice kernel = read_kernel(p, rp, ctx);
  const FlowParams fp = read_flow_params(p, kernel.spec, rp, ctx);
  const std::int64_t n = read_integer(p, "n", 2, rp, ctx);
  if (n < 2) throw ConfigError("params.n: need n >= 2");
  const double min_sep = read_number(p, "min_distance", 0.2, rp, ctx);
  if (vortex < 0 || vortex >= n) throw ConfigError("params.vortex: out of range");
  snapshot_resolved(cfg);

  struct Cell { std::string flow; std::size_t point; double det; };
  std::vector<Cell> cells;
  for (const std::string& flow : flows) {
    std::vector<Cell> part =
        parallel_map<Cell>(std::size_t(points), [&](std::size_t k) {
          std::mt19937_64 rng(derive_seed(cfg.seed, 1000 + k));
          const Configuration base =
              random_admissible(rng, std::size_t(n), min_sep, {});
          auto map = [&](const Configuration& y) {
            if (flow == "deterministic") return deterministic_flow(ge, y, t, fp);
            if (flow == "single")
              return single_vortex_flow(ge, y, std::size_t(vortex), t, fp);
            if (flow == "interpolated") {
              TauSchedule sched(dist, derive_seed(cfg.seed, 2000 + k));
              return interpolated_flow(ge, y, t, int(m), sched, fp);
            }
            throw ConfigError(
                "params.flows: expected deterministic | single | interpolated");
          };
          return Cell{flow, k, jacobian_determinant(base, map, fd_step)};
        });
    cells.insert(cells.end(), part.begin(), part.end());
  }

  std::string csv = "flow,point,det,abs_error\n";
  double worst = 0.0;
  for (const Cell& c : cells) {
    const double err = std::fabs(c.det - 1.0);
    worst = std::max(worst, err);
    csv += c.flow;
    csv += ',';
    csv += std::to_string(c.point);
    csv += ',';
    csv += format_double(c.det);
    csv += ',';
    csv += format_double(err);
    csv += '\n';
  }
  write_artifact(cfg, "liouville.csv", csv);
  json meta = base_metadata(cfg);
  meta["max_abs_error"] = worst;
  write_json_artifact(cfg, "metadata.json", meta);
}

inline void run_ensemble_invariance(ExperimentConfig& cfg, const GreenEvaluator& ge) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p, {"ensemble", "flow", "alpha", "fault_u_scale", "configuration"},
                      ctx);
  json& rp = cfg.resolved["params"];
  const double alpha = read_number(p, "alpha", 0.01, rp, ctx);
  const double fault = read_number(p, "fault_u_scale", 0.0, rp, ctx);
  const Configuration tmpl = read_configuration(p, cfg.seed, rp, ctx);

  json ens_j = json::object();
  if (p.contains("ensemble")) {
    if (!p.at("ensemble").is_object())
      throw ConfigError("params.ensemble: expected a JSON object");
    ens_j = p.at("ensemble");
  }
  reject_unknown_keys(ens_j,
                      {"type", "beta", "energy", "shell_width", "proposal_scale",
                       "burn_in", "thinning", "count", "search_budget"},
                      "params.ensemble");
  json re = json::object();
  const std::string type = read_string(ens_j, "type", "canonical", re, "params.ensemble");
  if (type != "canonical" && type != "microcanonical")
    throw ConfigError("params.ensemble.type: expected canonical | microcanonical");
  const std::int64_t count = read_integer(ens_j, "count", 2000, re, "params.ensemble");
  if (count < 1) throw ConfigError("params.ensemble.count: need at least 1");

  CanonicalParams cp;
  MicrocanonicalParams mp;
  if (type == "canonical") {
    cp.beta = read_number(ens_j, "beta", 0.0, re, "params.ensemble");
    cp.proposal_scale =
        read_number(ens_j, "proposal_scale", cp.proposal_scale, re, "params.ensemble");
    cp.burn_in =
        long(read_integer(ens_j, "burn_in", cp.burn_in, re, "params.ensemble"));
    cp.thinning =
        long(read_integer(ens_j, "thinning", cp.thinning, re, "params.ensemble"));
    cp.seed = derive_seed(cfg.seed, 0xCA0);
  } else {
    mp.energy = read_number(ens_j, "energy", hamiltonian(ge, tmpl), re, "params.ensemble");
    mp.shell_width = read_number(ens_j, "shell_width", 0.02, re, "params.ensemble");
    mp.proposal_scale =
        read_number(ens_j, "proposal_scale", mp.proposal_scale, re, "params.ensemble");
    mp.burn_in =
        long(read_integer(ens_j, "burn_in", mp.burn_in, re, "params.ensemble"));
    mp.thinning =
        long(read_integer(ens_j, "thinning", mp.thinning, re, "params.ensemble"));
    mp.search_budget = long(read_integer(ens_j, "search_budget", mp.search_budget, re,
                                         "params.ensemble"));
    mp.seed = derive_seed(cfg.seed, 0xCA0);
  }
  rp["ensemble"] = std::move(re);

  json flow_j = json::object();
  if (p.contains("flow")) {
    if (!p.at("flow").is_object())
      throw ConfigError("params.flow: expected a JSON object");
    flow_j = p.at("flow");
  }
  reject_unknown_keys(flow_j,
                      {"m", "t", "distribution", "kernel", "rel_tol", "abs_tol",
                       "max_step", "collision_radius"},
                      "params.flow");
  json rf = json::object();
  FlowSpec flow;
  flow.m = int(read_integer(flow_j, "m", 16, rf, "params.flow"));
  flow.t = read_number(flow_j, "t", 0.5, rf, "params.flow");
  flow.distribution = read_distribution(flow_j, rf, "params.flow");
  KernelChoice kernel = read_kernel(flow_j, rf, "params.flow");
  flow.params = read_flow_params(flow_j, kernel.spec, rf, "params.flow");
  flow.seed = derive_seed(cfg.seed, 0xF10);
  rp["flow"] = std::move(rf);
  snapshot_resolved(cfg);

  const EnsembleSample sample =
      (type == "canonical") ? sample_canonical(ge, tmpl, cp, long(count))
                            : sample_microcanonical(ge, tmpl, mp, long(count));
  write_artifact(cfg, "states.jsonl", ensemble_states_jsonl(sample));

  const std::vector<NamedObservable> observables = standard_invariance_observables(tmpl);
  const InvarianceReport rep = invariance_test(ge, sample, flow, observables, alpha);
  write_artifact(cfg, "invariance.csv", invariance_csv(rep));

  json meta = base_metadata(cfg);
  meta["ensemble_diagnostics"] = ensemble_diagnostics_json(sample);
  meta["all_pass"] = rep.all_pass();

  if (fault != 0.0) {
    FlowSpec broken = flow;
    broken.params.fault_u_scale = fault;
    const InvarianceReport bad = invariance_test(ge, sample, broken, observables, alpha);
    write_artifact(cfg, "fault_invariance.csv", invariance_csv(bad));
    meta["fault_all_pass"] = bad.all_pass();
  }
  write_json_artifact(cfg, "metadata.json", meta);
}

inline void run_green_table(ExperimentConfig& cfg, const GreenEvaluator&) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p, {"grid_size", "file", "target_accuracy"}, ctx);
  json& rp = cfg.resolved["params"];
  const std::int64_t grid = read_integer(p, "grid_size", 256, rp, ctx);
  const std::string file = read_string(p, "file", "kernel_table.bin", rp, ctx);
  // bicubic interpolation error scales like grid^-4; the library's direct-sum
  // default (1e-12) would demand an absurd grid, so tables get their own target
  const double accuracy = read_number(p, "target_accuracy", 1e-8, rp, ctx);
  snapshot_resolved(cfg);

  GreenParams gp;
  gp.target_accuracy = accuracy;
  const GreenEvaluator table_ge(gp);
  const KernelTable table = build_kernel_table(table_ge, int(grid));

  // independent probe sweep for the metadata (the builder already validated)
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x9B));
  double worst = 0.0;
  int probes = 0;
  while (probes < 500) {
    const TorusPoint x = wrap(uniform01(rng), uniform01(rng));
    if (torus_distance(x, TorusPoint{0.0, 0.0}) <= KernelTable::kExclusionRadius)
      continue;
    worst = std::max(worst, norm(table.eval(x) - table_ge.biot_savart(x)));
    ++probes;
  }

  namespace fs = std::filesystem;
  save_kernel_table(table, (fs::path(cfg.output_dir) / file).string(),
                    json{{"grid_size", grid}, {"seed", cfg.seed}});
  json meta = base_metadata(cfg);
  meta["grid_size"] = grid;
  meta["file"] = file;
  meta["max_probe_error"] = worst;
  meta["target_accuracy"] = table.target_accuracy();
  write_json_artifact(cfg, "metadata.json", meta);
}

inline void run_mindist_survey(ExperimentConfig& cfg, const GreenEvaluator& ge) {
  const json& p = cfg.params;
  const std::string ctx = "params";
  reject_unknown_keys(p,
                      {"count", "n", "m", "distribution", "t_max", "samples", "kernel",
                       "rel_tol", "abs_tol", "max_step", "collision_radius"},
                      ctx);
  json& rp = cfg.resolved["params"];
  const std::int64_t count = read_integer(p, "count", 500, rp, ctx);
  if (count < 1) throw ConfigError("params.count: need at least 1");
  const std::int64_t n = read_integer(p, "n", 4, rp, ctx);
  if (n < 2) throw ConfigError("params.n: need n >= 2");
  const std::int64_t m = read_integer(p, "m", 16, rp, ctx);
  const TauDistribution dist = read_distribution(p, rp, ctx);
  const double t_max = read_number(p, "t_max", 1.0, rp, ctx);
  const std::int64_t samples = read_integer(p, "samples", 101, rp, ctx);
  KernelChoice kernel = read_kernel(p, rp, ctx, "regularized");
  const FlowParams fp = read_flow_params(p, kernel.spec, rp, ctx);
  snapshot_resolved(cfg);

  const std::vector<double> ts = uniform_time_grid(std::size_t(samples), t_max);
  std::vector<double> minima =
      parallel_map<double>(std::size_t(count), [&](std::size_t k) {
        std::mt19937_64 rng(derive_seed(cfg.seed, k));
        // the survey targets the uniform initial law, so no separation floor
        const Configuration x0 = random_admissible(rng, std::size_t(n), 0.0, {});
        TauSchedule sched(dist, derive_seed(cfg.seed, 0x5000000 + k));
        InterpolatedWalker w(ge, x0, int(m), sched, fp);
        double lo = min_pair_distance(x0);
        for (double t : ts) lo = std::min(lo, min_pair_distance(w.advance_to(t)));
        return lo;
      });

  std::string csv = "index,min_over_time_distance\n";
  for (std::size_t k = 0; k < minima.size(); ++k) {
    csv += std::to_string(k);
    csv += ',';
    csv += format_double(minima[k]);
    csv += '\n';
  }
  write_artifact(cfg, "survey.csv", csv);

  std::vector<double> sorted = minima;
  std::sort(sorted.begin(), sorted.end());
  std::string cdf = "min_over_time_distance,cdf\n";
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cdf += format_double(sorted[k]);
    cdf += ',';
    cdf += format_double(double(k + 1) / double(sorted.size()));
    cdf += '\n';
  }
  write_artifact(cfg, "cdf.csv", cdf);

  json meta = base_metadata(cfg);
  meta["count"] = count;
  meta["smallest"] = sorted.front();
  meta["largest"] = sorted.back();
  write_json_artifact(cfg, "metadata.json", meta);
}

}  // namespace detail

// Runs one experiment end to end: validates parameters, writes the resolved
// config snapshot next to the outputs, then the experiment artifacts.
// ConfigError escapes for malformed requests; numerical failures escape as
// their library error types (the CLI maps the two classes to exit codes).
inline void run_experiment(ExperimentConfig cfg,
                           const GreenEvaluator& ge = GreenEvaluator()) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec && !fs::is_directory(cfg.output_dir))
    throw InvalidInput("cannot create output directory " + cfg.output_dir);

  cfg.resolved = json{{"experiment", cfg.experiment},
                      {"seed", cfg.seed},
                      {"output_dir", cfg.output_dir},
                      {"params", json::object()}};

  if (cfg.experiment == "simulate")
    detail::run_simulate(cfg, ge);
  else if (cfg.experiment == "converge")
    detail::run_converge(cfg, ge);
  else if (cfg.experiment == "conserve")
    detail::run_conserve(cfg, ge);
  else if (cfg.experiment == "liouville")
    detail::run_liouville(cfg, ge);
  else if (cfg.experiment == "ensemble-invariance")
    detail::run_ensemble_invariance(cfg, ge);
  else if (cfg.experiment == "green-table")
    detail::run_green_table(cfg, ge);
  else if (cfg.experiment == "mindist-survey")
    detail::run_mindist_survey(cfg, ge);
  else
    throw ConfigError("unknown experiment " + cfg.experiment);
}

}  // namespace pvsplit
