#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvsplit/ensembles.hpp"
#include "pvsplit/errors.hpp"
#include "pvsplit/torus.hpp"
#include "pvsplit/trajectory.hpp"

namespace pvsplit {

using json = nlohmann::ordered_json;

// Shortest exact decimal form; CSV payloads must be byte-identical across
// reruns, so all floating-point output funnels through here.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// strict JSON access — unknown keys are config errors, not surprises

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw ConfigError(context + ": unknown field \"" + item.key() + "\"");
  }
}

inline const json& require_key(const json& j, const std::string& key,
                               const std::string& context) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(context + ": missing required field \"" + key + "\"");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& context) {
  if (!j.is_number()) throw ConfigError(context + ": expected a number");
  return j.get<double>();
}

inline std::int64_t as_integer(const json& j, const std::string& context) {
  if (!j.is_number_integer()) throw ConfigError(context + ": expected an integer");
  return j.get<std::int64_t>();
}

inline std::string as_string(const json& j, const std::string& context) {
  if (!j.is_string()) throw ConfigError(context + ": expected a string");
  return j.get<std::string>();
}

// ---------------------------------------------------------------------------
// Configuration <-> JSON

inline json configuration_to_json(const Configuration& c) {
  json positions = json::array();
  json xi = json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    positions.push_back({c.position(i).u, c.position(i).v});
    xi.push_back(c.intensity(i));
  }
  return json{{"xi", std::move(xi)}, {"positions", std::move(positions)}};
}

inline Configuration configuration_from_json(const json& j) {
  reject_unknown_keys(j, {"xi", "positions"}, "configuration");
  const json& xi_j = require_key(j, "xi", "configuration");
  const json& pos_j = require_key(j, "positions", "configuration");
  if (!xi_j.is_array() || !pos_j.is_array())
    throw ConfigError("configuration: xi and positions must be arrays");
  if (xi_j.size() != pos_j.size())
    throw ConfigError("configuration: xi and positions must have equal length");

  std::vector<double> xi;
  std::vector<TorusPoint> pos;
  for (std::size_t i = 0; i < xi_j.size(); ++i) {
    xi.push_back(as_number(xi_j[i], "configuration.xi"));
    const json& p = pos_j[i];
    if (!p.is_array() || p.size() != 2)
      throw ConfigError("configuration.positions: each entry must be [u, v]");
    pos.push_back(wrap(as_number(p[0], "configuration.positions"),
                       as_number(p[1], "configuration.positions")));
  }
  try {
    return Configuration(std::move(pos), std::move(xi));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// file output — whole-buffer writes through a temp file, renamed into place,
// so a crashed run never leaves a half-written artifact

inline void write_text_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidInput("write_text_file: cannot open " + tmp);
    f.write(content.data(), std::streamsize(content.size()));
    if (!f) throw InvalidInput("write_text_file: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw InvalidInput("write_text_file: cannot rename " + tmp + " to " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("read_text_file: cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  return content;
}

inline json load_json_file(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("cannot parse JSON in " + path);
  return j;
}

// ---------------------------------------------------------------------------
// tabular serializers

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,vortex,u,v\n";
  for (const TrajectorySample& s : traj.samples())
    for (std::size_t i = 0; i < s.config.size(); ++i) {
      out += format_double(s.t);
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += format_double(s.config.position(i).u);
      out += ',';
      out += format_double(s.config.position(i).v);
      out += '\n';
    }
  return out;
}

inline json trajectory_metadata(const Trajectory& traj) {
  json meta{{"flow", flow_kind_name(traj.kind())},
            {"samples", traj.samples().size()},
            {"vortices", traj.samples().front().config.size()}};
  if (traj.kind() == FlowKind::jumping || traj.kind() == FlowKind::interpolated) {
    meta["m"] = traj.m();
    meta["schedule_fingerprint"] = traj.schedule_fingerprint();
  }
  if (traj.kind() == FlowKind::single) meta["vortex_index"] = traj.vortex_index();
  return meta;
}

// One configuration per line, so ensembles stream and diff cleanly.
inline std::string ensemble_states_jsonl(const EnsembleSample& s) {
  std::string out;
  for (const Configuration& c : s.configurations) {
    out += configuration_to_json(c).dump();
    out += '\n';
  }
  return out;
}

inline json ensemble_diagnostics_json(const EnsembleSample& s) {
  json autocorr = json::object();
  for (const auto& [name, tau] : s.autocorrelation) autocorr[name] = tau;
  return json{{"states", s.configurations.size()},
              {"accepted", s.accepted},
              {"rejected", s.rejected},
              {"acceptance_rate", s.acceptance_rate},
              {"integrated_autocorrelation", std::move(autocorr)},
              {"warnings", s.warnings}};
}

inline std::string invariance_csv(const InvarianceReport& rep) {
  std::string out = "observable,ks_distance,critical_value,pass\n";
  for (const InvarianceRow& row : rep.rows) {
    out += row.observable;
    out += ',';
    out += format_double(row.ks_distance);
    out += ',';
    out += format_double(row.critical_value);
    out += ',';
    out += row.pass ? "1" : "0";
    out += '\n';
  }
  return out;
}

}  // namespace pvsplit
