// Copyright 2026 The qecbath Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Run configuration, result writers and the command implementations behind
// the qecbath executable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qecbath/errors.hpp"
#include "qecbath/experiments.hpp"
#include "qecbath/qec_codes.hpp"

namespace qecbath {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kUnitsLine =
    "# units: time in 1/omega, temperature and kappa in omega (hbar = k_B = 1), fidelity dimensionless";

/// Flat, fully resolved configuration. Field names are the JSON keys.
struct RunConfig {
  // System and bath.
  double omega = 1.0;
  double temperature = 0.2;
  double kappa = 0.01;
  int n_modes = 1;
  double omega_min = 1.0;
  double omega_max = 1.0;
  std::string resonance = "resonant";
  std::string topology = "collective";
  std::string collective_scope = "per_block";
  // Protocol.
  std::string initial_state = "zero";
  double p = 0.5;
  std::string code = "five_qubit";
  std::vector<int> n_cycles{1};
  std::string recovery_mode = "mixing";
  std::uint64_t seed = 0;
  bool comparison = true;
  // Integration.
  std::string backend = "time_local";
  std::string frame = "interaction";
  std::string kernel_clock = "per_cycle";
  double dt = 1e-3;
  // Time grid: explicit list, or n_times points spanning [0, t_max].
  std::vector<double> t_grid{};
  double t_max = 100.0;
  int n_times = 11;
  std::string time_units = "omega";  // "kappa": grid values are kappa * t
  // Output and execution.
  std::string output = "qecbath_out.csv";
  int workers = 1;
  bool resume = true;
  // Sweep axes; an empty list means the scalar value above.
  std::vector<double> sweep_kappa{};
  std::vector<double> sweep_temperature{};
  std::vector<double> sweep_p{};
  std::vector<std::string> sweep_code{};
  std::vector<int> sweep_n_cycles{};
  std::vector<std::string> sweep_topology{};
  // Crossover search.
  std::vector<double> ct_p{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<int> ct_n_cycles{1};
  double ct_kt_max = 5.0;
  int ct_coarse_points = 50;
  double ct_g_tol = 1e-6;
  double ct_kt_tol = 1e-4;
  // Code validation.
  int validate_states = 20;
};

inline Json to_json(const RunConfig& c) {
  Json j;
  j["omega"] = c.omega;
  j["temperature"] = c.temperature;
  j["kappa"] = c.kappa;
  j["n_modes"] = c.n_modes;
  j["omega_min"] = c.omega_min;
  j["omega_max"] = c.omega_max;
  j["resonance"] = c.resonance;
  j["topology"] = c.topology;
  j["collective_scope"] = c.collective_scope;
  j["initial_state"] = c.initial_state;
  j["p"] = c.p;
  j["code"] = c.code;
  j["n_cycles"] = c.n_cycles;
  j["recovery_mode"] = c.recovery_mode;
  j["seed"] = c.seed;
  j["comparison"] = c.comparison;
  j["backend"] = c.backend;
  j["frame"] = c.frame;
  j["kernel_clock"] = c.kernel_clock;
  j["dt"] = c.dt;
  j["t_grid"] = c.t_grid;
  j["t_max"] = c.t_max;
  j["n_times"] = c.n_times;
  j["time_units"] = c.time_units;
  j["output"] = c.output;
  j["workers"] = c.workers;
  j["resume"] = c.resume;
  j["sweep_kappa"] = c.sweep_kappa;
  j["sweep_temperature"] = c.sweep_temperature;
  j["sweep_p"] = c.sweep_p;
  j["sweep_code"] = c.sweep_code;
  j["sweep_n_cycles"] = c.sweep_n_cycles;
  j["sweep_topology"] = c.sweep_topology;
  j["ct_p"] = c.ct_p;
  j["ct_n_cycles"] = c.ct_n_cycles;
  j["ct_kt_max"] = c.ct_kt_max;
  j["ct_coarse_points"] = c.ct_coarse_points;
  j["ct_g_tol"] = c.ct_g_tol;
  j["ct_kt_tol"] = c.ct_kt_tol;
  j["validate_states"] = c.validate_states;
  return j;
}

namespace detail {

template <typename T>
T field(const Json& doc, const std::string& key) {
  const Json& v = doc.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError("field '" + key + "': expected true or false");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("field '" + key + "': expected a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError("field '" + key + "': expected an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<long long>() < 0 && !v.is_number_unsigned()) {
      throw ConfigError("field '" + key + "': expected a non-negative integer");
    }
  } else {
    if (!v.is_number()) throw ConfigError("field '" + key + "': expected a number");
  }
  return v.get<T>();
}

template <typename T>
std::vector<T> list_field(const Json& doc, const std::string& key) {
  const Json& v = doc.at(key);
  if (!v.is_array()) throw ConfigError("field '" + key + "': expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Json one;
    one[key] = v[i];
    out.push_back(field<T>(one, key));
  }
  return out;
}

}  // namespace detail

/// Resolves a document against the defaults. Unknown keys, wrong types and
/// out-of-range values raise ConfigError naming the field.
inline RunConfig resolve_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  Json merged = to_json(RunConfig{});
  for (const auto& [key, value] : doc.items()) {
    if (!merged.contains(key)) throw ConfigError("unknown key '" + key + "'");
    merged[key] = value;
  }
  // A single cycle count may be written as a scalar.
  for (const char* key : {"n_cycles", "ct_n_cycles", "sweep_n_cycles"}) {
    if (merged[key].is_number()) merged[key] = Json::array({merged[key]});
  }
  using detail::field;
  using detail::list_field;
  RunConfig c;
  c.omega = field<double>(merged, "omega");
  c.temperature = field<double>(merged, "temperature");
  c.kappa = field<double>(merged, "kappa");
  c.n_modes = field<int>(merged, "n_modes");
  c.omega_min = field<double>(merged, "omega_min");
  c.omega_max = field<double>(merged, "omega_max");
  c.resonance = field<std::string>(merged, "resonance");
  c.topology = field<std::string>(merged, "topology");
  c.collective_scope = field<std::string>(merged, "collective_scope");
  c.initial_state = field<std::string>(merged, "initial_state");
  c.p = field<double>(merged, "p");
  c.code = field<std::string>(merged, "code");
  c.n_cycles = list_field<int>(merged, "n_cycles");
  c.recovery_mode = field<std::string>(merged, "recovery_mode");
  c.seed = field<std::uint64_t>(merged, "seed");
  c.comparison = field<bool>(merged, "comparison");
  c.backend = field<std::string>(merged, "backend");
  c.frame = field<std::string>(merged, "frame");
  c.kernel_clock = field<std::string>(merged, "kernel_clock");
  c.dt = field<double>(merged, "dt");
  c.t_grid = list_field<double>(merged, "t_grid");
  c.t_max = field<double>(merged, "t_max");
  c.n_times = field<int>(merged, "n_times");
  c.time_units = field<std::string>(merged, "time_units");
  c.output = field<std::string>(merged, "output");
  c.workers = field<int>(merged, "workers");
  c.resume = field<bool>(merged, "resume");
  c.sweep_kappa = list_field<double>(merged, "sweep_kappa");
  c.sweep_temperature = list_field<double>(merged, "sweep_temperature");
  c.sweep_p = list_field<double>(merged, "sweep_p");
  c.sweep_code = list_field<std::string>(merged, "sweep_code");
  c.sweep_n_cycles = list_field<int>(merged, "sweep_n_cycles");
  c.sweep_topology = list_field<std::string>(merged, "sweep_topology");
  c.ct_p = list_field<double>(merged, "ct_p");
  c.ct_n_cycles = list_field<int>(merged, "ct_n_cycles");
  c.ct_kt_max = field<double>(merged, "ct_kt_max");
  c.ct_coarse_points = field<int>(merged, "ct_coarse_points");
  c.ct_g_tol = field<double>(merged, "ct_g_tol");
  c.ct_kt_tol = field<double>(merged, "ct_kt_tol");
  c.validate_states = field<int>(merged, "validate_states");

  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("field '" + key + "' out of range: " + what);
  };
  auto one_of = [](const std::string& v, const std::string& key, std::initializer_list<const char*> allowed) {
    std::string list;
    for (const char* a : allowed) {
      if (v == a) return;
      list += (list.empty() ? "" : "|") + std::string(a);
    }
    throw ConfigError("field '" + key + "': '" + v + "' is not one of " + list);
  };
  require(c.omega > 0.0, "omega", "must be > 0");
  require(c.temperature > 0.0, "temperature", "must be > 0");
  require(c.kappa >= 0.0, "kappa", "must be >= 0");
  require(c.n_modes >= 1, "n_modes", "must be >= 1");
  require(c.omega_min >= 0.0 && c.omega_min <= c.omega_max, "omega_min", "need 0 <= omega_min <= omega_max");
  require(c.p >= 0.0 && c.p <= 1.0, "p", "must lie in [0, 1]");
  require(!c.n_cycles.empty(), "n_cycles", "needs at least one entry");
  for (int n : c.n_cycles) require(n >= 1, "n_cycles", "must be >= 1");
  require(c.dt > 0.0, "dt", "must be > 0");
  require(c.t_max >= 0.0, "t_max", "must be >= 0");
  require(c.n_times >= 1, "n_times", "must be >= 1");
  for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
    require(c.t_grid[i] >= 0.0 && (i == 0 || c.t_grid[i] > c.t_grid[i - 1]), "t_grid",
            "must be non-negative and strictly ascending");
  }
  require(c.workers >= 1, "workers", "must be >= 1");
  require(!c.output.empty(), "output", "must name a file");
  for (double k : c.sweep_kappa) require(k >= 0.0, "sweep_kappa", "entries must be >= 0");
  for (double t : c.sweep_temperature) require(t > 0.0, "sweep_temperature", "entries must be > 0");
  for (double p : c.sweep_p) require(p >= 0.0 && p <= 1.0, "sweep_p", "entries must lie in [0, 1]");
  for (int n : c.sweep_n_cycles) require(n >= 1, "sweep_n_cycles", "entries must be >= 1");
  for (double p : c.ct_p) require(p >= 0.0 && p <= 1.0, "ct_p", "entries must lie in [0, 1]");
  for (int n : c.ct_n_cycles) require(n >= 1, "ct_n_cycles", "entries must be >= 1");
  require(c.ct_kt_max > 0.0, "ct_kt_max", "must be > 0");
  require(c.ct_coarse_points >= 2, "ct_coarse_points", "must be >= 2");
  require(c.ct_g_tol > 0.0, "ct_g_tol", "must be > 0");
  require(c.ct_kt_tol > 0.0, "ct_kt_tol", "must be > 0");
  require(c.validate_states >= 1, "validate_states", "must be >= 1");
  one_of(c.resonance, "resonance", {"resonant", "as_written"});
  one_of(c.topology, "topology", {"collective", "local"});
  for (const auto& t : c.sweep_topology) one_of(t, "sweep_topology", {"collective", "local"});
  one_of(c.collective_scope, "collective_scope", {"per_block", "global"});
  one_of(c.initial_state, "initial_state", {"zero", "one", "plus", "werner"});
  one_of(c.code, "code", {"five_qubit", "steane", "toric_822", "none"});
  for (const auto& code : c.sweep_code) one_of(code, "sweep_code", {"five_qubit", "steane", "toric_822", "none"});
  one_of(c.recovery_mode, "recovery_mode", {"mixing", "first", "stochastic"});
  one_of(c.backend, "backend", {"time_local", "memory", "lindblad"});
  one_of(c.frame, "frame", {"interaction", "lab"});
  one_of(c.kernel_clock, "kernel_clock", {"per_cycle", "global"});
  one_of(c.time_units, "time_units", {"omega", "kappa"});
  return c;
}

/// Applies "key=value" overrides. The value is read as JSON when it parses
/// (numbers, booleans, lists) and as a bare string otherwise.
inline void apply_overrides(Json& doc, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + s + "' is not key=value");
    const std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    Json v = Json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;
    doc[key] = v;
  }
}

inline Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return doc;
}

/// File (optional) plus overrides, resolved.
inline RunConfig parse_config(const std::string& path, const std::vector<std::string>& sets = {}) {
  Json doc = path.empty() ? Json::object() : read_config_file(path);
  apply_overrides(doc, sets);
  return resolve_config(doc);
}

/// Times in units of 1/omega.
inline std::vector<double> resolved_times(const RunConfig& c, double kappa) {
  std::vector<double> ts = c.t_grid;
  if (ts.empty()) {
    for (int i = 0; i < c.n_times; ++i) ts.push_back(c.n_times == 1 ? c.t_max : c.t_max * i / (c.n_times - 1));
  }
  if (c.time_units == "kappa") {
    if (!(kappa > 0.0)) throw ConfigError("field 'time_units': kappa units need kappa > 0");
    for (double& t : ts) t /= kappa;
  }
  return ts;
}

inline ProtocolSpec to_protocol(const RunConfig& c) {
  ProtocolSpec s;
  s.initial_state = c.initial_state;
  s.werner_p = c.p;
  s.code = c.code;
  s.cycles = c.n_cycles;
  s.bath.temperature = c.temperature;
  s.bath.kappa = c.kappa;
  s.bath.n_modes = c.n_modes;
  s.bath.omega_min = c.omega_min;
  s.bath.omega_max = c.omega_max;
  s.bath.convention = resonance_from_string(c.resonance);
  s.omega = c.omega;
  s.topology = topology_from_string(c.topology);
  s.scope = collective_scope_from_string(c.collective_scope);
  s.backend = backend_from_string(c.backend);
  s.frame = frame_from_string(c.frame);
  s.clock = kernel_clock_from_string(c.kernel_clock);
  s.recovery = recovery_mode_from_string(c.recovery_mode);
  s.seed = c.seed;
  s.dt = c.dt;
  s.t_grid = resolved_times(c, c.kappa);
  s.comparison = c.comparison;
  return s;
}

// ---------------------------------------------------------------------------
// Writers.

/// Fixed 12-significant-digit formatting.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else if (ch == '\n') out += ' ';
    else out += ch;
  }
  return out + "\"";
}

inline std::string metadata_path(const std::string& csv) {
  std::filesystem::path p(csv);
  if (p.extension() == ".csv") p.replace_extension(".json");
  else p += ".json";
  return p.string();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

inline Json metadata(const std::string& command, const RunConfig& c) {
  Json m;
  m["command"] = command;
  m["units"] = {{"time", "1/omega"}, {"temperature", "omega"}, {"kappa", "omega"}, {"fidelity", "dimensionless"}};
  m["config"] = to_json(c);
  return m;
}

inline std::vector<std::string> qec_columns(const std::vector<int>& cycles) {
  std::vector<std::string> out;
  for (int n : cycles) out.push_back(cycles.size() == 1 ? "F_qec" : "F_qec_n" + std::to_string(n));
  return out;
}

// ---------------------------------------------------------------------------
// Commands. Each returns its exit status; errors propagate as exceptions and
// are mapped to exit codes by run_command.

inline int cmd_simulate(const RunConfig& c, std::ostream& log = std::cout) {
  const ProtocolSpec spec = to_protocol(c);
  ProtocolEngine engine(spec);
  const ExperimentResult r = engine.run();
  std::vector<std::string> cols{"t"};
  if (spec.comparison) cols.push_back("F_no_qec");
  for (const auto& q : qec_columns(r.cycles)) cols.push_back(q);
  std::ostringstream csv;
  csv << "# qecbath simulate\n" << kUnitsLine << "\n";
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << "\n";
  for (std::size_t i = 0; i < r.t_grid.size(); ++i) {
    csv << fmt(r.t_grid[i]);
    if (spec.comparison) csv << "," << fmt(r.fidelity_no_qec[i]);
    for (const auto& f : r.fidelity_qec) csv << "," << fmt(f[i]);
    csv << "\n";
  }
  write_text(c.output, csv.str());
  Json m = metadata("simulate", c);
  m["columns"] = cols;
  m["result"] = r.metadata;
  m["diagnostics"] = {{"max_step_trace_deviation", r.max_trace_deviation},
                      {"max_step_hermiticity_deviation", r.max_hermiticity_deviation},
                      {"min_eigenvalue", r.min_eigenvalue}};
  write_text(metadata_path(c.output), m.dump(2) + "\n");
  log << "simulate: wrote " << r.t_grid.size() << " rows to " << c.output << "\n";
  return kExitOk;
}

inline SweepGrid sweep_grid(const RunConfig& c) {
  SweepGrid g;
  g.kappas = c.sweep_kappa.empty() ? std::vector<double>{c.kappa} : c.sweep_kappa;
  g.temperatures = c.sweep_temperature.empty() ? std::vector<double>{c.temperature} : c.sweep_temperature;
  g.ps = c.sweep_p.empty() ? std::vector<double>{c.p} : c.sweep_p;
  g.codes = c.sweep_code.empty() ? std::vector<std::string>{c.code} : c.sweep_code;
  g.cycles = c.sweep_n_cycles.empty() ? std::vector<int>{c.n_cycles.front()} : c.sweep_n_cycles;
  std::vector<std::string> tops = c.sweep_topology.empty() ? std::vector<std::string>{c.topology} : c.sweep_topology;
  g.topologies.clear();
  for (const auto& t : tops) g.topologies.push_back(topology_from_string(t));
  g.kappa_time_units = c.time_units == "kappa";
  return g;
}

inline constexpr const char* kSweepHeader =
    "index,kappa,temperature,p,code,n_cycles,topology,t,F_no_qec,F_qec,status,message";

inline std::string sweep_rows(const SweepRow& row, std::size_t n_times) {
  const auto& pt = row.point;
  const std::string prefix = std::to_string(pt.index) + "," + fmt(pt.kappa) + "," + fmt(pt.temperature) + "," +
                             fmt(pt.p) + "," + pt.code + "," + std::to_string(pt.n_cycles) + "," +
                             to_string(pt.topology) + ",";
  std::string out;
  if (!row.ok) return prefix + "nan,nan,nan,error," + csv_quote(row.error) + "\n";
  const auto& r = row.result;
  for (std::size_t i = 0; i < n_times; ++i) {
    const double fb = r.fidelity_no_qec.empty() ? std::nan("") : r.fidelity_no_qec[i];
    const double fq = r.fidelity_qec.empty() ? std::nan("") : r.fidelity_qec[0][i];
    out += prefix + fmt(r.t_grid[i]) + "," + fmt(fb) + "," + fmt(fq) + ",ok,\n";
  }
  return out;
}

/// Reads an earlier sweep file and keeps the rows of finished points (all
/// time rows present, or an error row). Returns the kept text.
inline std::string completed_sweep_rows(const std::string& path, std::size_t n_times, std::set<std::size_t>& done) {
  std::ifstream in(path);
  if (!in) return {};
  std::map<std::size_t, std::vector<std::string>> by_point;
  std::map<std::size_t, bool> errored;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("index,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    std::size_t idx = 0;
    try {
      idx = std::stoul(line.substr(0, comma));
    } catch (const std::exception&) {
      continue;
    }
    by_point[idx].push_back(line);
    if (line.find(",error,") != std::string::npos) errored[idx] = true;
  }
  std::string kept;
  for (const auto& [idx, lines] : by_point) {
    if (errored[idx] || lines.size() == n_times) {
      done.insert(idx);
      for (const auto& l : lines) kept += l + "\n";
    }
  }
  return kept;
}

inline int cmd_sweep(const RunConfig& c, std::ostream& log = std::cout) {
  const ProtocolSpec base = to_protocol(c);
  const SweepGrid grid = sweep_grid(c);
  // The base time grid is kept in the configured units; point_spec rescales.
  ProtocolSpec unscaled = base;
  RunConfig omega_units = c;
  omega_units.time_units = "omega";
  unscaled.t_grid = resolved_times(omega_units, c.kappa);
  const std::size_t n_times = unscaled.t_grid.size();
  const std::size_t n_points = expand_grid(grid).size();

  std::set<std::size_t> done;
  std::string kept;
  if (c.resume) kept = completed_sweep_rows(c.output, n_times, done);
  std::ofstream out(c.output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + c.output + "'");
  out << "# qecbath sweep\n" << kUnitsLine << "\n" << kSweepHeader << "\n" << kept;
  out.flush();

  Json m = metadata("sweep", c);
  m["grid_points"] = n_points;
  m["resumed_points"] = done.size();
  m["complete"] = false;
  write_text(metadata_path(c.output), m.dump(2) + "\n");

  // Error rows carried over from an earlier run still count.
  std::size_t failures = 0;
  {
    std::istringstream ks(kept);
    std::string l;
    while (std::getline(ks, l)) failures += l.find(",error,") != std::string::npos;
  }
  run_sweep(unscaled, grid, c.workers, done, [&](const SweepRow& row) {
    out << sweep_rows(row, n_times);
    out.flush();
    if (!row.ok) {
      ++failures;
      log << "sweep: point " << row.point.index << " failed: " << row.error << "\n";
    }
  });
  m["complete"] = true;
  m["failed_points"] = failures;
  write_text(metadata_path(c.output), m.dump(2) + "\n");
  log << "sweep: " << n_points << " points (" << done.size() << " resumed) written to " << c.output << "\n";
  return failures == 0 ? kExitOk : kExitDomain;
}

inline int cmd_critical_time(const RunConfig& c, std::ostream& log = std::cout) {
  const ProtocolSpec spec = to_protocol(c);
  if (!spec.has_code()) throw ConfigError("field 'code': critical-time needs a code");
  CriticalTimeOptions opt;
  opt.kt_max = c.ct_kt_max;
  opt.coarse_points = c.ct_coarse_points;
  opt.g_tol = c.ct_g_tol;
  opt.kt_tol = c.ct_kt_tol;
  const bool werner = c.initial_state == "werner";
  const std::vector<double> ps = werner ? c.ct_p : std::vector<double>{std::nan("")};
  std::ostringstream csv;
  csv << "# qecbath critical-time\n" << kUnitsLine << "\n";
  csv << "p,n_cycles,kappa_tc,gap_at_root,evaluations,status\n";
  Json notes = Json::array();
  ProtocolEngine engine(spec);  // shared so block channels are reused across p
  for (int n : c.ct_n_cycles) {
    for (double p : ps) {
      const DensityMatrix rho0 = werner ? werner_state(p) : initial_state(c.initial_state);
      const auto r = critical_time(engine, rho0, n, opt);
      csv << fmt(p) << "," << n << "," << fmt(r.kappa_tc) << "," << fmt(r.gap_at_root) << "," << r.evaluations
          << "," << (r.found ? "ok" : "no_crossover") << "\n";
      notes.push_back({{"p", werner ? Json(p) : Json(nullptr)}, {"n_cycles", n}, {"note", r.note}});
      log << "critical-time: p=" << fmt(p) << " n_cycles=" << n << " -> "
          << (r.found ? "kappa t_c = " + fmt(r.kappa_tc) : r.note) << "\n";
    }
  }
  write_text(c.output, csv.str());
  Json m = metadata("critical-time", c);
  m["search"] = {{"window_kappa_t", Json::array({0.0, c.ct_kt_max})},
                 {"coarse_points", c.ct_coarse_points},
                 {"gap_tolerance", c.ct_g_tol},
                 {"kappa_t_tolerance", c.ct_kt_tol}};
  m["notes"] = notes;
  write_text(metadata_path(c.output), m.dump(2) + "\n");
  return kExitOk;
}

inline int cmd_validate_codes(const RunConfig& c, std::ostream& log = std::cout) {
  std::ostringstream csv;
  csv << "# qecbath validate-codes\n";
  csv << "code,error,syndrome,correction,passed,detail\n";
  Json summary = Json::object();
  bool all_ok = true;
  for (const char* name : {"five_qubit", "steane", "toric_822"}) {
    std::mt19937_64 rng(c.seed);
    const QecCode code = build_code(name);
    const auto checks = verify_code(code, c.validate_states, rng);
    std::size_t passed = 0;
    for (const auto& ch : checks) {
      passed += ch.passed;
      csv << ch.code << "," << ch.error << "," << ch.syndrome << "," << csv_quote(ch.correction) << ","
          << (ch.passed ? "true" : "false") << "," << csv_quote(ch.detail) << "\n";
      if (!ch.passed) log << "validate-codes: " << name << " " << ch.error << " FAILED (" << ch.detail << ")\n";
    }
    all_ok = all_ok && passed == checks.size();
    summary[name] = {{"verified", passed}, {"checked", checks.size()}};
    log << "validate-codes: " << name << " " << passed << "/" << checks.size()
        << " error/syndrome pairs verified\n";
  }
  write_text(c.output, csv.str());
  Json m = metadata("validate-codes", c);
  m["summary"] = summary;
  m["passed"] = all_ok;
  write_text(metadata_path(c.output), m.dump(2) + "\n");
  return all_ok ? kExitOk : kExitDomain;
}

/// Resolves the config and runs `command`, mapping failures to exit codes:
/// configuration problems give 2, domain and numerical failures give 1.
inline int run_command(const std::string& command, const std::string& config_path,
                       const std::vector<std::string>& sets, std::ostream& log = std::cout,
                       std::ostream& err = std::cerr) {
  try {
    const RunConfig c = parse_config(config_path, sets);
    if (command == "simulate") return cmd_simulate(c, log);
    if (command == "sweep") return cmd_sweep(c, log);
    if (command == "critical-time") return cmd_critical_time(c, log);
    if (command == "validate-codes") return cmd_validate_codes(c, log);
    err << "unknown command '" << command << "'\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace qecbath
