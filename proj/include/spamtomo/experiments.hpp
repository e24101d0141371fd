// Copyright 2026 The spamtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seeded sweeps over shot counts, plus CSV and JSON serialization of their results.
//
// Configuration is an INI file (see samples/sweep.ini for every key and its default):
//
//   [sweep]      methods, n_values, n_spam_values, runs_per_point, seed, workers, output
//   [truth]      systematic_angle_deg, stochastic_scale, omega_rot, t2
//   [timeseries] points, span_t2
//   [fit]        weights, max_evaluations, tolerance, restarts_A/B/C, init_A/B/C,
//                near_truth_delta, ball_penalty
//   [process]    n_values, omega_rot, t2, outer_iterations, mu0, eta, inner_max_evaluations
//
// Lists are comma separated; shot counts may be written as 1e6. Keys are case sensitive and
// a `;` or `#` starts a comment line.

#pragma once

#include "spamtomo/data_sim.hpp"
#include "spamtomo/estimators.hpp"
#include "spamtomo/process_tomo.hpp"
#include "spamtomo/qubit.hpp"
#include "spamtomo/spam_model.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace spamtomo {

/// Failure reading or writing a file; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or structure.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FitConfig {
  WeightConvention weights = WeightConvention::ChiSquare;
  int max_evaluations = 4000;
  double tolerance = 1e-12;
  std::map<Method, int> restarts{{Method::A, 8}, {Method::B, 4}, {Method::C, 8}};
  std::map<Method, InitKind> init{
      {Method::A, InitKind::NearTruth}, {Method::B, InitKind::Ignorant}, {Method::C, InitKind::NearIdeal}};
  double near_truth_delta = 0.02;
  double ball_penalty = 1.0;

  FitOptions options(Method m) const {
    FitOptions o;
    o.budget.max_evaluations = max_evaluations;
    o.budget.tolerance = tolerance;
    o.budget.n_restarts = restarts.at(m);
    o.weights = weights;
    o.ball_penalty = ball_penalty;
    return o;
  }
};

struct ProcessConfig {
  std::vector<std::int64_t> n_values{100000, 1000000, 10000000};
  EvolutionParams hadamard{1.0, 100.0};
  AugLagOptions auglag;
};

struct SweepConfig {
  std::vector<Method> methods{Method::A, Method::B, Method::C};
  std::vector<std::int64_t> n_values{1000, 10000, 100000, 1000000, 10000000};
  std::vector<std::int64_t> n_spam_values{1000000, 1000000000};
  int runs_per_point = 10;
  std::uint64_t seed = 1;
  int workers = 0;  ///< 0 means one per hardware thread
  std::string output;
  GroundTruthConfig truth;
  int time_points = 50;
  double time_span_t2 = 2.0;
  FitConfig fit;
  ProcessConfig process;

  void validate() const {
    auto increasing = [](const std::vector<std::int64_t>& v, const char* what) {
      if (v.empty()) throw ConfigError(std::string(what) + " is empty");
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] < 1) throw ConfigError(std::string(what) + " must be positive");
        if (k > 0 && v[k] <= v[k - 1])
          throw ConfigError(std::string(what) + " must be strictly increasing");
      }
    };
    if (methods.empty()) throw ConfigError("methods is empty");
    increasing(n_values, "n_values");
    increasing(n_spam_values, "n_spam_values");
    increasing(process.n_values, "process.n_values");
    if (runs_per_point < 1) throw ConfigError("runs_per_point must be >= 1");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    if (time_points < 2) throw ConfigError("timeseries.points must be >= 2");
    if (!(time_span_t2 > 0.0)) throw ConfigError("timeseries.span_t2 must be > 0");
    if (fit.max_evaluations < 1 || !(fit.tolerance > 0.0))
      throw ConfigError("fit budget must be positive");
    for (const auto& [m, r] : fit.restarts)
      if (r < 1) throw ConfigError("restarts must be >= 1");
    try {
      truth.validate();
      process.hadamard.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!(process.hadamard.omega_rot > 0.0)) throw ConfigError("process.omega_rot must be > 0");
    if (process.auglag.outer_iterations < 1 || !(process.auglag.mu0 > 0.0) ||
        !(process.auglag.eta >= 1.0))
      throw ConfigError("invalid augmented Lagrangian schedule");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

inline double parse_number(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + s + "' is not a number");
  }
  if (used != s.size()) throw ConfigError(key + ": '" + s + "' is not a number");
  return v;
}

inline std::int64_t parse_count(const std::string& key, const std::string& s) {
  const double v = parse_number(key, s);
  if (!(v >= 1.0) || v > 9e18 || std::floor(v) != v)
    throw ConfigError(key + ": '" + s + "' is not a positive whole number");
  return static_cast<std::int64_t>(v);
}

inline std::vector<std::int64_t> parse_counts(const std::string& key, const std::string& s) {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(s)) out.push_back(parse_count(key, item));
  return out;
}

}  // namespace detail

/// Reads a sweep configuration. Unknown sections or keys are rejected so that typos surface.
inline SweepConfig load_config(std::istream& in, const std::string& origin = "<stream>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  SweepConfig cfg;
  const std::map<std::string, std::vector<std::string>> known{
      {"sweep", {"methods", "n_values", "n_spam_values", "runs_per_point", "seed", "workers", "output"}},
      {"truth", {"systematic_angle_deg", "stochastic_scale", "omega_rot", "t2"}},
      {"timeseries", {"points", "span_t2"}},
      {"fit", {"weights", "max_evaluations", "tolerance", "restarts_A", "restarts_B", "restarts_C",
               "init_A", "init_B", "init_C", "near_truth_delta", "ball_penalty"}},
      {"process", {"n_values", "omega_rot", "t2", "outer_iterations", "mu0", "eta",
                   "inner_max_evaluations"}}};
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError(origin + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError(origin + ": unknown key " + section + "." + key);
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.')))
      return detail::trim(*v);
    return std::nullopt;
  };
  auto num = [&](const std::string& path, double& dst) {
    if (auto v = get(path)) dst = detail::parse_number(path, *v);
  };
  auto integer = [&](const std::string& path, int& dst) {
    if (auto v = get(path)) {
      const double d = detail::parse_number(path, *v);
      if (std::floor(d) != d || std::abs(d) > 1e9) throw ConfigError(path + " must be an integer");
      dst = static_cast<int>(d);
    }
  };

  try {
    if (auto v = get("sweep.methods")) {
      cfg.methods.clear();
      for (const auto& m : detail::split_list(*v)) cfg.methods.push_back(parse_method(m));
    }
    if (auto v = get("sweep.n_values")) cfg.n_values = detail::parse_counts("sweep.n_values", *v);
    if (auto v = get("sweep.n_spam_values"))
      cfg.n_spam_values = detail::parse_counts("sweep.n_spam_values", *v);
    integer("sweep.runs_per_point", cfg.runs_per_point);
    if (auto v = get("sweep.seed")) {
      try {
        std::size_t used = 0;
        if (v->empty() || !std::isdigit(static_cast<unsigned char>(v->front())))
          throw std::invalid_argument("not a digit");
        cfg.seed = std::stoull(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError("sweep.seed: '" + *v + "' is not an unsigned integer");
      }
    }
    integer("sweep.workers", cfg.workers);
    if (auto v = get("sweep.output")) cfg.output = *v;
    num("truth.systematic_angle_deg", cfg.truth.systematic_angle_deg);
    num("truth.stochastic_scale", cfg.truth.stochastic_scale);
    num("truth.omega_rot", cfg.truth.omega_rot);
    num("truth.t2", cfg.truth.t2);
    integer("timeseries.points", cfg.time_points);
    num("timeseries.span_t2", cfg.time_span_t2);
    if (auto v = get("fit.weights")) {
      if (*v == "chi_square") cfg.fit.weights = WeightConvention::ChiSquare;
      else if (*v == "paper") cfg.fit.weights = WeightConvention::Paper;
      else throw ConfigError("fit.weights must be chi_square or paper");
    }
    integer("fit.max_evaluations", cfg.fit.max_evaluations);
    num("fit.tolerance", cfg.fit.tolerance);
    for (Method m : {Method::A, Method::B, Method::C}) {
      integer("fit.restarts_" + to_string(m), cfg.fit.restarts[m]);
      if (auto v = get("fit.init_" + to_string(m))) cfg.fit.init[m] = parse_init_kind(*v);
    }
    num("fit.near_truth_delta", cfg.fit.near_truth_delta);
    num("fit.ball_penalty", cfg.fit.ball_penalty);
    if (auto v = get("process.n_values"))
      cfg.process.n_values = detail::parse_counts("process.n_values", *v);
    num("process.omega_rot", cfg.process.hadamard.omega_rot);
    num("process.t2", cfg.process.hadamard.t2);
    integer("process.outer_iterations", cfg.process.auglag.outer_iterations);
    num("process.mu0", cfg.process.auglag.mu0);
    num("process.eta", cfg.process.auglag.eta);
    integer("process.inner_max_evaluations", cfg.process.auglag.inner.max_evaluations);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

inline SweepConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return load_config(in, path);
}

// ---------------------------------------------------------------------------------------------
// Result rows.

struct ResultRow {
  std::string method;
  std::int64_t n_spam = 0;
  std::optional<std::int64_t> n_shots;  ///< process shots; empty for SPAM-only sweeps
  int run = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;

  auto key() const { return std::tie(method, n_spam, n_shots, run, metric); }
  bool operator<(const ResultRow& o) const { return key() < o.key(); }
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<nlohmann::json> fits;  ///< one record per SPAM fit
  int non_converged = 0;
};

inline constexpr const char* kCsvHeader = "method,n_spam,n_shots,run,seed,metric,value";

inline void write_csv(std::ostream& out, std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end());
  out << kCsvHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.method << ',' << r.n_spam << ',';
    if (r.n_shots) out << *r.n_shots;
    out << ',' << r.run << ',' << r.seed << ',' << r.metric << ',' << r.value << '\n';
  }
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, rows);
  if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------------------------
// JSON.

inline nlohmann::json vec_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json to_json(const SpamParameterSet& p) {
  nlohmann::json j;
  j["method"] = to_string(p.method);
  j["pack_ordering"] = std::string(kPackOrdering);
  // A ground truth labelled A may break that model's unit-length constraints and then has
  // no packed form; the explicit components below are always present.
  try {
    const Eigen::VectorXd x = pack(p);
    j["parameters"] = std::vector<double>(x.data(), x.data() + x.size());
  } catch (const std::invalid_argument&) {
    j["parameters"] = nullptr;
  }
  j["states"] = nlohmann::json::array();
  for (const auto& s : p.states) j["states"].push_back(vec_to_json(s.r));
  j["measurements"] = nlohmann::json::array();
  for (const auto& m : p.measurements) j["measurements"].push_back(vec_to_json(m.direction));
  j["eps0"] = p.noise.eps0;
  j["eps1"] = p.noise.eps1;
  if (p.evolution) {
    j["evolution"] = {{"omega_rot", p.evolution->omega_rot}};
    // JSON has no infinity; an absent t2 means no dephasing.
    if (std::isfinite(p.evolution->t2)) j["evolution"]["t2"] = p.evolution->t2;
  }
  return j;
}

/// Inverse of to_json. Components are read directly, so the round trip is exact.
inline SpamParameterSet spam_from_json(const nlohmann::json& j) {
  if (j.value("pack_ordering", std::string(kPackOrdering)) != kPackOrdering)
    throw std::invalid_argument("unsupported pack ordering '" +
                                j["pack_ordering"].get<std::string>() + "'");
  SpamParameterSet p;
  p.method = parse_method(j.at("method").get<std::string>());
  const auto& states = j.at("states");
  const auto& meas = j.at("measurements");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vec3 r = vec_from_json(states[i]);
    if (i == 0) p.states.push_back(StateParams::plus_z());
    else if (i == 1) p.states.push_back(StateParams::planar_x(r.x(), r.z()));
    else p.states.push_back(StateParams::general(r));
  }
  for (std::size_t k = 0; k < meas.size(); ++k) {
    const Vec3 d = vec_from_json(meas[k]);
    p.measurements.push_back(k == 0 ? MeasurementParams::plus_z() : MeasurementParams::general(d));
  }
  p.noise = {j.at("eps0").get<double>(), j.at("eps1").get<double>()};
  if (j.contains("evolution")) {
    const auto& e = j["evolution"];
    p.evolution = EvolutionParams{e.at("omega_rot").get<double>(),
                                  e.contains("t2") ? e["t2"].get<double>()
                                                   : std::numeric_limits<double>::infinity()};
  }
  validate_shape(p);
  return p;
}

/// Row-major list of 16 [re, im] pairs.
inline nlohmann::json to_json(const ChoiState& c) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 4; ++col) j.push_back({c.matrix()(r, col).real(), c.matrix()(r, col).imag()});
  return j;
}

inline ChoiState choi_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 16) throw std::invalid_argument("Choi JSON must hold 16 entries");
  Mat4 m;
  for (int k = 0; k < 16; ++k) m(k / 4, k % 4) = Complex(j[k][0].get<double>(), j[k][1].get<double>());
  return ChoiState(m);
}

inline nlohmann::json to_json(const FitResult& f) {
  return {{"estimate", to_json(f.estimate)},
          {"objective_value", f.objective_value},
          {"converged", f.converged},
          {"n_evaluations", f.n_evaluations},
          {"initial_point_id", f.initial_point_id}};
}

inline nlohmann::json to_json(const SweepConfig& c) {
  nlohmann::json j;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(to_string(m));
  j["sweep"] = {{"methods", methods},
                {"n_values", c.n_values},
                {"n_spam_values", c.n_spam_values},
                {"runs_per_point", c.runs_per_point},
                {"seed", c.seed}};
  j["truth"] = {{"systematic_angle_deg", c.truth.systematic_angle_deg},
                {"stochastic_scale", c.truth.stochastic_scale},
                {"omega_rot", c.truth.omega_rot},
                {"t2", c.truth.t2}};
  j["timeseries"] = {{"points", c.time_points}, {"span_t2", c.time_span_t2}};
  nlohmann::json fit = {{"weights", c.fit.weights == WeightConvention::ChiSquare ? "chi_square" : "paper"},
                        {"max_evaluations", c.fit.max_evaluations},
                        {"tolerance", c.fit.tolerance},
                        {"near_truth_delta", c.fit.near_truth_delta},
                        {"ball_penalty", c.fit.ball_penalty}};
  for (Method m : {Method::A, Method::B, Method::C}) {
    fit["restarts_" + to_string(m)] = c.fit.restarts.at(m);
    fit["init_" + to_string(m)] = to_string(c.fit.init.at(m));
  }
  j["fit"] = fit;
  j["process"] = {{"n_values", c.process.n_values},
                  {"omega_rot", c.process.hadamard.omega_rot},
                  {"t2", c.process.hadamard.t2},
                  {"outer_iterations", c.process.auglag.outer_iterations},
                  {"mu0", c.process.auglag.mu0},
                  {"eta", c.process.auglag.eta},
                  {"inner_max_evaluations", c.process.auglag.inner.max_evaluations}};
  return j;
}

inline void emit_json(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Dataset CSV: one row per cell, `layout,state,measurement,time_index,time,shots,count`, with
// zero-based indices and empty time fields for static tables.

inline constexpr const char* kDatasetHeader = "layout,state,measurement,time_index,time,shots,count";

inline void write_dataset(std::ostream& out, const CountDataset& d) {
  d.validate();
  out << kDatasetHeader << '\n' << std::setprecision(17);
  for (int k = 0; k < d.n_times(); ++k)
    for (int i = 0; i < d.n_states; ++i)
      for (int j = 0; j < d.n_measurements; ++j) {
        out << to_string(d.layout) << ',' << i << ',' << j << ',';
        if (d.layout == DataLayout::Timeseries) out << k << ',' << d.times[k];
        else out << ',';
        out << ',' << d.shots << ',' << d.count(i, j, k) << '\n';
      }
}

inline CountDataset read_dataset(std::istream& in, const std::string& origin = "<stream>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kDatasetHeader)
    throw IoError(origin + ": missing dataset header");
  struct Cell {
    int i, j, k;
    double t;
    std::int64_t shots, count;
  };
  std::vector<Cell> cells;
  std::optional<DataLayout> layout;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(detail::trim(item));
    if (f.size() == 6 && line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw IoError(origin + ":" + std::to_string(lineno) + ": expected 7 fields");
    try {
      const DataLayout l = f[0] == "static"       ? DataLayout::Static
                           : f[0] == "timeseries" ? DataLayout::Timeseries
                                                  : throw std::invalid_argument("bad layout");
      if (layout && *layout != l) throw std::invalid_argument("mixed layouts");
      layout = l;
      Cell c{std::stoi(f[1]), std::stoi(f[2]), 0, 0.0, std::stoll(f[5]), std::stoll(f[6])};
      if (l == DataLayout::Timeseries) {
        c.k = std::stoi(f[3]);
        c.t = std::stod(f[4]);
      }
      if (c.i < 0 || c.j < 0 || c.k < 0) throw std::invalid_argument("negative index");
      cells.push_back(c);
    } catch (const std::exception& e) {
      throw IoError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (cells.empty()) throw IoError(origin + ": no data rows");
  int ns = 0, nm = 0, nt = 0;
  for (const auto& c : cells) {
    ns = std::max(ns, c.i + 1);
    nm = std::max(nm, c.j + 1);
    nt = std::max(nt, c.k + 1);
  }
  std::vector<double> times;
  if (*layout == DataLayout::Timeseries) times.assign(nt, std::numeric_limits<double>::quiet_NaN());
  CountDataset d = CountDataset::make(*layout, ns, nm, cells.front().shots, times);
  std::vector<char> seen(d.counts.size(), 0);
  for (const auto& c : cells) {
    if (c.shots != d.shots) throw IoError(origin + ": shot count differs between cells");
    const std::size_t idx = d.index(c.i, c.j, c.k);
    if (seen[idx]) throw IoError(origin + ": duplicate cell");
    seen[idx] = 1;
    d.counts[idx] = c.count;
    if (*layout == DataLayout::Timeseries) d.times[c.k] = c.t;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw IoError(origin + ": table is not complete");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(origin + ": " + e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------------------------
// Sweeps.

/// Runs jobs 0..n-1 on `workers` threads. Each job writes only its own slot, so the outcome
/// does not depend on scheduling.
inline void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, std::max(n, 1));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto loop = [&] {
    for (int k = next++; k < n; k = next++) {
      try {
        job(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

inline constexpr std::uint64_t kTruthTag = 0x7472757468ULL;
inline constexpr std::uint64_t kSpamDataTag = 0x7370616dULL;
inline constexpr std::uint64_t kInitTag = 0x696e6974ULL;
inline constexpr std::uint64_t kProcessTag = 0x70726f63ULL;

inline std::uint64_t method_tag(Method m) { return static_cast<std::uint64_t>(m) + 1; }

}  // namespace detail

/// Seeds of one sweep point. The truth depends on the run only, so every method and shot
/// count of a run sees the same underlying device.
struct PointSeeds {
  std::uint64_t truth;
  std::uint64_t data;
  std::uint64_t init;

  static PointSeeds of(std::uint64_t master, Method m, std::int64_t n, int run) {
    const auto r = static_cast<std::uint64_t>(run);
    const auto nn = static_cast<std::uint64_t>(n);
    return {derive_seed(master, {detail::kTruthTag, r}),
            derive_seed(master, {detail::kSpamDataTag, detail::method_tag(m), nn, r}),
            derive_seed(master, {detail::kInitTag, detail::method_tag(m), nn, r})};
  }
};

struct SpamFitOutcome {
  SpamParameterSet truth;
  FitResult fit;
  CountDataset data;
};

/// Truth, data and fit for one (method, N, run) point.
inline SpamFitOutcome run_spam_point(const SweepConfig& cfg, Method m, std::int64_t n, int run) {
  const PointSeeds seeds = PointSeeds::of(cfg.seed, m, n, run);
  GroundTruthConfig tc = cfg.truth;
  tc.seed = seeds.truth;
  SpamFitOutcome out{make_ground_truth(tc, m), {}, {}};
  if (m == Method::B) {
    out.data = sample_timeseries(out.truth, default_time_grid(tc.t2, cfg.time_points, cfg.time_span_t2),
                                 n, seeds.data);
  } else {
    out.data = sample_static(out.truth, n, seeds.data);
  }
  InitStrategy init;
  init.kind = cfg.fit.init.at(m);
  init.delta = cfg.fit.near_truth_delta;
  init.seed = seeds.init;
  if (init.kind == InitKind::NearTruth) init.truth = out.truth;
  out.fit = fit(m, out.data, cfg.fit.options(m), init);
  return out;
}

inline std::vector<std::pair<std::string, double>> spam_metrics(const SpamFitOutcome& o) {
  std::vector<std::pair<std::string, double>> m;
  const ReconstructionReport rep = reconstruction_report(o.fit.estimate, o.truth);
  m.emplace_back("infidelity_state2", rep.state_infidelity[1]);
  for (std::size_t i = 2; i < rep.state_infidelity.size(); ++i)
    m.emplace_back("infidelity_state" + std::to_string(i + 1), rep.state_infidelity[i]);
  for (std::size_t j = 1; j < rep.alpha_deg.size(); ++j)
    m.emplace_back("alpha_E" + std::to_string(j + 1) + "_deg", rep.alpha_deg[j]);
  m.emplace_back("eps0_error", rep.eps0_error);
  m.emplace_back("eps1_error", rep.eps1_error);
  if (rep.omega_rel_error) m.emplace_back("omega_rel_error", *rep.omega_rel_error);
  if (rep.t2_rel_error) m.emplace_back("t2_rel_error", *rep.t2_rel_error);
  const ReconstructionReport aligned =
      reconstruction_report(gauge_align(o.fit.estimate, o.truth), o.truth);
  m.emplace_back("aligned_infidelity_state2", aligned.state_infidelity[1]);
  const SpamObjective objective(o.fit.estimate.method, o.data);
  m.emplace_back("null_directions", null_directions(objective, o.fit.parameters));
  m.emplace_back("objective", o.fit.objective_value);
  m.emplace_back("converged", o.fit.converged ? 1.0 : 0.0);
  m.emplace_back("n_evaluations", o.fit.n_evaluations);
  return m;
}

/// For every method, N and run: draw the truth, sample data, fit and report metrics.
inline SweepResult run_spam_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Job {
    Method m;
    std::int64_t n;
    int run;
  };
  std::vector<Job> jobs;
  for (Method m : cfg.methods)
    for (std::int64_t n : cfg.n_values)
      for (int r = 0; r < cfg.runs_per_point; ++r) jobs.push_back({m, n, r});
  std::vector<std::vector<ResultRow>> rows(jobs.size());
  std::vector<nlohmann::json> fits(jobs.size());
  std::vector<char> converged(jobs.size(), 0);
  parallel_for(static_cast<int>(jobs.size()), cfg.workers, [&](int k) {
    const Job& job = jobs[k];
    const SpamFitOutcome o = run_spam_point(cfg, job.m, job.n, job.run);
    const std::uint64_t seed = PointSeeds::of(cfg.seed, job.m, job.n, job.run).data;
    for (const auto& [name, value] : spam_metrics(o))
      rows[k].push_back({to_string(job.m), job.n, std::nullopt, job.run, seed, name, value});
    fits[k] = to_json(o.fit);
    fits[k]["method"] = to_string(job.m);
    fits[k]["n_spam"] = job.n;
    fits[k]["run"] = job.run;
    fits[k]["truth"] = to_json(o.truth);
    converged[k] = o.fit.converged;
  });
  SweepResult res;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    res.rows.insert(res.rows.end(), rows[k].begin(), rows[k].end());
    res.fits.push_back(std::move(fits[k]));
    res.non_converged += converged[k] ? 0 : 1;
  }
  std::sort(res.rows.begin(), res.rows.end());
  return res;
}

/// Seed of the process data at N shots. Independent of the SPAM shot count, so curves for
/// different N_spam share their process data.
inline std::uint64_t process_data_seed(std::uint64_t master, Method m, std::int64_t n, int run) {
  return derive_seed(master, {detail::kProcessTag, detail::method_tag(m),
                              static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(run)});
}

/// For every method, N_spam, run and process shot count N: fit SPAM with N_spam shots,
/// simulate the noisy Hadamard with the true SPAM at N shots, reconstruct with the fitted SPAM
/// and compare with the truth and the ideal gate.
inline SweepResult run_process_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const ChoiState truth_gate = hadamard_truth(cfg.process.hadamard);
  const ChoiState ideal_gate = choi_from_unitary(hadamard());
  const double reference = process_fidelity(truth_gate, ideal_gate);
  struct Job {
    Method m;
    std::int64_t n_spam;
    int run;
  };
  std::vector<Job> jobs;
  for (Method m : cfg.methods)
    for (std::int64_t ns : cfg.n_spam_values)
      for (int r = 0; r < cfg.runs_per_point; ++r) jobs.push_back({m, ns, r});
  std::vector<std::vector<ResultRow>> rows(jobs.size());
  std::vector<nlohmann::json> fits(jobs.size());
  std::vector<int> failures(jobs.size(), 0);
  parallel_for(static_cast<int>(jobs.size()), cfg.workers, [&](int k) {
    const Job& job = jobs[k];
    const SpamFitOutcome o = run_spam_point(cfg, job.m, job.n_spam, job.run);
    failures[k] += o.fit.converged ? 0 : 1;
    fits[k] = to_json(o.fit);
    fits[k]["method"] = to_string(job.m);
    fits[k]["n_spam"] = job.n_spam;
    fits[k]["run"] = job.run;
    const SpamFrame fitted = frame_of(o.fit.estimate);
    for (std::int64_t n : cfg.process.n_values) {
      const std::uint64_t seed = process_data_seed(cfg.seed, job.m, n, job.run);
      const CountDataset d = sample_process(o.truth, truth_gate, n, seed);
      const ChoiState raw = linear_invert(d.frequencies(), fitted);
      const MleResult mle = mle_project(raw, static_cast<double>(n), cfg.process.auglag);
      failures[k] += mle.converged ? 0 : 1;
      auto add = [&](const std::string& name, double v) {
        rows[k].push_back({to_string(job.m), job.n_spam, n, job.run, seed, name, v});
      };
      add("fidelity_est_truth", process_fidelity(truth_gate, mle.choi));
      add("fidelity_est_ideal", process_fidelity(ideal_gate, mle.choi));
      add("fidelity_truth_ideal", reference);
      add("fidelity_linear_truth", process_fidelity(truth_gate, raw));
      add("linear_min_eigenvalue", raw.min_eigenvalue());
      add("max_constraint", mle.max_constraint);
      add("mle_converged", mle.converged ? 1.0 : 0.0);
    }
  });
  SweepResult res;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    res.rows.insert(res.rows.end(), rows[k].begin(), rows[k].end());
    res.fits.push_back(std::move(fits[k]));
    res.non_converged += failures[k];
  }
  std::sort(res.rows.begin(), res.rows.end());
  return res;
}

/// JSON document for a sweep: ordering tag, configuration echo and every SPAM fit.
inline nlohmann::json sweep_document(const SweepConfig& cfg, const SweepResult& res,
                                     const std::string& kind) {
  return {{"kind", kind},
          {"pack_ordering", std::string(kPackOrdering)},
          {"config", to_json(cfg)},
          {"fits", res.fits},
          {"non_converged", res.non_converged}};
}

}  // namespace spamtomo
