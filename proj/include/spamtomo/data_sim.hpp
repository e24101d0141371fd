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

#pragma once

#include "spamtomo/qubit.hpp"
#include "spamtomo/spam_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spamtomo {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for one sweep point; each component is folded in order so that distinct tuples give
/// unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

struct GroundTruthConfig {
  double systematic_angle_deg = 10.0;
  double stochastic_scale = 0.05;
  double omega_rot = 1.0;
  double t2 = 40.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(systematic_angle_deg >= 0.0))
      throw std::invalid_argument("GroundTruthConfig: systematic_angle_deg must be >= 0");
    if (!(stochastic_scale >= 0.0 && stochastic_scale < 0.5))
      throw std::invalid_argument("GroundTruthConfig: stochastic_scale must lie in [0, 0.5)");
    if (!(t2 > 0.0)) throw std::invalid_argument("GroundTruthConfig: t2 must be > 0");
    if (!(omega_rot >= 0.0)) throw std::invalid_argument("GroundTruthConfig: omega_rot must be >= 0");
  }
};

enum class DataLayout { Static, Timeseries };

inline std::string to_string(DataLayout l) { return l == DataLayout::Static ? "static" : "timeseries"; }

/// Counts n_{j|i}(t_k) out of `shots` trials per cell.
struct CountDataset {
  DataLayout layout = DataLayout::Static;
  int n_states = 0;
  int n_measurements = 0;
  std::int64_t shots = 0;
  std::vector<double> times;  ///< timeseries only
  std::vector<std::int64_t> counts;

  static CountDataset make(DataLayout layout, int n_states, int n_measurements,
                           std::int64_t shots, std::vector<double> times = {}) {
    CountDataset d;
    d.layout = layout;
    d.n_states = n_states;
    d.n_measurements = n_measurements;
    d.shots = shots;
    d.times = std::move(times);
    d.counts.assign(static_cast<std::size_t>(d.n_times() * n_states * n_measurements), 0);
    return d;
  }

  int n_times() const {
    return layout == DataLayout::Static ? 1 : static_cast<int>(times.size());
  }

  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(k) * n_states + i) * n_measurements + j;
  }

  std::int64_t& count(int i, int j, int k = 0) { return counts[index(i, j, k)]; }
  std::int64_t count(int i, int j, int k = 0) const { return counts[index(i, j, k)]; }

  double frequency(int i, int j, int k = 0) const {
    return static_cast<double>(count(i, j, k)) / static_cast<double>(shots);
  }

  Eigen::MatrixXd frequencies(int k = 0) const {
    Eigen::MatrixXd f(n_states, n_measurements);
    for (int i = 0; i < n_states; ++i)
      for (int j = 0; j < n_measurements; ++j) f(i, j) = frequency(i, j, k);
    return f;
  }

  void validate() const {
    if (shots < 1) throw std::invalid_argument("CountDataset: shots must be >= 1");
    if (n_states < 1 || n_measurements < 1)
      throw std::invalid_argument("CountDataset: empty table");
    if (layout == DataLayout::Timeseries && times.empty())
      throw std::invalid_argument("CountDataset: timeseries without times");
    if (counts.size() != static_cast<std::size_t>(n_times() * n_states * n_measurements))
      throw std::invalid_argument("CountDataset: table is not rectangular");
    for (auto c : counts)
      if (c < 0 || c > shots) throw std::invalid_argument("CountDataset: count outside [0, N]");
  }
};

/// M equally spaced times on [0, span_t2 * T2], both ends included.
inline std::vector<double> default_time_grid(double t2, int points = 50, double span_t2 = 2.0) {
  if (points < 2) throw std::invalid_argument("default_time_grid: need at least 2 points");
  std::vector<double> t(points);
  for (int k = 0; k < points; ++k) t[k] = span_t2 * t2 * k / static_cast<double>(points - 1);
  return t;
}

namespace detail {

/// Rotates v by `angle` about an axis perpendicular to v at uniformly random azimuth.
inline Vec3 tilt(const Vec3& v, double angle, std::mt19937_64& rng) {
  const Vec3 u = v.normalized();
  const Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 e1 = u.cross(helper).normalized();
  const Vec3 e2 = u.cross(e1);
  std::uniform_real_distribution<double> azimuth(0.0, 2.0 * std::numbers::pi);
  const double phi = azimuth(rng);
  const Vec3 axis = std::cos(phi) * e1 + std::sin(phi) * e2;
  return std::cos(angle) * u + std::sin(angle) * axis.cross(u);
}

class TruthSampler {
 public:
  TruthSampler(const GroundTruthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  /// Systematic misalignment angle in radians ~ Normal(a, a/5) with a the configured scale.
  double angle() {
    const double a = cfg_.systematic_angle_deg;
    if (a == 0.0) return 0.0;
    std::normal_distribution<double> d(a, a / 5.0);
    return d(rng_) * std::numbers::pi / 180.0;
  }

  /// Stochastic error ~ |Normal(0, s)| truncated to [0, 0.3] by rejection.
  double shrink() {
    const double s = cfg_.stochastic_scale;
    if (s == 0.0) return 0.0;
    std::normal_distribution<double> d(0.0, s);
    for (;;) {
      const double v = std::abs(d(rng_));
      if (v <= 0.3) return v;
    }
  }

  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  GroundTruthConfig cfg_;
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Ground truth with misaligned directions and shortened Bloch vectors. The full five-state,
/// five-measurement set is always drawn in the same order and then truncated, so methods
/// sharing a seed share their common states and measurements. Deliberately violates
/// method A's assumptions (E2 is neither unit length nor confined to the x-z plane).
inline SpamParameterSet make_ground_truth(const GroundTruthConfig& cfg, Method method) {
  cfg.validate();
  detail::TruthSampler s(cfg);
  const auto ideal_states = ideal_state_directions(5);
  const auto ideal_meas = ideal_measurement_directions(5);

  SpamParameterSet p;
  p.method = method;
  p.states.push_back(StateParams::plus_z());
  {
    const double a = s.angle() * (s.coin() ? 1.0 : -1.0);
    const double len = 1.0 - s.shrink();
    p.states.push_back(StateParams::planar_x(len * std::cos(a), len * std::sin(a)));
  }
  for (int i = 2; i < 5; ++i) {
    const double a = s.angle();
    const Vec3 dir = detail::tilt(ideal_states[i], a, s.rng());
    p.states.push_back(StateParams::general((1.0 - s.shrink()) * dir));
  }
  p.noise.eps0 = s.shrink();
  p.noise.eps1 = s.shrink();
  p.measurements.push_back(MeasurementParams::plus_z());
  for (int j = 1; j < 5; ++j) {
    const double a = s.angle();
    const Vec3 dir = detail::tilt(ideal_meas[j], a, s.rng());
    p.measurements.push_back(MeasurementParams::general((1.0 - s.shrink()) * dir));
  }
  const ModelShape shape = shape_of(method);
  p.states.resize(shape.n_states);
  p.measurements.resize(shape.n_measurements);
  if (method == Method::B) p.evolution = EvolutionParams{cfg.omega_rot, cfg.t2};
  return p;
}

namespace detail {

inline std::int64_t draw_binomial(std::int64_t n, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> d(n, p);
  return d(rng);
}

}  // namespace detail

/// Binomial(N, p_{j|i}) counts for the static table of `truth` (evolution is ignored).
inline CountDataset sample_static(const SpamParameterSet& truth, std::int64_t shots,
                                  std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample_static: shots must be >= 1");
  const Eigen::MatrixXd p = static_probabilities(truth);
  CountDataset d = CountDataset::make(DataLayout::Static, static_cast<int>(p.rows()),
                                      static_cast<int>(p.cols()), shots);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < d.n_states; ++i)
    for (int j = 0; j < d.n_measurements; ++j)
      d.count(i, j) = detail::draw_binomial(shots, p(i, j), rng);
  return d;
}

/// Noise-free static table: every count is round(N p_{j|i}).
inline CountDataset expected_static(const SpamParameterSet& truth, std::int64_t shots) {
  if (shots < 1) throw std::invalid_argument("expected_static: shots must be >= 1");
  const Eigen::MatrixXd p = static_probabilities(truth);
  CountDataset d = CountDataset::make(DataLayout::Static, static_cast<int>(p.rows()),
                                      static_cast<int>(p.cols()), shots);
  for (int i = 0; i < d.n_states; ++i)
    for (int j = 0; j < d.n_measurements; ++j)
      d.count(i, j) = std::llround(static_cast<double>(shots) * std::clamp(p(i, j), 0.0, 1.0));
  return d;
}

inline CountDataset sample_timeseries(const SpamParameterSet& truth,
                                      const std::vector<double>& times, std::int64_t shots,
                                      std::uint64_t seed) {
  if (!truth.evolution)
    throw std::invalid_argument("sample_timeseries: truth has no evolution parameters");
  if (shots < 1) throw std::invalid_argument("sample_timeseries: shots must be >= 1");
  const auto tables = predict_timeseries(truth, times);
  CountDataset d = CountDataset::make(DataLayout::Timeseries, static_cast<int>(truth.states.size()),
                                      static_cast<int>(truth.measurements.size()), shots, times);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < d.n_times(); ++k)
    for (int i = 0; i < d.n_states; ++i)
      for (int j = 0; j < d.n_measurements; ++j)
        d.count(i, j, k) = detail::draw_binomial(shots, tables[k](i, j), rng);
  return d;
}

/// Probabilities Tr(E_j E(rho_i)) for the process with the given Choi state.
inline Eigen::MatrixXd process_probabilities(const SpamParameterSet& spam, const ChoiState& process) {
  SpamParameterSet copy = spam;
  if (copy.method == Method::B) copy.method = Method::A;  // same 4x3 layout, no evolution
  copy.evolution.reset();
  const RealizedSpam r = realize(copy);
  Eigen::MatrixXd p(r.states.size(), r.effects.size());
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    const Mat2 out = apply_choi_matrix(process.matrix(), r.states[i].matrix());
    for (std::size_t j = 0; j < r.effects.size(); ++j)
      p(i, j) = std::clamp((r.effects[j].matrix() * out).trace().real(), 0.0, 1.0);
  }
  return p;
}

inline CountDataset sample_process(const SpamParameterSet& truth_spam, const ChoiState& process,
                                   std::int64_t shots, std::uint64_t seed) {
  if (!process.is_physical())
    throw std::invalid_argument("sample_process: Choi state is not physical");
  if (shots < 1) throw std::invalid_argument("sample_process: shots must be >= 1");
  const Eigen::MatrixXd p = process_probabilities(truth_spam, process);
  CountDataset d = CountDataset::make(DataLayout::Static, static_cast<int>(p.rows()),
                                      static_cast<int>(p.cols()), shots);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < d.n_states; ++i)
    for (int j = 0; j < d.n_measurements; ++j)
      d.count(i, j) = detail::draw_binomial(shots, p(i, j), rng);
  return d;
}

}  // namespace spamtomo
