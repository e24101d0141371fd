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

// Weighted least-squares (Gaussian likelihood) reconstruction of SPAM parameter sets.

#pragma once

#include "spamtomo/data_sim.hpp"
#include "spamtomo/optimizer.hpp"
#include "spamtomo/qubit.hpp"
#include "spamtomo/spam_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace spamtomo {

/// ChiSquare weighs squared frequency residuals by N / (p(1-p)). Paper weighs them by
/// 1 / sqrt(N p(1-p)), the form with sigma defined on counts and applied once.
enum class WeightConvention { ChiSquare, Paper };

/// Per-cell square-root weights, laid out like CountDataset::counts.
inline std::vector<double> residual_scales(const CountDataset& data, WeightConvention conv) {
  const double n = static_cast<double>(data.shots);
  const double lo = 1.0 / (2.0 * n);
  std::vector<double> s(data.counts.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    const double p = std::clamp(static_cast<double>(data.counts[c]) / n, lo, 1.0 - lo);
    const double var = p * (1.0 - p);
    s[c] = conv == WeightConvention::ChiSquare ? std::sqrt(n / var)
                                               : std::pow(n * var, -0.25);
  }
  return s;
}

namespace detail {

inline void require_layout(const CountDataset& data, Method method) {
  data.validate();
  const ModelShape shape = shape_of(method);
  if (data.n_states != shape.n_states || data.n_measurements != shape.n_measurements)
    throw std::invalid_argument("data table is " + std::to_string(data.n_states) + "x" +
                                std::to_string(data.n_measurements) + " but method " +
                                to_string(method) + " expects " +
                                std::to_string(shape.n_states) + "x" +
                                std::to_string(shape.n_measurements));
  const bool timeseries = data.layout == DataLayout::Timeseries;
  if (timeseries != (method == Method::B))
    throw std::invalid_argument("method " + to_string(method) + " cannot use " +
                                to_string(data.layout) + " data");
}

}  // namespace detail

/// Residual functor sqrt(w) (p_model - p_data) over every cell (and time bin for B).
class SpamObjective {
 public:
  SpamObjective(Method method, const CountDataset& data,
                WeightConvention conv = WeightConvention::ChiSquare)
      : method_(method), data_(data), scale_(residual_scales(data, conv)) {
    detail::require_layout(data, method);
    freq_.resize(data.counts.size());
    for (std::size_t c = 0; c < freq_.size(); ++c)
      freq_[c] = static_cast<double>(data.counts[c]) / static_cast<double>(data.shots);
  }

  /// Adds one residual per Bloch vector, zero inside the unit ball and growing as
  /// weight (|v|^2 - 1) outside it, so the minimizer stays where project_physical is a no-op.
  /// The weight is relative to the largest data weight. Zero disables the term.
  SpamObjective& with_ball_penalty(double relative_weight) {
    const double top = *std::max_element(scale_.begin(), scale_.end());
    penalty_ = relative_weight * top;
    return *this;
  }

  Method method() const { return method_; }
  const CountDataset& data() const { return data_; }
  Eigen::Index n_data_residuals() const { return static_cast<Eigen::Index>(freq_.size()); }
  Eigen::Index n_residuals() const {
    if (penalty_ == 0.0) return n_data_residuals();
    const ModelShape shape = shape_of(method_);
    return n_data_residuals() + shape.n_states + shape.n_measurements - 2;
  }

  template <typename T>
  VecXT<T> operator()(const VecXT<T>& x) const {
    const DecodedModel<T> m = decode<T>(method_, x);
    VecXT<T> r(n_residuals());
    if (penalty_ != 0.0) {
      Eigen::Index k = n_data_residuals();
      auto ball = [&](const Vec3T<T>& v) {
        const T excess = v.squaredNorm() - T(1.0);
        r(k++) = value_of(excess) > 0.0 ? T(penalty_) * excess : T(0.0);
      };
      for (std::size_t i = 1; i < m.states.size(); ++i) ball(m.states[i]);
      for (std::size_t j = 1; j < m.measurements.size(); ++j) ball(m.measurements[j]);
    }
    const int ns = data_.n_states;
    const int nm = data_.n_measurements;
    for (int k = 0; k < data_.n_times(); ++k) {
      for (int i = 0; i < ns; ++i) {
        const Vec3T<T> state = method_ == Method::B
                                   ? evolved_bloch<T>(m.states[i], m.omega, m.t2, data_.times[k])
                                   : m.states[i];
        for (int j = 0; j < nm; ++j) {
          const std::size_t c = data_.index(i, j, k);
          const T p = effect_probability<T>(state, m.measurements[j], m.eps0, m.eps1);
          r(static_cast<Eigen::Index>(c)) = T(scale_[c]) * (p - T(freq_[c]));
        }
      }
    }
    return r;
  }

  /// Data part of the cost; the ball penalty is excluded.
  double value(const Eigen::VectorXd& x) const {
    return (*this)(x).head(n_data_residuals()).squaredNorm();
  }

 private:
  Method method_;
  CountDataset data_;
  std::vector<double> scale_;
  std::vector<double> freq_;
  double penalty_ = 0.0;
};

/// Weighted squared deviation between the model's static table and the observed frequencies.
inline double nll_static(const SpamParameterSet& params, const CountDataset& data,
                         WeightConvention conv = WeightConvention::ChiSquare) {
  if (data.layout != DataLayout::Static)
    throw std::invalid_argument("nll_static: data is not a static table");
  if (params.method == Method::B)
    throw std::invalid_argument("nll_static: method B needs time-series data");
  return SpamObjective(params.method, data, conv).value(pack(params));
}

inline double nll_timeseries(const SpamParameterSet& params, const CountDataset& data,
                             WeightConvention conv = WeightConvention::ChiSquare) {
  if (params.method != Method::B)
    throw std::invalid_argument("nll_timeseries: requires method B parameters");
  if (data.layout != DataLayout::Timeseries)
    throw std::invalid_argument("nll_timeseries: data is not a time series");
  return SpamObjective(Method::B, data, conv).value(pack(params));
}

inline double objective_value(const SpamParameterSet& params, const CountDataset& data,
                              WeightConvention conv = WeightConvention::ChiSquare) {
  return params.method == Method::B ? nll_timeseries(params, data, conv)
                                    : nll_static(params, data, conv);
}

// ---------------------------------------------------------------------------------------------
// Initial points.

enum class InitKind { NearTruth, NearIdeal, Ignorant };

inline std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::NearTruth: return "near_truth";
    case InitKind::NearIdeal: return "near_ideal";
    case InitKind::Ignorant: return "ignorant";
  }
  return "?";
}

inline InitKind parse_init_kind(std::string_view s) {
  if (s == "near_truth") return InitKind::NearTruth;
  if (s == "near_ideal") return InitKind::NearIdeal;
  if (s == "ignorant") return InitKind::Ignorant;
  throw std::invalid_argument("unknown init strategy '" + std::string(s) + "'");
}

/// How fit() seeds its restarts.
///
/// near_truth: every coordinate of the packed truth is scaled by 1 + s u with s a random sign
/// and u uniform in [delta/2, delta]; coordinates below 0.01 in magnitude move by s u 0.01.
/// Needs `truth` and is meant for test harnesses.
///
/// near_ideal: ideal axes with Bloch length 0.95 and eps0 = eps1 = 0.02. Restart 0 is exactly
/// that point, later restarts add Normal(0, 0.05) to every coordinate.
///
/// ignorant: directions uniform on the sphere with length in [0.6, 1], eps uniform in [0, 0.1].
/// For method B the rotation rate comes from a periodogram of the data and T2 starts at half
/// the recorded duration.
struct InitStrategy {
  InitKind kind = InitKind::NearIdeal;
  double delta = 0.02;
  std::optional<SpamParameterSet> truth;
  std::uint64_t seed = 0;

  static InitStrategy near_truth(const SpamParameterSet& truth, double delta = 0.02,
                                 std::uint64_t seed = 0) {
    return {InitKind::NearTruth, delta, truth, seed};
  }
  static InitStrategy near_ideal(std::uint64_t seed = 0) {
    return {InitKind::NearIdeal, 0.02, std::nullopt, seed};
  }
  static InitStrategy ignorant(std::uint64_t seed = 0) {
    return {InitKind::Ignorant, 0.02, std::nullopt, seed};
  }
};

/// Dominant angular frequency of the transverse signal, from the (x state, x measurement) cell.
inline double estimate_rotation_rate(const CountDataset& data) {
  if (data.layout != DataLayout::Timeseries || data.n_states < 2 || data.n_measurements < 2)
    throw std::invalid_argument("estimate_rotation_rate: needs a time series with >= 2x2 cells");
  const int m = data.n_times();
  std::vector<double> f(m);
  double mean = 0.0;
  for (int k = 0; k < m; ++k) mean += f[k] = data.frequency(1, 1, k);
  mean /= m;
  double dt = std::numeric_limits<double>::infinity();
  for (int k = 1; k < m; ++k) dt = std::min(dt, data.times[k] - data.times[k - 1]);
  const double span = data.times.back() - data.times.front();
  if (!(dt > 0.0) || !(span > 0.0)) return 0.0;
  const double w_max = std::numbers::pi / dt;
  const int grid = std::max(200, static_cast<int>(40.0 * w_max * span / std::numbers::pi));
  double best_w = 0.0;
  double best_power = -1.0;
  for (int g = 0; g <= grid; ++g) {
    const double w = w_max * g / grid;
    std::complex<double> acc = 0.0;
    for (int k = 0; k < m; ++k) acc += (f[k] - mean) * std::polar(1.0, -w * data.times[k]);
    if (std::norm(acc) > best_power) {
      best_power = std::norm(acc);
      best_w = w;
    }
  }
  return best_w;
}

namespace detail {

inline Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    if (v.norm() > 1e-6) return v.normalized();
  }
}

inline SpamParameterSet ideal_set(Method method, double length, double eps) {
  const ModelShape shape = shape_of(method);
  const auto sd = ideal_state_directions(shape.n_states);
  const auto md = ideal_measurement_directions(shape.n_measurements);
  SpamParameterSet p;
  p.method = method;
  p.states.push_back(StateParams::plus_z());
  p.states.push_back(StateParams::planar_x(length * sd[1].x(), length * sd[1].z()));
  for (int i = 2; i < shape.n_states; ++i) p.states.push_back(StateParams::general(length * sd[i]));
  p.measurements.push_back(MeasurementParams::plus_z());
  for (int j = 1; j < shape.n_measurements; ++j)
    p.measurements.push_back(MeasurementParams::general(length * md[j]));
  p.noise = {eps, eps};
  if (method == Method::B) p.evolution = EvolutionParams{1.0, 1.0};
  if (method == Method::A) p = restrict_to_model(p, Method::A);
  return p;
}

}  // namespace detail

/// Initial packed vectors for `count` restarts. Deterministic in (strategy, data).
inline std::vector<Eigen::VectorXd> initial_points(Method method, const InitStrategy& strategy,
                                                   const CountDataset& data, int count) {
  if (count < 1) throw std::invalid_argument("initial_points: count must be >= 1");
  std::mt19937_64 rng(mix64(strategy.seed ^ 0x5eedULL));
  const auto [lo, hi] = parameter_bounds(method);
  const Bounds bounds{lo, hi};
  const ModelShape shape = shape_of(method);
  std::vector<Eigen::VectorXd> out;

  double omega0 = 1.0;
  double t20 = 1.0;
  if (method == Method::B) {
    omega0 = estimate_rotation_rate(data);
    t20 = 0.5 * (data.times.back() - data.times.front());
    if (!(t20 > kMinT2)) t20 = 1.0;
  }
  auto set_evolution = [&](Eigen::VectorXd& x) {
    if (method == Method::B) {
      x(shape.n_params - 2) = omega0;
      x(shape.n_params - 1) = t20;
    }
  };

  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd x;
    switch (strategy.kind) {
      case InitKind::NearTruth: {
        if (!strategy.truth) throw std::invalid_argument("near_truth init requires the truth");
        x = pack(restrict_to_model(*strategy.truth, method));
        std::uniform_real_distribution<double> mag(strategy.delta / 2.0, strategy.delta);
        for (Eigen::Index k = 0; k < x.size(); ++k) {
          const double u = mag(rng) * (std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0);
          x(k) = std::abs(x(k)) >= 0.01 ? x(k) * (1.0 + u) : x(k) + 0.01 * u;
        }
        break;
      }
      case InitKind::NearIdeal: {
        x = pack(detail::ideal_set(method, 0.95, 0.02));
        set_evolution(x);
        if (s > 0) {
          std::normal_distribution<double> jitter(0.0, 0.05);
          for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += jitter(rng);
          if (method == Method::B) {
            x(shape.n_params - 2) = omega0 * (1.0 + 0.02 * jitter(rng));
            x(shape.n_params - 1) = t20;
          }
        }
        break;
      }
      case InitKind::Ignorant: {
        SpamParameterSet p = detail::ideal_set(method, 1.0, 0.0);
        std::uniform_real_distribution<double> len(0.6, 1.0);
        std::uniform_real_distribution<double> eps(0.0, 0.1);
        const double phi = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
        const double l2 = len(rng);
        p.states[1].r = Vec3(l2 * std::cos(phi), 0.0, l2 * std::sin(phi));
        for (int i = 2; i < shape.n_states; ++i)
          p.states[i].r = len(rng) * detail::random_direction(rng);
        for (int j = 1; j < shape.n_measurements; ++j)
          p.measurements[j].direction = len(rng) * detail::random_direction(rng);
        p.noise = {eps(rng), eps(rng)};
        if (method == Method::A) p = restrict_to_model(p, Method::A);
        x = pack(p);
        set_evolution(x);
        break;
      }
    }
    out.push_back(bounds.clamp(x));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Fitting.

struct FitResult {
  SpamParameterSet estimate;
  Eigen::VectorXd parameters;  ///< packed estimate
  double objective_value = std::numeric_limits<double>::infinity();
  bool converged = false;
  int n_evaluations = 0;
  int initial_point_id = -1;
};

struct FitOptions {
  OptimizerBudget budget;
  WeightConvention weights = WeightConvention::ChiSquare;
  double ball_penalty = 1.0;  ///< see SpamObjective::with_ball_penalty
};

/// A rotation by pi about z flips the transverse part of every state and measurement and
/// leaves all probabilities unchanged. State 2 is labelled as the +x preparation, so the
/// representative with a nonnegative x component is returned.
inline SpamParameterSet canonical_orientation(const SpamParameterSet& p) {
  if (p.method == Method::A || p.states.size() < 2 || p.states[1].r.x() >= 0.0) return p;
  SpamParameterSet out = p;
  for (std::size_t i = 1; i < out.states.size(); ++i) out.states[i].r.head<2>() *= -1.0;
  for (std::size_t j = 1; j < out.measurements.size(); ++j)
    out.measurements[j].direction.head<2>() *= -1.0;
  return out;
}

/// Default restart count: 8 for the static models, 4 for the time-series model.
inline int default_restarts(Method m) { return m == Method::B ? 4 : 8; }

/// Multi-start projected Levenberg-Marquardt with a simplex fallback for starts that stall.
/// The lowest objective wins; objectives within 1e-10 (relative) go to the lowest start id.
inline FitResult fit(Method method, const CountDataset& data, const FitOptions& options,
                     const InitStrategy& strategy) {
  options.budget.validate();
  SpamObjective objective(method, data, options.weights);
  SpamObjective penalized = objective;
  penalized.with_ball_penalty(options.ball_penalty);
  const auto [lo, hi] = parameter_bounds(method);
  const Bounds bounds{lo, hi};
  const auto starts = initial_points(method, strategy, data, options.budget.n_restarts);

  FitResult best;
  for (int id = 0; id < static_cast<int>(starts.size()); ++id) {
    LeastSquaresResult r = minimize_least_squares(penalized, starts[id], bounds, options.budget);
    best.n_evaluations += r.evaluations;
    if (!r.converged) {
      OptimizerBudget rest = options.budget;
      rest.max_evaluations = std::max(100, options.budget.max_evaluations - r.evaluations);
      const Eigen::VectorXd from = r.x.allFinite() ? r.x : starts[id];
      LeastSquaresResult nm = minimize_nelder_mead(
          [&](const Eigen::VectorXd& x) { return penalized(x).squaredNorm(); }, from, bounds, rest);
      best.n_evaluations += nm.evaluations;
      if (nm.cost < r.cost) r = nm;
    }
    if (!std::isfinite(r.cost)) continue;
    best.converged = best.converged || r.converged;
    const double tie = 1e-10 * std::max(std::abs(best.objective_value), 1e-300);
    if (best.initial_point_id < 0 || r.cost < best.objective_value - tie) {
      best.objective_value = r.cost;
      best.parameters = r.x;
      best.initial_point_id = id;
    }
  }
  if (best.initial_point_id < 0) {
    best.parameters = starts.front();
    best.initial_point_id = 0;
  }
  best.estimate = canonical_orientation(project_physical(unpack(method, best.parameters)));
  if (method == Method::A) best.estimate = restrict_to_model(best.estimate, Method::A);
  best.parameters = pack(best.estimate);
  best.objective_value = objective.value(best.parameters);
  return best;
}

// ---------------------------------------------------------------------------------------------
// Diagnostics.

/// Singular values of the residual Jacobian at x, in decreasing order.
inline Eigen::VectorXd jacobian_spectrum(const SpamObjective& objective, const Eigen::VectorXd& x) {
  const auto [r, jac] = evaluate_jacobian(objective, x);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(jac).singularValues();
}

/// Number of Jacobian singular values below rel_tol times the largest: the count of parameter
/// combinations the data cannot see.
inline int null_directions(const SpamObjective& objective, const Eigen::VectorXd& x,
                           double rel_tol = 1e-8) {
  const Eigen::VectorXd s = jacobian_spectrum(objective, x);
  int n = static_cast<int>(x.size() - s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) <= rel_tol * s(0)) ++n;
  return n;
}

namespace detail {

/// Applies the transverse map G = [[a, b], [0, d]] to every state and G^{-T} to every
/// measurement. The probabilities depend on R . r only, so this moves along a direction the
/// data cannot see.
template <typename T>
void apply_gauge(DecodedModel<T>& m, const T& a, const T& b, const T& d) {
  for (std::size_t i = 1; i < m.states.size(); ++i) {
    Vec3T<T>& r = m.states[i];
    r(0) = a * r(0) + b * r(1);
    r(1) = d * r(1);
  }
  for (std::size_t j = 1; j < m.measurements.size(); ++j) {
    Vec3T<T>& e = m.measurements[j];
    const T x = e(0) / a;
    e(1) = e(1) / d - b * x / d;
    e(0) = x;
  }
}

}  // namespace detail

/// Number of free gauge parameters of each model: transverse maps that keep the x-z plane of
/// state 2 and commute with the free evolution.
inline int gauge_dimension(Method m) {
  switch (m) {
    case Method::A: return 0;
    case Method::B: return 1;
    case Method::C: return 3;
  }
  return 0;
}

/// Member of the estimate's gauge orbit closest to `truth` in Bloch coordinates. Every
/// probability the model can predict is identical for the input and the output.
inline SpamParameterSet gauge_align(const SpamParameterSet& estimate, const SpamParameterSet& truth) {
  const Method method = estimate.method;
  const int dim = gauge_dimension(method);
  if (dim == 0) return estimate;
  const DecodedModel<double> est = decode(estimate);
  const DecodedModel<double> tru = decode(restrict_to_model(truth, method));
  auto residuals = [&](const auto& g) {
    using T = typename std::decay_t<decltype(g)>::Scalar;
    DecodedModel<T> m;
    for (const auto& v : est.states) m.states.push_back(v.template cast<T>());
    for (const auto& v : est.measurements) m.measurements.push_back(v.template cast<T>());
    if (method == Method::C)
      detail::apply_gauge<T>(m, g(0), g(1), g(2));
    else
      detail::apply_gauge<T>(m, g(0), T(0.0) * g(0), g(0));
    VecXT<T> r(3 * (m.states.size() + m.measurements.size()));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < m.states.size(); ++i)
      for (int c = 0; c < 3; ++c) r(k++) = m.states[i](c) - T(tru.states[i](c));
    for (std::size_t j = 0; j < m.measurements.size(); ++j)
      for (int c = 0; c < 3; ++c) r(k++) = m.measurements[j](c) - T(tru.measurements[j](c));
    return r;
  };
  Eigen::VectorXd g0 = Eigen::VectorXd::Ones(dim);
  if (method == Method::C) g0(1) = 0.0;
  Bounds bounds = Bounds::unbounded(g0.size());
  bounds.lower(0) = 1e-3;
  if (method == Method::C) bounds.lower(2) = 1e-3;
  OptimizerBudget budget;
  budget.max_evaluations = 500;
  const LeastSquaresResult res = minimize_least_squares(residuals, g0, bounds, budget);
  DecodedModel<double> aligned = est;
  if (method == Method::C)
    detail::apply_gauge<double>(aligned, res.x(0), res.x(1), res.x(2));
  else
    detail::apply_gauge<double>(aligned, res.x(0), 0.0, res.x(0));
  SpamParameterSet out = estimate;
  for (std::size_t i = 1; i < out.states.size(); ++i) out.states[i].r = aligned.states[i];
  out.states[1].r.y() = 0.0;
  for (std::size_t j = 1; j < out.measurements.size(); ++j)
    out.measurements[j].direction = aligned.measurements[j];
  return project_physical(out);
}

struct ReconstructionReport {
  std::vector<double> state_infidelity;  ///< 1 - F(rho_est_i, rho_true_i), state 1 first
  std::vector<double> alpha_deg;         ///< angle between estimated and true directions
  double eps0_error = 0.0;               ///< |eps0_est - eps0_true|
  double eps1_error = 0.0;
  std::optional<double> omega_rel_error;
  std::optional<double> t2_rel_error;
};

/// Angle in degrees between two directions, computed as atan2(|a x b|, a . b) for accuracy
/// near 0 and 180 degrees.
inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
}

/// Compares an estimate with the (possibly larger) truth it was fitted against.
inline ReconstructionReport reconstruction_report(const SpamParameterSet& estimate,
                                                  const SpamParameterSet& truth) {
  if (truth.states.size() < estimate.states.size() ||
      truth.measurements.size() < estimate.measurements.size())
    throw std::invalid_argument("reconstruction_report: truth has fewer states or measurements");
  ReconstructionReport rep;
  for (std::size_t i = 0; i < estimate.states.size(); ++i) {
    const auto a = DensityMatrix::from_bloch(estimate.states[i].r);
    const auto b = DensityMatrix::from_bloch(truth.states[i].r);
    rep.state_infidelity.push_back(1.0 - state_fidelity(a, b));
  }
  for (std::size_t j = 0; j < estimate.measurements.size(); ++j)
    rep.alpha_deg.push_back(
        angle_between_deg(estimate.measurements[j].direction, truth.measurements[j].direction));
  rep.eps0_error = std::abs(estimate.noise.eps0 - truth.noise.eps0);
  rep.eps1_error = std::abs(estimate.noise.eps1 - truth.noise.eps1);
  if (estimate.evolution && truth.evolution) {
    rep.omega_rel_error =
        std::abs(estimate.evolution->omega_rot - truth.evolution->omega_rot) /
        std::max(std::abs(truth.evolution->omega_rot), 1e-300);
    rep.t2_rel_error = std::abs(estimate.evolution->t2 - truth.evolution->t2) /
                       std::max(std::abs(truth.evolution->t2), 1e-300);
  }
  return rep;
}

}  // namespace spamtomo
