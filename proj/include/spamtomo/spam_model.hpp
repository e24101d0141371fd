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

// State and measurement models for self-consistent SPAM tomography.
//
// Every model fixes rho_1 = |0><0| and E_1 = the noisy z readout. All measurements share the
// readout flip probabilities eps0 = P("1" | |0>) and eps1 = P("0" | |1>), so a measurement
// with direction R has effect
//
//   E(R) = (1 - eps0 + eps1)/2 I + (1 - eps0 - eps1)/2 R . sigma.
//
// Packed parameter layout (ordering tag kPackOrdering):
//
//   A (12): theta_rho2, r3[3], r4[3], eps0, eps1, theta_E2, polar_E3, azimuth_E3
//           rho2 = (cos t, 0, sin t); E2 = (cos t, 0, sin t);
//           E3 = (sin p cos a, sin p sin a, cos p)
//   B (18): r2x, r2z, r3[3], r4[3], eps0, eps1, R2[3], R3[3], omega, T2
//   C (25): r2x, r2z, r3[3], r4[3], r5[3], eps0, eps1, R2[3], R3[3], R4[3], R5[3]

#pragma once

#include "spamtomo/qubit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spamtomo {

inline constexpr std::string_view kPackOrdering = "spamtomo-pack-v1";

/// Upper end of the readout flip probabilities; 0.5 itself would relabel outcomes.
inline constexpr double kEpsilonMax = 0.5 - 1e-9;
inline constexpr double kMinT2 = 1e-9;

enum class Method { A, B, C };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::A: return "A";
    case Method::B: return "B";
    case Method::C: return "C";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "A" || s == "a") return Method::A;
  if (s == "B" || s == "b") return Method::B;
  if (s == "C" || s == "c") return Method::C;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

struct ModelShape {
  int n_states;
  int n_measurements;
  int n_params;
};

inline ModelShape shape_of(Method m) {
  switch (m) {
    case Method::A: return {4, 3, 12};
    case Method::B: return {4, 3, 18};
    case Method::C: return {5, 5, 25};
  }
  throw std::invalid_argument("shape_of: bad method");
}

struct ZMeasurementNoise {
  double eps0 = 0.0;
  double eps1 = 0.0;
};

enum class StateKind { FixedPlusZ, PlanarX, General };
enum class MeasurementKind { FixedPlusZ, General };

struct StateParams {
  StateKind kind = StateKind::General;
  Vec3 r = Vec3::Zero();

  static StateParams plus_z() { return {StateKind::FixedPlusZ, Vec3(0, 0, 1)}; }
  static StateParams planar_x(double rx, double rz) { return {StateKind::PlanarX, Vec3(rx, 0, rz)}; }
  static StateParams general(const Vec3& r) { return {StateKind::General, r}; }
};

struct MeasurementParams {
  MeasurementKind kind = MeasurementKind::General;
  Vec3 direction = Vec3::Zero();

  static MeasurementParams plus_z() { return {MeasurementKind::FixedPlusZ, Vec3(0, 0, 1)}; }
  static MeasurementParams general(const Vec3& d) { return {MeasurementKind::General, d}; }
};

struct SpamParameterSet {
  Method method = Method::C;
  std::vector<StateParams> states;
  std::vector<MeasurementParams> measurements;
  ZMeasurementNoise noise;
  std::optional<EvolutionParams> evolution;
};

/// Ideal preparation directions: +z, +x, +y, -z and, for the over-complete set, -x.
inline std::vector<Vec3> ideal_state_directions(int n) {
  const std::vector<Vec3> all{Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, -1),
                              Vec3(-1, 0, 0)};
  if (n < 1 || n > static_cast<int>(all.size()))
    throw std::invalid_argument("ideal_state_directions: bad count");
  return {all.begin(), all.begin() + n};
}

/// Ideal measurement directions: z, x, y and, for the over-complete set, (x+z)/sqrt2, (y+z)/sqrt2.
inline std::vector<Vec3> ideal_measurement_directions(int n) {
  const std::vector<Vec3> all{Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0),
                              Vec3(1, 0, 1).normalized(), Vec3(0, 1, 1).normalized()};
  if (n < 1 || n > static_cast<int>(all.size()))
    throw std::invalid_argument("ideal_measurement_directions: bad count");
  return {all.begin(), all.begin() + n};
}

/// Checks counts and kinds against the method's layout. Does not check norms.
inline void validate_shape(const SpamParameterSet& p) {
  const ModelShape s = shape_of(p.method);
  if (static_cast<int>(p.states.size()) != s.n_states ||
      static_cast<int>(p.measurements.size()) != s.n_measurements)
    throw std::invalid_argument("SpamParameterSet: wrong number of states or measurements for method " +
                                to_string(p.method));
  if (p.states[0].kind != StateKind::FixedPlusZ || p.states[1].kind != StateKind::PlanarX)
    throw std::invalid_argument("SpamParameterSet: state 1 must be fixed +z and state 2 planar");
  for (std::size_t i = 2; i < p.states.size(); ++i)
    if (p.states[i].kind != StateKind::General)
      throw std::invalid_argument("SpamParameterSet: states 3.. must be general");
  if (p.measurements[0].kind != MeasurementKind::FixedPlusZ)
    throw std::invalid_argument("SpamParameterSet: measurement 1 must be the z readout");
  for (std::size_t j = 1; j < p.measurements.size(); ++j)
    if (p.measurements[j].kind != MeasurementKind::General)
      throw std::invalid_argument("SpamParameterSet: measurements 2.. must be general");
  if (p.method == Method::B && !p.evolution)
    throw std::invalid_argument("SpamParameterSet: method B requires evolution parameters");
}

// ---------------------------------------------------------------------------------------------
// Scalar-generic model kernels. T is double or an automatic-differentiation scalar.

template <typename T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T>
using VecXT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct DecodedModel {
  std::vector<Vec3T<T>> states;
  std::vector<Vec3T<T>> measurements;
  T eps0;
  T eps1;
  T omega;
  T t2;
};

/// Tr(E rho) for a Bloch vector r and measurement direction R sharing the z readout noise.
template <typename T>
T effect_probability(const Vec3T<T>& r, const Vec3T<T>& dir, const T& eps0, const T& eps1) {
  return T(0.5) * (T(1.0) - eps0 + eps1) + T(0.5) * (T(1.0) - eps0 - eps1) * dir.dot(r);
}

/// Bloch vector after free evolution for time t: rotation by -omega t about z, transverse
/// decay exp(-t/T2).
template <typename T>
Vec3T<T> evolved_bloch(const Vec3T<T>& r, const T& omega, const T& t2, double t) {
  using std::cos;
  using std::exp;
  using std::sin;
  const T env = exp(-T(t) / t2);
  const T c = env * cos(omega * T(t));
  const T s = env * sin(omega * T(t));
  Vec3T<T> out;
  out(0) = c * r(0) + s * r(1);
  out(1) = c * r(1) - s * r(0);
  out(2) = r(2);
  return out;
}

template <typename T>
DecodedModel<T> decode(Method method, const VecXT<T>& x) {
  using std::cos;
  using std::sin;
  const ModelShape shape = shape_of(method);
  if (x.size() != shape.n_params)
    throw std::invalid_argument("unpack: method " + to_string(method) + " expects " +
                                std::to_string(shape.n_params) + " parameters, got " +
                                std::to_string(x.size()));
  DecodedModel<T> m;
  m.states.reserve(shape.n_states);
  m.measurements.reserve(shape.n_measurements);
  m.states.push_back(Vec3T<T>(T(0.0), T(0.0), T(1.0)));
  m.measurements.push_back(Vec3T<T>(T(0.0), T(0.0), T(1.0)));
  m.omega = T(0.0);
  m.t2 = T(std::numeric_limits<double>::infinity());
  int k = 0;
  auto next3 = [&]() {
    Vec3T<T> v(x(k), x(k + 1), x(k + 2));
    k += 3;
    return v;
  };
  if (method == Method::A) {
    const T theta = x(k++);
    m.states.push_back(Vec3T<T>(cos(theta), T(0.0), sin(theta)));
  } else {
    m.states.push_back(Vec3T<T>(x(k), T(0.0), x(k + 1)));
    k += 2;
  }
  for (int i = 2; i < shape.n_states; ++i) m.states.push_back(next3());
  m.eps0 = x(k++);
  m.eps1 = x(k++);
  if (method == Method::A) {
    const T theta = x(k++);
    m.measurements.push_back(Vec3T<T>(cos(theta), T(0.0), sin(theta)));
    const T polar = x(k++);
    const T azimuth = x(k++);
    m.measurements.push_back(
        Vec3T<T>(sin(polar) * cos(azimuth), sin(polar) * sin(azimuth), cos(polar)));
  } else {
    for (int j = 1; j < shape.n_measurements; ++j) m.measurements.push_back(next3());
  }
  if (method == Method::B) {
    m.omega = x(k++);
    m.t2 = x(k++);
  }
  return m;
}

inline DecodedModel<double> decode(const SpamParameterSet& p) {
  validate_shape(p);
  DecodedModel<double> m;
  for (const auto& s : p.states) m.states.push_back(s.r);
  for (const auto& e : p.measurements) m.measurements.push_back(e.direction);
  m.states[0] = Vec3(0, 0, 1);
  m.measurements[0] = Vec3(0, 0, 1);
  m.eps0 = p.noise.eps0;
  m.eps1 = p.noise.eps1;
  m.omega = p.evolution ? p.evolution->omega_rot : 0.0;
  m.t2 = p.evolution ? p.evolution->t2 : std::numeric_limits<double>::infinity();
  return m;
}

// ---------------------------------------------------------------------------------------------

inline SpamParameterSet unpack(Method method, const Eigen::VectorXd& x) {
  const DecodedModel<double> m = decode<double>(method, x);
  const ModelShape shape = shape_of(method);
  SpamParameterSet p;
  p.method = method;
  p.states.push_back(StateParams::plus_z());
  p.states.push_back(StateParams::planar_x(m.states[1].x(), m.states[1].z()));
  for (int i = 2; i < shape.n_states; ++i) p.states.push_back(StateParams::general(m.states[i]));
  p.measurements.push_back(MeasurementParams::plus_z());
  for (int j = 1; j < shape.n_measurements; ++j)
    p.measurements.push_back(MeasurementParams::general(m.measurements[j]));
  p.noise = {m.eps0, m.eps1};
  if (method == Method::B) p.evolution = EvolutionParams{m.omega, m.t2};
  return p;
}

namespace detail {

inline void require_unit(const Vec3& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::invalid_argument(std::string("pack: method A requires unit ") + what);
}

}  // namespace detail

/// Flattens a parameter set into the optimizer vector. Method A sets must satisfy the
/// unit-norm and x-z plane constraints (see restrict_to_model).
inline Eigen::VectorXd pack(const SpamParameterSet& p) {
  validate_shape(p);
  const ModelShape shape = shape_of(p.method);
  Eigen::VectorXd x(shape.n_params);
  int k = 0;
  if (p.method == Method::A) {
    const Vec3& r2 = p.states[1].r;
    detail::require_unit(r2, "rho2");
    x(k++) = std::atan2(r2.z(), r2.x());
  } else {
    x(k++) = p.states[1].r.x();
    x(k++) = p.states[1].r.z();
  }
  for (int i = 2; i < shape.n_states; ++i) {
    x.segment<3>(k) = p.states[i].r;
    k += 3;
  }
  x(k++) = p.noise.eps0;
  x(k++) = p.noise.eps1;
  if (p.method == Method::A) {
    const Vec3& e2 = p.measurements[1].direction;
    const Vec3& e3 = p.measurements[2].direction;
    detail::require_unit(e2, "E2");
    detail::require_unit(e3, "E3");
    if (std::abs(e2.y()) > 1e-9)
      throw std::invalid_argument("pack: method A requires E2 in the x-z plane");
    x(k++) = std::atan2(e2.z(), e2.x());
    x(k++) = std::acos(std::clamp(e3.z() / e3.norm(), -1.0, 1.0));
    x(k++) = std::atan2(e3.y(), e3.x());
  } else {
    for (int j = 1; j < shape.n_measurements; ++j) {
      x.segment<3>(k) = p.measurements[j].direction;
      k += 3;
    }
  }
  if (p.method == Method::B) {
    x(k++) = p.evolution->omega_rot;
    x(k++) = p.evolution->t2;
  }
  return x;
}

/// Closest set satisfying the method's hard constraints: for A, rho2, E2 and E3 are
/// normalized and E2 is dropped into the x-z plane. Other methods are returned unchanged
/// apart from truncation to the method's state/measurement counts.
inline SpamParameterSet restrict_to_model(const SpamParameterSet& p, Method method) {
  const ModelShape shape = shape_of(method);
  if (static_cast<int>(p.states.size()) < shape.n_states ||
      static_cast<int>(p.measurements.size()) < shape.n_measurements)
    throw std::invalid_argument("restrict_to_model: source set is too small");
  SpamParameterSet out = p;
  out.method = method;
  out.states.resize(shape.n_states);
  out.measurements.resize(shape.n_measurements);
  if (method == Method::A) {
    out.states[1].r.normalize();
    Vec3 e2 = out.measurements[1].direction;
    e2.y() = 0.0;
    out.measurements[1].direction = e2.normalized();
    out.measurements[2].direction.normalize();
    out.evolution.reset();
  }
  if (method == Method::C) out.evolution.reset();
  if (method == Method::B && !out.evolution)
    throw std::invalid_argument("restrict_to_model: method B needs evolution parameters");
  return out;
}

/// Box bounds used by the optimizer for each packed coordinate.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> parameter_bounds(Method method) {
  const ModelShape shape = shape_of(method);
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(shape.n_params, -1.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(shape.n_params, 1.0);
  const int n_state_params = (method == Method::A ? 1 : 2) + 3 * (shape.n_states - 2);
  if (method == Method::A) {
    lo(0) = -inf;
    hi(0) = inf;
  }
  const int k_eps = n_state_params;
  lo(k_eps) = lo(k_eps + 1) = 0.0;
  hi(k_eps) = hi(k_eps + 1) = kEpsilonMax;
  if (method == Method::A) {
    for (int k = k_eps + 2; k < shape.n_params; ++k) {
      lo(k) = -inf;
      hi(k) = inf;
    }
  }
  if (method == Method::B) {
    lo(shape.n_params - 2) = 0.0;
    hi(shape.n_params - 2) = inf;
    lo(shape.n_params - 1) = kMinT2;
    hi(shape.n_params - 1) = inf;
  }
  return {lo, hi};
}

struct RealizedSpam {
  std::vector<DensityMatrix> states;
  std::vector<Effect> effects;
};

inline Effect make_effect(const ZMeasurementNoise& noise, const Vec3& direction) {
  const double e0 = 0.5 * (1.0 - noise.eps0 + noise.eps1);
  const double kappa = 1.0 - noise.eps0 - noise.eps1;
  BlochVector checked(direction);
  return Effect::from_components(e0, 0.5 * kappa * checked.vec());
}

/// Concrete density matrices and effects. Throws when a Bloch vector is longer than one or
/// the flip probabilities leave [0, 0.5).
inline RealizedSpam realize(const SpamParameterSet& p) {
  validate_shape(p);
  if (p.noise.eps0 < 0.0 || p.noise.eps0 >= 0.5 || p.noise.eps1 < 0.0 || p.noise.eps1 >= 0.5)
    throw std::invalid_argument("realize: readout flip probabilities must lie in [0, 0.5)");
  RealizedSpam out;
  out.states.push_back(DensityMatrix::from_bloch(Vec3(0, 0, 1)));
  for (std::size_t i = 1; i < p.states.size(); ++i)
    out.states.push_back(DensityMatrix::from_bloch(p.states[i].r));
  out.effects.push_back(make_effect(p.noise, Vec3(0, 0, 1)));
  for (std::size_t j = 1; j < p.measurements.size(); ++j)
    out.effects.push_back(make_effect(p.noise, p.measurements[j].direction));
  return out;
}

/// p_{j|i} = Tr(E_j rho_i), rows indexed by state, columns by measurement.
inline Eigen::MatrixXd predict_static(const SpamParameterSet& p) {
  if (p.method == Method::B)
    throw std::invalid_argument("predict_static: method B is a time-series model");
  const DecodedModel<double> m = decode(p);
  Eigen::MatrixXd out(m.states.size(), m.measurements.size());
  for (std::size_t i = 0; i < m.states.size(); ++i)
    for (std::size_t j = 0; j < m.measurements.size(); ++j)
      out(i, j) = effect_probability<double>(m.states[i], m.measurements[j], m.eps0, m.eps1);
  return out;
}

/// Static probability table for any shape, ignoring evolution; used by samplers and process
/// tomography, which only need the states and effects themselves.
inline Eigen::MatrixXd static_probabilities(const SpamParameterSet& p) {
  SpamParameterSet copy = p;
  if (copy.method == Method::B) copy.method = Method::A;  // same 4x3 layout
  copy.evolution.reset();
  const DecodedModel<double> m = decode(copy);
  Eigen::MatrixXd out(m.states.size(), m.measurements.size());
  for (std::size_t i = 0; i < m.states.size(); ++i)
    for (std::size_t j = 0; j < m.measurements.size(); ++j)
      out(i, j) = effect_probability<double>(m.states[i], m.measurements[j], m.eps0, m.eps1);
  return out;
}

/// p_{j|i}(t_k) = a_ij + exp(-t/T2) (b_ij cos(omega t) - c_ij sin(omega t)); element k of
/// the result is the state-by-measurement table at times[k].
inline std::vector<Eigen::MatrixXd> predict_timeseries(const SpamParameterSet& p,
                                                       const std::vector<double>& times) {
  if (p.method != Method::B || !p.evolution)
    throw std::invalid_argument("predict_timeseries: requires method B parameters");
  const DecodedModel<double> m = decode(p);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("predict_timeseries: negative time");
    Eigen::MatrixXd table(m.states.size(), m.measurements.size());
    for (std::size_t i = 0; i < m.states.size(); ++i) {
      const Vec3 r = evolved_bloch<double>(m.states[i], m.omega, m.t2, t);
      for (std::size_t j = 0; j < m.measurements.size(); ++j)
        table(i, j) = effect_probability<double>(r, m.measurements[j], m.eps0, m.eps1);
    }
    out.push_back(std::move(table));
  }
  return out;
}

/// Rescales over-long Bloch vectors onto the sphere and clamps the flip probabilities and
/// evolution parameters into range. Idempotent.
inline SpamParameterSet project_physical(const SpamParameterSet& p) {
  SpamParameterSet out = p;
  for (auto& s : out.states) {
    if (s.kind == StateKind::PlanarX) s.r.y() = 0.0;
    const double n = s.r.norm();
    if (n > 1.0) s.r /= n;
  }
  for (auto& m : out.measurements) {
    const double n = m.direction.norm();
    if (n > 1.0) m.direction /= n;
  }
  out.states[0].r = Vec3(0, 0, 1);
  out.measurements[0].direction = Vec3(0, 0, 1);
  out.noise.eps0 = std::clamp(out.noise.eps0, 0.0, kEpsilonMax);
  out.noise.eps1 = std::clamp(out.noise.eps1, 0.0, kEpsilonMax);
  if (out.evolution) {
    out.evolution->omega_rot = std::max(out.evolution->omega_rot, 0.0);
    out.evolution->t2 = std::max(out.evolution->t2, kMinT2);
  }
  return out;
}

}  // namespace spamtomo
