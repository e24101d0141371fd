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

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spamtomo {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kStateTolerance = 1e-12;
inline constexpr double kChoiTolerance = 1e-10;
inline constexpr double kChoiPartialTraceTolerance = 1e-8;

namespace pauli {

inline Mat2 identity() { return Mat2::Identity(); }

inline Mat2 x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}

inline Mat2 y() {
  Mat2 m;
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

inline Mat2 z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}

/// {I, X, Y, Z} in that order.
inline const std::array<Mat2, 4>& basis() {
  static const std::array<Mat2, 4> b{identity(), x(), y(), z()};
  return b;
}

/// n . sigma for a real 3-vector n.
inline Mat2 along(const Vec3& n) { return n.x() * x() + n.y() * y() + n.z() * z(); }

}  // namespace pauli

namespace detail {

template <typename M>
double max_abs(const M& m) {
  return m.cwiseAbs().maxCoeff();
}

template <typename M>
M hermitian_part(const M& m) {
  return 0.5 * (m + m.adjoint());
}

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Kronecker product of two 2x2 matrices; first factor is the most significant index.
inline Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

}  // namespace detail

/// Real 3-vector with norm at most one.
class BlochVector {
 public:
  BlochVector() : r_(Vec3::Zero()) {}
  explicit BlochVector(const Vec3& r) : r_(r) {
    if (!r.allFinite() || r.norm() > 1.0 + kStateTolerance)
      throw std::invalid_argument("BlochVector: norm " + detail::fmt_double(r.norm()) +
                                  " exceeds 1");
  }
  BlochVector(double x, double y, double z) : BlochVector(Vec3(x, y, z)) {}

  const Vec3& vec() const { return r_; }
  double x() const { return r_.x(); }
  double y() const { return r_.y(); }
  double z() const { return r_.z(); }
  double norm() const { return r_.norm(); }

 private:
  Vec3 r_;
};

/// 2x2 Hermitian, unit-trace, positive semidefinite operator.
class DensityMatrix {
 public:
  explicit DensityMatrix(const Mat2& m) : m_(m) {
    if (!m.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
    if (detail::max_abs(m - m.adjoint()) > kStateTolerance)
      throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(m.trace() - Complex(1.0)) > kStateTolerance)
      throw std::invalid_argument("DensityMatrix: trace " +
                                  detail::fmt_double(m.trace().real()) + " != 1");
    Eigen::SelfAdjointEigenSolver<Mat2> es(detail::hermitian_part(m), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kStateTolerance)
      throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                  detail::fmt_double(es.eigenvalues().minCoeff()));
  }

  /// rho = (I + r . sigma) / 2
  static DensityMatrix from_bloch(const Vec3& r) {
    BlochVector checked(r);
    return DensityMatrix(0.5 * (Mat2::Identity() + pauli::along(checked.vec())));
  }
  static DensityMatrix from_bloch(const BlochVector& r) { return from_bloch(r.vec()); }

  static DensityMatrix pure(const Eigen::Vector2cd& psi) {
    const Eigen::Vector2cd v = psi.normalized();
    return DensityMatrix(v * v.adjoint());
  }

  static DensityMatrix maximally_mixed() { return DensityMatrix(0.5 * Mat2::Identity()); }

  const Mat2& matrix() const { return m_; }

  BlochVector bloch() const {
    Vec3 r(2.0 * m_(0, 1).real(), -2.0 * m_(0, 1).imag(), (m_(0, 0) - m_(1, 1)).real());
    const double n = r.norm();
    if (n > 1.0) r /= n;  // rounding only; construction already bounds the norm
    return BlochVector(r);
  }

 private:
  Mat2 m_;
};

/// Two-outcome POVM element, 0 <= E <= I.
class Effect {
 public:
  explicit Effect(const Mat2& m) : m_(m) {
    if (!m.allFinite()) throw std::invalid_argument("Effect: non-finite entries");
    if (detail::max_abs(m - m.adjoint()) > kStateTolerance)
      throw std::invalid_argument("Effect: not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat2> es(detail::hermitian_part(m), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kStateTolerance ||
        es.eigenvalues().maxCoeff() > 1.0 + kStateTolerance)
      throw std::invalid_argument("Effect: eigenvalues outside [0, 1]");
  }

  /// E = e0 I + e . sigma
  static Effect from_components(double e0, const Vec3& e) {
    return Effect(e0 * Mat2::Identity() + pauli::along(e));
  }

  static Effect projector(const Eigen::Vector2cd& psi) {
    const Eigen::Vector2cd v = psi.normalized();
    return Effect(v * v.adjoint());
  }

  const Mat2& matrix() const { return m_; }

  /// Coefficient of the identity, Tr(E)/2.
  double identity_component() const { return 0.5 * m_.trace().real(); }

  /// Coefficients of sigma_x, sigma_y, sigma_z, Tr(E sigma_a)/2.
  Vec3 pauli_components() const {
    return Vec3(m_(0, 1).real(), -m_(0, 1).imag(), 0.5 * (m_(0, 0) - m_(1, 1)).real());
  }

 private:
  Mat2 m_;
};

/// Rotation rate and dephasing time of the free evolution. t2 may be +infinity.
struct EvolutionParams {
  double omega_rot = 1.0;
  double t2 = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(omega_rot >= 0.0) || !std::isfinite(omega_rot))
      throw std::invalid_argument("EvolutionParams: omega_rot must be finite and >= 0");
    if (!(t2 > 0.0)) throw std::invalid_argument("EvolutionParams: t2 must be > 0");
  }
};

/// 4x4 Hermitian unit-trace operator. Subsystem A (most significant index) is the
/// untouched input leg, subsystem B is the output of the map.
class ChoiState {
 public:
  explicit ChoiState(const Mat4& m) : m_(m) {
    if (!m.allFinite()) throw std::invalid_argument("ChoiState: non-finite entries");
    if (detail::max_abs(m - m.adjoint()) > kChoiTolerance)
      throw std::invalid_argument("ChoiState: not Hermitian");
    if (std::abs(m.trace() - Complex(1.0)) > kChoiTolerance)
      throw std::invalid_argument("ChoiState: trace " + detail::fmt_double(m.trace().real()) +
                                  " != 1");
  }

  const Mat4& matrix() const { return m_; }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Mat4> es(detail::hermitian_part(m_), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  double partial_trace_deviation() const;

  bool is_physical() const {
    return min_eigenvalue() >= -kChoiTolerance &&
           partial_trace_deviation() <= kChoiPartialTraceTolerance;
  }

 private:
  Mat4 m_;
};

/// Tr(E rho), clamped to [0, 1] when within 1e-12 of either end.
inline double born_probability(const DensityMatrix& rho, const Effect& e) {
  double p = (e.matrix() * rho.matrix()).trace().real();
  if (p < 0.0 && p > -kStateTolerance) p = 0.0;
  if (p > 1.0 && p < 1.0 + kStateTolerance) p = 1.0;
  return p;
}

/// Closed-form solution of the z-axis dephasing master equation
///   d rho/dt = i (omega/2) [sigma_z, rho] + (1/(2 T2)) (sigma_z rho sigma_z - rho).
/// The Bloch vector rotates by -omega t about z while its transverse part decays as exp(-t/T2).
inline DensityMatrix evolve_state(const DensityMatrix& rho0, double t, const EvolutionParams& ev) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve_state: negative time");
  ev.validate();
  const double env = std::exp(-t / ev.t2);
  const double c = env * std::cos(ev.omega_rot * t);
  const double s = env * std::sin(ev.omega_rot * t);
  const Mat2& r = rho0.matrix();
  const Mat2 sz = pauli::z();
  const Mat2 comm = sz * r - r * sz;
  Mat2 out = 0.5 * (1.0 + c) * r + 0.5 * (1.0 - c) * (sz * r * sz) + Complex(0.0, 0.5 * s) * comm;
  return DensityMatrix(detail::hermitian_part(out));
}

/// Superoperator of d rho/dt = i(omega/2)[sigma_n, rho] + (1/(2 T2))(sigma_n rho sigma_n - rho)
/// acting on column-stacked vec(rho).
inline Mat4 lindblad_generator(const Vec3& axis, const EvolutionParams& ev) {
  const Mat2 sn = pauli::along(axis);
  const Mat2 id = Mat2::Identity();
  const double gamma = std::isinf(ev.t2) ? 0.0 : 1.0 / (2.0 * ev.t2);
  // vec(A X B) = (B^T kron A) vec(X)
  const Mat4 left = detail::kron(id, sn);
  const Mat4 right = detail::kron(sn.transpose(), id);
  const Mat4 sandwich = detail::kron(sn.transpose(), sn);
  return Complex(0.0, 0.5 * ev.omega_rot) * (left - right) +
         gamma * (sandwich - Mat4::Identity());
}

/// Default step count: 1000 steps per pi/omega (or per pi*T2 when dephasing is faster).
inline std::int64_t default_lindblad_steps(double t, const EvolutionParams& ev) {
  const double rate = std::max(ev.omega_rot, std::isinf(ev.t2) ? 0.0 : 1.0 / ev.t2);
  const double steps = std::ceil(1000.0 * rate * t / std::numbers::pi);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(steps));
}

/// Fixed-step RK4 propagator for the generator above, as a 4x4 superoperator on vec(rho).
/// One RK4 step of a linear autonomous system is the matrix polynomial
/// 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24; the steps are composed by repeated squaring.
/// Without an explicit step count default_lindblad_steps is used.
inline Mat4 lindblad_propagator(double t, const Vec3& axis, const EvolutionParams& ev,
                                std::optional<std::int64_t> step_count = std::nullopt) {
  if (!(t >= 0.0)) throw std::invalid_argument("lindblad_integrate: negative time");
  if (std::abs(axis.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("lindblad_integrate: axis is not normalized");
  ev.validate();
  if (step_count && *step_count <= 0)
    throw std::invalid_argument("lindblad_integrate: step count must be positive");
  const std::int64_t steps = step_count ? *step_count : default_lindblad_steps(t, ev);
  const Mat4 hl = (t / static_cast<double>(steps)) * lindblad_generator(axis, ev);
  const Mat4 hl2 = hl * hl;
  const Mat4 hl3 = hl2 * hl;
  Mat4 base = Mat4::Identity() + hl + hl2 / 2.0 + hl3 / 6.0 + (hl3 * hl) / 24.0;
  Mat4 acc = Mat4::Identity();
  for (std::int64_t n = steps; n > 0; n >>= 1) {
    if (n & 1) acc = acc * base;
    if (n > 1) base = base * base;
  }
  return acc;
}

/// Apply a column-stacked superoperator to a 2x2 matrix.
inline Mat2 apply_superoperator(const Mat4& s, const Mat2& rho) {
  Eigen::Vector4cd v(rho(0, 0), rho(1, 0), rho(0, 1), rho(1, 1));
  const Eigen::Vector4cd w = s * v;
  Mat2 out;
  out << w(0), w(2), w(1), w(3);
  return out;
}

/// Numerically integrates the axis-n dephasing master equation with fixed-step RK4.
inline DensityMatrix lindblad_integrate(const DensityMatrix& rho0, double t, const Vec3& axis,
                                        const EvolutionParams& ev,
                                        std::optional<std::int64_t> steps = std::nullopt) {
  const Mat4 s = lindblad_propagator(t, axis, ev, steps);
  return DensityMatrix(detail::hermitian_part(apply_superoperator(s, rho0.matrix())));
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues are clamped to zero.
template <int D>
Eigen::Matrix<Complex, D, D> psd_sqrt(const Eigen::Matrix<Complex, D, D>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Complex, D, D>> es(detail::hermitian_part(m));
  Eigen::Matrix<double, D, 1> ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 for Hermitian PSD unit-trace matrices,
/// evaluated as the squared nuclear norm of sqrt(a) sqrt(b). Taking square roots of the
/// eigenvalues of sqrt(a) b sqrt(a) instead turns rounding noise of 1e-17 on a zero eigenvalue
/// into an error of 3e-9; singular values of the product move only at second order.
template <int D>
double uhlmann_fidelity(const Eigen::Matrix<Complex, D, D>& a,
                        const Eigen::Matrix<Complex, D, D>& b) {
  const Eigen::Matrix<Complex, D, D> prod = psd_sqrt<D>(a) * psd_sqrt<D>(b);
  const double tr = Eigen::JacobiSVD<Eigen::Matrix<Complex, D, D>>(prod).singularValues().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

inline double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return uhlmann_fidelity<2>(rho.matrix(), sigma.matrix());
}

/// Trace over the output leg B.
inline Mat2 partial_trace_b(const Mat4& m) {
  Mat2 out;
  for (int a = 0; a < 2; ++a)
    for (int ap = 0; ap < 2; ++ap) out(a, ap) = m(2 * a, 2 * ap) + m(2 * a + 1, 2 * ap + 1);
  return out;
}

inline Mat2 partial_trace_b(const ChoiState& c) { return partial_trace_b(c.matrix()); }

/// Trace over the input leg A.
inline Mat2 partial_trace_a(const Mat4& m) {
  Mat2 out;
  for (int b = 0; b < 2; ++b)
    for (int bp = 0; bp < 2; ++bp) out(b, bp) = m(b, bp) + m(2 + b, 2 + bp);
  return out;
}

inline double ChoiState::partial_trace_deviation() const {
  return detail::max_abs(partial_trace_b(m_) - 0.5 * Mat2::Identity());
}

/// (I kron U)|Phi+><Phi+|(I kron U)^dagger.
inline ChoiState choi_from_unitary(const Mat2& u) {
  if (detail::max_abs(u.adjoint() * u - Mat2::Identity()) > 1e-10)
    throw std::invalid_argument("choi_from_unitary: matrix is not unitary");
  Eigen::Vector4cd phi = Eigen::Vector4cd::Zero();
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  const Eigen::Vector4cd v = detail::kron(Mat2::Identity(), u) * phi;
  return ChoiState(detail::hermitian_part(Mat4(v * v.adjoint())));
}

/// Choi state (1/2) sum_kl |k><l| kron E(|k><l|) of a column-stacked superoperator.
inline Mat4 choi_matrix_from_superoperator(const Mat4& s) {
  Mat4 out = Mat4::Zero();
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      Mat2 unit = Mat2::Zero();
      unit(k, l) = 1.0;
      out.block<2, 2>(2 * k, 2 * l) = 0.5 * apply_superoperator(s, unit);
    }
  return out;
}

inline ChoiState choi_from_superoperator(const Mat4& s) {
  return ChoiState(detail::hermitian_part(choi_matrix_from_superoperator(s)));
}

/// E(rho) = 2 Tr_A[(rho^T kron I) C]. Works for any Hermitian C, physical or not.
inline Mat2 apply_choi_matrix(const Mat4& choi, const Mat2& rho) {
  Mat2 out = Mat2::Zero();
  for (int a = 0; a < 2; ++a)
    for (int ap = 0; ap < 2; ++ap) out += 2.0 * rho(a, ap) * choi.block<2, 2>(2 * a, 2 * ap);
  return out;
}

inline DensityMatrix apply_choi(const ChoiState& choi, const DensityMatrix& rho) {
  return DensityMatrix(detail::hermitian_part(apply_choi_matrix(choi.matrix(), rho.matrix())));
}

/// Element M_ij = M_i kron M_j of the two-qubit Pauli basis; i acts on A, j on B.
inline const std::array<Mat4, 16>& two_qubit_pauli_basis() {
  static const std::array<Mat4, 16> basis = [] {
    std::array<Mat4, 16> b;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) b[4 * i + j] = detail::kron(pauli::basis()[i], pauli::basis()[j]);
    return b;
  }();
  return basis;
}

/// p_ij = Tr(M_ij op), stored at index 4 i + j. No 1/4 factor.
inline std::array<double, 16> pauli_expansion(const Mat4& op) {
  std::array<double, 16> p{};
  const auto& basis = two_qubit_pauli_basis();
  for (int k = 0; k < 16; ++k) p[k] = (basis[k] * op).trace().real();
  return p;
}

/// Inverse of pauli_expansion: op = (1/4) sum_ij p_ij M_ij.
inline Mat4 pauli_reconstruct(const std::array<double, 16>& p) {
  Mat4 out = Mat4::Zero();
  const auto& basis = two_qubit_pauli_basis();
  for (int k = 0; k < 16; ++k) out += 0.25 * p[k] * basis[k];
  return out;
}

inline Mat2 hadamard() {
  Mat2 h;
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

}  // namespace spamtomo
