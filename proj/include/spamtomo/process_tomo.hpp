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

// Single-qubit process tomography with imperfect, self-consistently estimated SPAM.
//
// Linear inversion solves for the Pauli transfer matrix from the observed probabilities and the
// estimated states and effects. Its output is generally not a valid channel, so it is then
// projected by maximum likelihood over Cholesky-parametrized Choi states, with trace
// preservation enforced through an augmented Lagrangian.

#pragma once

#include "spamtomo/optimizer.hpp"
#include "spamtomo/qubit.hpp"
#include "spamtomo/spam_model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace spamtomo {

/// T_ab = Tr(sigma_a E(sigma_b)) / 2. Row 0 is (1, 0, 0, 0) for every trace-preserving map.
class PauliTransferMatrix {
 public:
  PauliTransferMatrix() : t_(Eigen::Matrix4d::Identity()) {}

  explicit PauliTransferMatrix(const Eigen::Matrix4d& t) : t_(t) {
    if (!t.allFinite()) throw std::invalid_argument("PauliTransferMatrix: non-finite entries");
    if ((t.row(0) - Eigen::RowVector4d(1, 0, 0, 0)).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("PauliTransferMatrix: first row must be (1, 0, 0, 0)");
  }

  /// T_ab = Tr((sigma_b^T kron sigma_a) C). The first row is taken as (1, 0, 0, 0) even when
  /// the Choi matrix is not trace preserving.
  static PauliTransferMatrix from_choi(const ChoiState& c) {
    Eigen::Matrix4d t;
    const auto& s = pauli::basis();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        t(a, b) = (detail::kron(s[b].transpose(), s[a]) * c.matrix()).trace().real();
    t.row(0) << 1, 0, 0, 0;
    return PauliTransferMatrix(t);
  }

  /// C = (1/4) sum_ab T_ab sigma_b^T kron sigma_a.
  ChoiState to_choi() const {
    Mat4 c = Mat4::Zero();
    const auto& s = pauli::basis();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) c += 0.25 * t_(a, b) * detail::kron(s[b].transpose(), s[a]);
    return ChoiState(detail::hermitian_part(c));
  }

  const Eigen::Matrix4d& matrix() const { return t_; }

 private:
  Eigen::Matrix4d t_;
};

/// States and effects that a process acts between, in Bloch form.
struct SpamFrame {
  std::vector<Vec3> states;       ///< Bloch vectors r_i
  std::vector<double> effect_e0;  ///< identity coefficient of E_j
  std::vector<Vec3> effect_e;     ///< Pauli coefficients of E_j
};

inline SpamFrame frame_of(const SpamParameterSet& spam) {
  SpamParameterSet copy = spam;
  if (copy.method == Method::B) copy.method = Method::A;  // same layout, evolution unused
  copy.evolution.reset();
  const RealizedSpam r = realize(copy);
  SpamFrame f;
  for (const auto& s : r.states) f.states.push_back(s.bloch().vec());
  for (const auto& e : r.effects) {
    f.effect_e0.push_back(e.identity_component());
    f.effect_e.push_back(e.pauli_components());
  }
  return f;
}

/// Least-squares estimate of the 12 free transfer-matrix entries from p_{j|i} = Tr(E_j E(rho_i)),
/// using Tr(E_j (I + s.sigma)/2) = e0_j + e_j . s and s = t + M r_i. Throws when the frame
/// does not determine all 12 entries.
inline ChoiState linear_invert(const Eigen::MatrixXd& freq, const SpamFrame& frame) {
  const auto ns = static_cast<Eigen::Index>(frame.states.size());
  const auto nm = static_cast<Eigen::Index>(frame.effect_e.size());
  if (freq.rows() != ns || freq.cols() != nm)
    throw std::invalid_argument("linear_invert: frequency table does not match the SPAM frame");
  if (ns * nm < 12) throw std::invalid_argument("linear_invert: fewer than 12 cells");
  Eigen::MatrixXd design(ns * nm, 12);
  Eigen::VectorXd rhs(ns * nm);
  for (Eigen::Index i = 0; i < ns; ++i)
    for (Eigen::Index j = 0; j < nm; ++j) {
      const Eigen::Index row = i * nm + j;
      const Vec3& e = frame.effect_e[j];
      const Vec3& r = frame.states[i];
      rhs(row) = freq(i, j) - frame.effect_e0[j];
      for (int a = 0; a < 3; ++a) {
        design(row, 4 * a) = e(a);
        for (int b = 0; b < 3; ++b) design(row, 4 * a + 1 + b) = e(a) * r(b);
      }
    }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 12)
    throw std::invalid_argument("linear_invert: SPAM frame is not informationally complete (rank " +
                                std::to_string(qr.rank()) + " < 12)");
  const Eigen::VectorXd sol = qr.solve(rhs);
  Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
  t(0, 0) = 1.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 4; ++b) t(a + 1, b) = sol(4 * a + b);
  return PauliTransferMatrix(t).to_choi();
}

inline ChoiState linear_invert(const Eigen::MatrixXd& freq, const SpamParameterSet& spam) {
  return linear_invert(freq, frame_of(spam));
}

/// Probabilities Tr(E_j E(rho_i)) of a (possibly unphysical) Choi matrix in a frame.
inline Eigen::MatrixXd forward_probabilities(const Mat4& choi, const SpamFrame& frame) {
  Eigen::MatrixXd p(frame.states.size(), frame.effect_e.size());
  for (std::size_t i = 0; i < frame.states.size(); ++i) {
    const Mat2 rho = 0.5 * (Mat2::Identity() + pauli::along(frame.states[i]));
    const Mat2 out = apply_choi_matrix(choi, rho);
    for (std::size_t j = 0; j < frame.effect_e.size(); ++j) {
      const Mat2 e = frame.effect_e0[j] * Mat2::Identity() + pauli::along(frame.effect_e[j]);
      p(i, j) = (e * out).trace().real();
    }
  }
  return p;
}

// ---------------------------------------------------------------------------------------------
// Cholesky parametrization.

/// Sixteen reals for a lower-triangular complex 4x4 T: the four (real) diagonal entries, then
/// (re, im) of the entries (1,0), (2,0), (2,1), (3,0), (3,1), (3,2).
struct CholeskyParams {
  Eigen::Matrix<double, 16, 1> t = Eigen::Matrix<double, 16, 1>::Zero();
};

namespace detail {

inline constexpr std::array<std::pair<int, int>, 6> kLowerEntries{
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

}  // namespace detail

/// Real and imaginary parts of rho = T^dagger T / Tr(T^dagger T).
template <typename T>
struct ChoiParts {
  Eigen::Matrix<T, 4, 4> re;
  Eigen::Matrix<T, 4, 4> im;
};

template <typename T, typename Vec>
ChoiParts<T> choi_parts_from_cholesky(const Vec& t) {
  Eigen::Matrix<T, 4, 4> a;
  Eigen::Matrix<T, 4, 4> b;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a(r, c) = b(r, c) = T(0.0) * t(0);
  for (int d = 0; d < 4; ++d) a(d, d) = t(d);
  for (int k = 0; k < 6; ++k) {
    const auto [r, c] = detail::kLowerEntries[k];
    a(r, c) = t(4 + 2 * k);
    b(r, c) = t(5 + 2 * k);
  }
  // (A - iB)^T (A + iB) = A^T A + B^T B + i (A^T B - B^T A)
  ChoiParts<T> out;
  out.re = a.transpose() * a + b.transpose() * b;
  out.im = a.transpose() * b - b.transpose() * a;
  const T tr = out.re.trace();
  out.re /= tr;
  out.im /= tr;
  return out;
}

inline Mat4 choi_matrix_from_cholesky(const CholeskyParams& p) {
  const ChoiParts<double> parts = choi_parts_from_cholesky<double>(p.t);
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = Complex(parts.re(r, c), parts.im(r, c));
  return detail::hermitian_part(m);
}

/// Hermitian, PSD and unit trace by construction for any nonzero t.
inline ChoiState choi_from_cholesky(const CholeskyParams& p) {
  if (p.t.squaredNorm() == 0.0) throw std::invalid_argument("choi_from_cholesky: t is zero");
  return ChoiState(choi_matrix_from_cholesky(p));
}

/// Factor of the positive part of c (negative eigenvalues clamped, plus a ridge of `ridge`
/// times the identity so that rank-deficient inputs factor). Uses the reversal permutation P:
/// if P c P = L L^dagger then T = P L^dagger P is lower triangular with T^dagger T = c.
inline CholeskyParams cholesky_from_choi(const Mat4& c, double ridge = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(detail::hermitian_part(c));
  Mat4 pos = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
             es.eigenvectors().adjoint();
  pos += ridge * Mat4::Identity();
  pos /= pos.trace().real();
  Mat4 rev = Mat4::Zero();
  for (int k = 0; k < 4; ++k) rev(k, 3 - k) = 1.0;
  const Mat4 permuted = rev * pos * rev;
  Eigen::LLT<Mat4> llt(detail::hermitian_part(permuted));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("cholesky_from_choi: factorization failed");
  const Mat4 l = llt.matrixL();
  const Mat4 t = rev * l.adjoint() * rev;
  CholeskyParams p;
  for (int d = 0; d < 4; ++d) p.t(d) = t(d, d).real();
  for (int k = 0; k < 6; ++k) {
    const auto [r, col] = detail::kLowerEntries[k];
    p.t(4 + 2 * k) = t(r, col).real();
    p.t(5 + 2 * k) = t(r, col).imag();
  }
  return p;
}

inline CholeskyParams cholesky_from_choi(const ChoiState& c, double ridge = 1e-12) {
  return cholesky_from_choi(c.matrix(), ridge);
}

// ---------------------------------------------------------------------------------------------
// Likelihood and constraints.

/// Floor on |q (1 - q)| in the likelihood denominator; Pauli components lie in [-1, 1].
inline constexpr double kDenominatorFloor = 1e-3;

namespace detail {

/// Pauli components Tr(M_ij rho) of rho = re + i im, index 4 i + j.
template <typename T>
std::array<T, 16> pauli_components(const ChoiParts<T>& rho) {
  std::array<T, 16> q;
  const auto& basis = two_qubit_pauli_basis();
  for (int k = 0; k < 16; ++k) {
    // Tr(M rho) = sum_rc M_cr rho_rc; real because both are Hermitian.
    T acc = T(0.0) * rho.re(0, 0);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        const Complex m = basis[k](c, r);
        if (m.real() != 0.0) acc += T(m.real()) * rho.re(r, c);
        if (m.imag() != 0.0) acc -= T(m.imag()) * rho.im(r, c);
      }
    q[k] = acc;
  }
  return q;
}

template <typename T>
T likelihood_denominator(const T& q) {
  using std::abs;
  const T d = abs(q * (T(1.0) - q));
  return value_of(d) > kDenominatorFloor ? d : T(kDenominatorFloor) + T(0.0) * q;
}

}  // namespace detail

/// The four real components of Tr_B rho - I/2: two diagonal deviations, then Re and Im of the
/// off-diagonal entry. All vanish exactly when the map is trace preserving.
template <typename T>
std::array<T, 4> constraint_values(const ChoiParts<T>& rho) {
  // Tr_B: rhoA(a, a') = rho(2a, 2a') + rho(2a + 1, 2a' + 1)
  return {rho.re(0, 0) + rho.re(1, 1) - T(0.5), rho.re(2, 2) + rho.re(3, 3) - T(0.5),
          rho.re(0, 2) + rho.re(1, 3), rho.im(0, 2) + rho.im(1, 3)};
}

inline std::array<double, 4> constraints(const CholeskyParams& p) {
  return constraint_values<double>(choi_parts_from_cholesky<double>(p.t));
}

/// N sum_k (p_k - q_k)^2 / max(|q_k (1 - q_k)|, floor), with p the Pauli components of the
/// reconstruction and q those of the candidate.
inline double process_nll(const CholeskyParams& t, const Mat4& rho_rec, double shots) {
  const auto p = pauli_expansion(rho_rec);
  const auto q = detail::pauli_components<double>(choi_parts_from_cholesky<double>(t.t));
  double s = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double d = p[k] - q[k];
    s += d * d / detail::likelihood_denominator<double>(q[k]);
  }
  return shots * s;
}

inline double process_nll(const CholeskyParams& t, const ChoiState& rho_rec, double shots) {
  return process_nll(t, rho_rec.matrix(), shots);
}

// ---------------------------------------------------------------------------------------------
// Augmented Lagrangian projection.

struct AugLagState {
  std::array<double, 4> lambda{0.0, 0.0, 0.0, 0.0};
  double mu = 10.0;
  int iteration = 0;
};

struct AugLagOptions {
  double mu0 = 10.0;
  double eta = 10.0;
  int outer_iterations = 5;
  OptimizerBudget inner{4000, 1, 1e-15};
};

struct MleResult {
  ChoiState choi{Mat4::Identity() / 4.0};
  CholeskyParams params;
  AugLagState state;
  double max_constraint = 0.0;
  double nll = 0.0;
  bool converged = false;  ///< every inner minimization converged
  int evaluations = 0;
};

namespace detail {

/// Residuals whose squared norm is the augmented Lagrangian
///   (delta/N) nll(t) + sum_i (lambda_i C_i + mu/2 C_i^2) + const,
/// using lambda C + mu/2 C^2 = mu/2 (C + lambda/mu)^2 - lambda^2/(2 mu). The likelihood is
/// divided by N / delta so that mu is on a fixed scale whatever the shot count. A last
/// residual holds |t| at one.
struct AugLagResiduals {
  std::array<double, 16> p;
  std::array<double, 4> lambda;
  double mu;

  template <typename T>
  VecXT<T> operator()(const VecXT<T>& t) const {
    using std::sqrt;
    const ChoiParts<T> rho = choi_parts_from_cholesky<T>(t);
    const auto q = pauli_components<T>(rho);
    const auto c = constraint_values<T>(rho);
    VecXT<T> r(21);
    for (int k = 0; k < 16; ++k)
      r(k) = (T(p[k]) - q[k]) * sqrt(T(kDenominatorFloor) / likelihood_denominator<T>(q[k]));
    const double root = std::sqrt(mu / 2.0);
    for (int i = 0; i < 4; ++i) r(16 + i) = T(root) * (c[i] + T(lambda[i] / mu));
    r(20) = t.squaredNorm() - T(1.0);  // pins the scale, which rho does not depend on
    return r;
  }
};

}  // namespace detail

/// Closest channel to rho_rec under the process likelihood, by an augmented Lagrangian over
/// the Cholesky parameters. Multipliers follow lambda <- lambda + mu C and the penalty grows
/// as mu <- eta mu after every outer iteration.
inline MleResult mle_project(const ChoiState& rho_rec, double shots,
                             const AugLagOptions& options = {}) {
  if (!(shots > 0.0)) throw std::invalid_argument("mle_project: shot count must be positive");
  if (options.outer_iterations < 1 || !(options.mu0 > 0.0) || !(options.eta >= 1.0))
    throw std::invalid_argument("mle_project: invalid outer-loop schedule");
  options.inner.validate();
  MleResult res;
  res.state.mu = options.mu0;
  res.params = cholesky_from_choi(rho_rec);
  res.converged = true;
  detail::AugLagResiduals f{pauli_expansion(rho_rec.matrix()), res.state.lambda, res.state.mu};
  Eigen::VectorXd x = res.params.t.normalized();
  for (int it = 0; it < options.outer_iterations; ++it) {
    f.lambda = res.state.lambda;
    f.mu = res.state.mu;
    const LeastSquaresResult inner = minimize_newton(f, x, options.inner);
    res.evaluations += inner.evaluations;
    res.converged = res.converged && inner.converged;
    x = inner.x;
    const auto c = constraint_values<double>(choi_parts_from_cholesky<double>(x));
    for (int i = 0; i < 4; ++i) res.state.lambda[i] += res.state.mu * c[i];
    res.state.mu *= options.eta;
    res.state.iteration = it + 1;
  }
  res.params.t = x;
  res.choi = choi_from_cholesky(res.params);
  const auto c = constraints(res.params);
  for (double v : c) res.max_constraint = std::max(res.max_constraint, std::abs(v));
  res.nll = process_nll(res.params, rho_rec, shots);
  return res;
}

// ---------------------------------------------------------------------------------------------

/// Noisy Hadamard: rotation about (x + z)/sqrt2 for t = pi/omega under the axis-aligned
/// dephasing master equation.
inline ChoiState hadamard_truth(const EvolutionParams& ev,
                                std::optional<std::int64_t> steps = std::nullopt) {
  ev.validate();
  if (!(ev.omega_rot > 0.0))
    throw std::invalid_argument("hadamard_truth: rotation rate must be positive");
  const Vec3 axis = Vec3(1.0, 0.0, 1.0).normalized();
  return choi_from_superoperator(
      lindblad_propagator(std::numbers::pi / ev.omega_rot, axis, ev, steps));
}

/// State fidelity between Choi states. Negative eigenvalues of b are clamped and b is
/// renormalized, so a raw linear-inversion estimate can be passed as b.
inline double process_fidelity(const ChoiState& a, const ChoiState& b) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(detail::hermitian_part(b.matrix()));
  Mat4 pos = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
             es.eigenvectors().adjoint();
  const double tr = pos.trace().real();
  if (tr > 0.0) pos /= tr;
  return uhlmann_fidelity<4>(a.matrix(), pos);
}

}  // namespace spamtomo
