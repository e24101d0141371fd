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

// Random states, unitaries and channels for property tests and oracles.

#pragma once

#include "spamtomo/qubit.hpp"

#include <Eigen/Dense>

#include <random>

namespace spamtomo {

/// n x n complex matrix with i.i.d. standard normal real and imaginary parts.
inline Eigen::MatrixXcd ginibre(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = Complex(g(rng), g(rng));
  return m;
}

/// Haar-random unitary via QR with the phases of R's diagonal divided out.
inline Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXcd z = ginibre(n, rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

inline Mat2 random_unitary2(std::mt19937_64& rng) { return random_unitary(2, rng); }

/// Ginibre-distributed mixed qubit state.
inline DensityMatrix random_density(std::mt19937_64& rng) {
  const Mat2 g = ginibre(2, rng);
  Mat2 m = g * g.adjoint();
  m /= m.trace();
  return DensityMatrix(detail::hermitian_part(m));
}

inline Vec3 random_bloch(std::mt19937_64& rng) {
  return random_density(rng).bloch().vec();
}

/// Random channel: two Kraus operators cut from a Haar unitary on the qubit plus a
/// two-level environment.
inline ChoiState random_choi(std::mt19937_64& rng) {
  const Eigen::MatrixXcd u = random_unitary(4, rng);
  Mat4 c = Mat4::Zero();
  Eigen::Vector4cd phi = Eigen::Vector4cd::Zero();
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  for (int m = 0; m < 2; ++m) {
    const Mat2 k = u.block(2 * m, 0, 2, 2);
    const Eigen::Vector4cd v = detail::kron(Mat2::Identity(), k) * phi;
    c += v * v.adjoint();
  }
  return ChoiState(detail::hermitian_part(c));
}

/// Hermitian, unit-trace 4x4 matrix that violates positivity or trace preservation: a
/// random channel plus a random traceless Hermitian kick of Frobenius norm `size`.
inline ChoiState random_unphysical_choi(std::mt19937_64& rng, double size = 0.1) {
  for (;;) {
    const Mat4 base = random_choi(rng).matrix();
    const Mat4 g = ginibre(4, rng);
    Mat4 h = detail::hermitian_part(g);
    h -= (h.trace().real() / 4.0) * Mat4::Identity();
    h *= size / h.norm();
    const ChoiState out(detail::hermitian_part(Mat4(base + h)));
    if (out.min_eigenvalue() < -1e-6 || out.partial_trace_deviation() > 1e-4) return out;
  }
}

}  // namespace spamtomo
