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

#include "spamtomo/qubit.hpp"
#include "spamtomo/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace spamtomo {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

DensityMatrix zero_state() { return DensityMatrix::pure(Eigen::Vector2cd(1, 0)); }
DensityMatrix one_state() { return DensityMatrix::pure(Eigen::Vector2cd(0, 1)); }

TEST(BlochVector, RejectsLongVectors) {
  EXPECT_NO_THROW(BlochVector(0, 0, 1));
  EXPECT_THROW(BlochVector(0.8, 0.8, 0), std::invalid_argument);
  EXPECT_THROW(BlochVector(std::nan(""), 0, 0), std::invalid_argument);
}

TEST(DensityMatrix, ValidatesInput) {
  Mat2 m = Mat2::Identity();
  EXPECT_THROW(DensityMatrix{m}, std::invalid_argument);  // trace 2
  m << 0.5, Complex(0, 1), Complex(0, 1), 0.5;
  EXPECT_THROW(DensityMatrix{m}, std::invalid_argument);  // not Hermitian
  m << 1.5, 0, 0, -0.5;
  EXPECT_THROW(DensityMatrix{m}, std::invalid_argument);  // negative eigenvalue
}

TEST(DensityMatrix, BlochRoundTrip) {
  const Vec3 r(0.3, -0.4, 0.5);
  const Vec3 back = DensityMatrix::from_bloch(r).bloch().vec();
  EXPECT_LT((back - r).norm(), 1e-15);
}

TEST(Effect, ValidatesSpectrum) {
  EXPECT_THROW(Effect::from_components(0.5, Vec3(0, 0, 0.6)), std::invalid_argument);
  EXPECT_NO_THROW(Effect::from_components(0.5, Vec3(0, 0, 0.5)));
}

TEST(BornProbability, ProjectorOnOwnState) {
  EXPECT_DOUBLE_EQ(born_probability(zero_state(), Effect::projector(Eigen::Vector2cd(1, 0))), 1.0);
}

TEST(BornProbability, MaximallyMixedState) {
  const Effect e = Effect::from_components(0.5, Vec3(0.1, -0.2, 0.3));
  EXPECT_NEAR(born_probability(DensityMatrix::maximally_mixed(), e), 0.5, 1e-15);
}

TEST(BornProbability, NoisyZReadout) {
  // E = (1 - eps0 + eps1)/2 I + (1 - eps0 - eps1)/2 sigma_z with eps0 = eps1 = 0.05.
  const Effect e = Effect::from_components(0.5, Vec3(0, 0, 0.45));
  EXPECT_NEAR(born_probability(zero_state(), e), 0.95, 1e-15);
}

TEST(EvolveState, IdentityAtTimeZero) {
  const DensityMatrix rho = DensityMatrix::from_bloch(Vec3(0.2, 0.3, -0.4));
  EXPECT_LT(detail::max_abs(Mat2(evolve_state(rho, 0.0, {1.3, 2.0}).matrix() - rho.matrix())), 1e-15);
}

TEST(EvolveState, ZEigenstateIsStationary) {
  for (double t : {0.1, 1.0, 17.0})
    EXPECT_LT(detail::max_abs(Mat2(evolve_state(zero_state(), t, {2.0, 3.0}).matrix() -
                                   zero_state().matrix())),
              1e-15);
}

TEST(EvolveState, RotatesByMinusOmegaT) {
  const DensityMatrix rho = DensityMatrix::from_bloch(Vec3(1, 0, 0));
  const Vec3 r = evolve_state(rho, std::numbers::pi / 2.0, {1.0, kInf}).bloch().vec();
  EXPECT_LT((r - Vec3(0, -1, 0)).norm(), 1e-12);
}

TEST(EvolveState, PureDephasingEnvelope) {
  const DensityMatrix rho = DensityMatrix::from_bloch(Vec3(1, 0, 0));
  const Vec3 r = evolve_state(rho, 2.5, {0.0, 2.5}).bloch().vec();
  EXPECT_LT((r - Vec3(std::exp(-1.0), 0, 0)).norm(), 1e-15);
}

TEST(EvolveState, RejectsBadInput) {
  EXPECT_THROW(evolve_state(zero_state(), -1.0, {}), std::invalid_argument);
  EXPECT_THROW(evolve_state(zero_state(), 1.0, {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(evolve_state(zero_state(), 1.0, {-1.0, 1.0}), std::invalid_argument);
}

TEST(LindbladIntegrate, MatchesClosedFormAlongZ) {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 20; ++c) {
    const DensityMatrix rho = random_density(rng);
    const EvolutionParams ev{0.7 + c * 0.1, 3.0 + c};
    const double t = 0.25 * c * ev.t2;
    const Mat2 a = evolve_state(rho, t, ev).matrix();
    const Mat2 b = lindblad_integrate(rho, t, Vec3::UnitZ(), ev).matrix();
    EXPECT_LT(detail::max_abs(Mat2(a - b)), 1e-9) << "case " << c;
  }
}

TEST(LindbladIntegrate, PiRotationAboutXPlusZIsHadamard) {
  std::mt19937_64 rng(6);
  const Vec3 axis = Vec3(1, 0, 1).normalized();
  for (int c = 0; c < 5; ++c) {
    const DensityMatrix rho = random_density(rng);
    const Mat2 out = lindblad_integrate(rho, std::numbers::pi, axis, {1.0, kInf}).matrix();
    const Mat2 expected = hadamard() * rho.matrix() * hadamard().adjoint();
    EXPECT_LT(detail::max_abs(Mat2(out - expected)), 1e-9);
  }
}

TEST(LindbladIntegrate, ZeroTimeIsIdentity) {
  const DensityMatrix rho = DensityMatrix::from_bloch(Vec3(0.1, 0.2, 0.3));
  const Mat2 out = lindblad_integrate(rho, 0.0, Vec3(0, 1, 0), {1.0, 2.0}).matrix();
  EXPECT_LT(detail::max_abs(Mat2(out - rho.matrix())), 1e-15);
}

TEST(LindbladIntegrate, RejectsUnnormalizedAxis) {
  EXPECT_THROW(lindblad_integrate(zero_state(), 1.0, Vec3(0, 0, 2), {}), std::invalid_argument);
  EXPECT_THROW(lindblad_integrate(zero_state(), 1.0, Vec3::UnitZ(), {}, 0), std::invalid_argument);
}

TEST(StateFidelity, KnownValues) {
  const DensityMatrix rho = DensityMatrix::from_bloch(Vec3(0.3, 0.1, -0.2));
  EXPECT_NEAR(state_fidelity(rho, rho), 1.0, 1e-12);
  EXPECT_NEAR(state_fidelity(zero_state(), one_state()), 0.0, 1e-15);
  EXPECT_NEAR(state_fidelity(zero_state(), DensityMatrix::maximally_mixed()), 0.5, 1e-12);
}

TEST(StateFidelity, MatchesBlochFormula) {
  // For qubits F = (1 + r.s + sqrt((1 - |r|^2)(1 - |s|^2))) / 2.
  std::mt19937_64 rng(8);
  for (int c = 0; c < 50; ++c) {
    const Vec3 r = random_bloch(rng), s = random_bloch(rng);
    const double expected =
        0.5 * (1.0 + r.dot(s) + std::sqrt((1.0 - r.squaredNorm()) * (1.0 - s.squaredNorm())));
    EXPECT_NEAR(state_fidelity(DensityMatrix::from_bloch(r), DensityMatrix::from_bloch(s)),
                expected, 1e-10);
  }
}

TEST(ChoiFromUnitary, IdentityIsPhiPlus) {
  Mat4 expected = Mat4::Zero();
  expected(0, 0) = expected(0, 3) = expected(3, 0) = expected(3, 3) = 0.5;
  EXPECT_LT(detail::max_abs(Mat4(choi_from_unitary(Mat2::Identity()).matrix() - expected)), 1e-15);
}

TEST(ChoiFromUnitary, HadamardIsRankOneAndTracePreserving) {
  const ChoiState c = choi_from_unitary(hadamard());
  Eigen::SelfAdjointEigenSolver<Mat4> es(c.matrix());
  EXPECT_NEAR(es.eigenvalues()(3), 1.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues().head<3>().cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_LT(c.partial_trace_deviation(), 1e-12);
}

TEST(ChoiFromUnitary, BitFlipIsOrthogonalToIdentity) {
  // <Phi+|(I x sigma_x)|Phi+> = Tr(sigma_x)/2 = 0, so the two rank-one Choi states have zero
  // overlap.
  const double f = uhlmann_fidelity<4>(choi_from_unitary(pauli::x()).matrix(),
                                       choi_from_unitary(Mat2::Identity()).matrix());
  EXPECT_NEAR(f, 0.0, 1e-12);
}

TEST(ChoiFromUnitary, RejectsNonUnitary) {
  EXPECT_THROW(choi_from_unitary(2.0 * Mat2::Identity()), std::invalid_argument);
}

TEST(ApplyChoi, IdentityLeavesStateUnchanged) {
  const DensityMatrix rho = DensityMatrix::from_bloch(Vec3(0.1, -0.5, 0.6));
  const Mat2 out = apply_choi(choi_from_unitary(Mat2::Identity()), rho).matrix();
  EXPECT_LT(detail::max_abs(Mat2(out - rho.matrix())), 1e-15);
}

TEST(ApplyChoi, HadamardMapsZeroToPlus) {
  const Vec3 r = apply_choi(choi_from_unitary(hadamard()), zero_state()).bloch().vec();
  EXPECT_LT((r - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(ApplyChoi, FullDephasingLimit) {
  // T2 -> 0 relative to the evolution time: the transverse part is gone.
  const ChoiState c = choi_from_superoperator(lindblad_propagator(1.0, Vec3::UnitZ(), {0.0, 1e-3}));
  const Mat2 out = apply_choi(c, DensityMatrix::from_bloch(Vec3(1, 0, 0))).matrix();
  EXPECT_LT(detail::max_abs(Mat2(out - 0.5 * Mat2::Identity())), 1e-12);
}

TEST(ApplyChoi, AgreesWithSuperoperator) {
  std::mt19937_64 rng(3);
  const Mat4 s = lindblad_propagator(0.7, Vec3(0.6, 0, 0.8), {1.2, 5.0});
  const ChoiState c = choi_from_superoperator(s);
  for (int k = 0; k < 10; ++k) {
    const DensityMatrix rho = random_density(rng);
    EXPECT_LT(detail::max_abs(Mat2(apply_choi(c, rho).matrix() -
                                   apply_superoperator(s, rho.matrix()))),
              1e-13);
  }
}

TEST(PartialTrace, KnownCases) {
  EXPECT_LT(detail::max_abs(Mat2(partial_trace_b(choi_from_unitary(Mat2::Identity())) -
                                 0.5 * Mat2::Identity())),
            1e-15);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const ChoiState c = choi_from_unitary(random_unitary2(rng));
    EXPECT_LT(c.partial_trace_deviation(), 1e-12);
  }
  const Mat2 a = random_density(rng).matrix(), b = random_density(rng).matrix();
  EXPECT_LT(detail::max_abs(Mat2(partial_trace_b(detail::kron(a, b)) - a)), 1e-14);
  EXPECT_LT(detail::max_abs(Mat2(partial_trace_a(detail::kron(a, b)) - b)), 1e-14);
}

TEST(PauliExpansion, IdentityOverFour) {
  const auto p = pauli_expansion(Mat4::Identity() / 4.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  for (int k = 1; k < 16; ++k) EXPECT_NEAR(p[k], 0.0, 1e-15);
}

TEST(PauliExpansion, BellState) {
  const auto p = pauli_expansion(choi_from_unitary(Mat2::Identity()).matrix());
  for (int k = 0; k < 16; ++k) {
    double expected = 0.0;
    if (k == 0 || k == 5 || k == 15) expected = 1.0;  // II, XX, ZZ
    if (k == 10) expected = -1.0;                     // YY
    EXPECT_NEAR(p[k], expected, 1e-15) << "component " << k;
  }
}

TEST(PauliExpansion, RoundTripOnRandomHermitian) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Mat4 h = detail::hermitian_part(Mat4(ginibre(4, rng)));
    EXPECT_LT(detail::max_abs(Mat4(pauli_reconstruct(pauli_expansion(h)) - h)), 1e-13);
  }
}

TEST(ChoiState, ValidatesInput) {
  EXPECT_THROW(ChoiState(Mat4::Identity()), std::invalid_argument);
  Mat4 m = Mat4::Identity() / 4.0;
  m(0, 1) = Complex(0, 0.1);
  EXPECT_THROW(ChoiState{m}, std::invalid_argument);
}

TEST(ChoiState, PhysicalityFlags) {
  EXPECT_TRUE(choi_from_unitary(hadamard()).is_physical());
  Mat4 m = Mat4::Zero();
  m(0, 0) = 1.0;  // maps everything to |0><0| only for input |0>: not trace preserving
  EXPECT_FALSE(ChoiState(m).is_physical());
}

}  // namespace
}  // namespace spamtomo
