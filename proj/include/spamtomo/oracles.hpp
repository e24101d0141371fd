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

// Brute-force verification routines. Each compares the library against an independent
// computation (closed form vs integrator, forward map vs inversion, random search vs
// optimizer) and reports the worst discrepancy it saw.

#pragma once

#include "spamtomo/data_sim.hpp"
#include "spamtomo/estimators.hpp"
#include "spamtomo/process_tomo.hpp"
#include "spamtomo/qubit.hpp"
#include "spamtomo/random.hpp"
#include "spamtomo/spam_model.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace spamtomo {

struct OracleOutcome {
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;
};

inline std::string format_outcome(const OracleOutcome& o) {
  std::ostringstream s;
  s << (o.passed ? "PASS" : "FAIL") << "  " << o.name << "  (" << std::fixed
    << std::setprecision(2) << o.seconds << " s)  " << o.detail;
  return s.str();
}

/// Half the trace norm of a - b.
template <int D>
double trace_distance(const Eigen::Matrix<Complex, D, D>& a, const Eigen::Matrix<Complex, D, D>& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Complex, D, D>> es(detail::hermitian_part(
      Eigen::Matrix<Complex, D, D>(a - b)));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

inline EvolutionParams random_evolution(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> omega(0.2, 3.0), t2(0.5, 100.0);
  return {omega(rng), t2(rng)};
}

}  // namespace detail

/// Closed-form z-axis evolution against the RK4 integrator, elementwise.
inline double lindblad_max_error(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const EvolutionParams ev = detail::random_evolution(rng);
    const double t = std::uniform_real_distribution<double>(0.0, 5.0 * ev.t2)(rng);
    const DensityMatrix rho = random_density(rng);
    const Mat2 a = evolve_state(rho, t, ev).matrix();
    const Mat2 b = lindblad_integrate(rho, t, Vec3::UnitZ(), ev).matrix();
    worst = std::max(worst, detail::max_abs(Mat2(a - b)));
  }
  return worst;
}

inline OracleOutcome lindblad_oracle(int cases = 100, std::uint64_t seed = 11) {
  detail::Stopwatch w;
  const double err = lindblad_max_error(cases, seed);
  OracleOutcome o{"closed-form vs integrated dephasing", false, w.seconds(), ""};
  o.passed = err <= 1e-9 && o.seconds < 1.0;
  o.detail = "max elementwise error " + detail::sci(err) + " over " + std::to_string(cases) +
             " cases (limit 1e-9, < 1 s)";
  return o;
}

struct IdentifiabilityReport {
  double max_parameter_error = 0.0;  ///< |pack(fit) - pack(truth)|_inf
  double aligned_parameter_error = 0.0;  ///< same after moving the fit along its gauge orbit
  int null_directions = 0;
  double objective = 0.0;
};

/// Method C fitted to the noise-free table round(N p) with N = 1e12, from the ideal start.
inline IdentifiabilityReport identifiability_check(std::uint64_t seed, std::int64_t shots = 1000000000000LL) {
  GroundTruthConfig cfg;
  cfg.seed = seed;
  const SpamParameterSet truth = make_ground_truth(cfg, Method::C);
  const CountDataset data = expected_static(truth, shots);
  FitOptions opt;
  const FitResult f = fit(Method::C, data, opt, InitStrategy::near_ideal(seed));
  IdentifiabilityReport rep;
  const Eigen::VectorXd xt = pack(truth);
  rep.max_parameter_error = (f.parameters - xt).cwiseAbs().maxCoeff();
  rep.aligned_parameter_error = (pack(gauge_align(f.estimate, truth)) - xt).cwiseAbs().maxCoeff();
  rep.null_directions = null_directions(SpamObjective(Method::C, data), f.parameters);
  rep.objective = f.objective_value;
  return rep;
}

inline OracleOutcome identifiability_oracle(std::uint64_t seed = 1) {
  detail::Stopwatch w;
  const IdentifiabilityReport r = identifiability_check(seed);
  OracleOutcome o{"method C recovery from exact probabilities", false, w.seconds(), ""};
  o.passed = r.max_parameter_error <= 1e-6 && o.seconds < 30.0;
  o.detail = "max parameter error " + detail::sci(r.max_parameter_error) +
             " (limit 1e-6); after gauge alignment " + detail::sci(r.aligned_parameter_error) +
             "; flat Jacobian directions " + std::to_string(r.null_directions);
  return o;
}

struct RoundTripReport {
  double max_linear_error = 0.0;  ///< Frobenius, linear inversion vs truth
  double max_mle_distance = 0.0;  ///< trace distance, MLE output vs its physical input
};

/// Random physical channels seen through random SPAM: forward probabilities, linear inversion,
/// then the likelihood projection of the (already physical) truth.
inline RoundTripReport process_round_trip(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RoundTripReport rep;
  for (int c = 0; c < cases; ++c) {
    GroundTruthConfig cfg;
    cfg.seed = rng();
    const SpamParameterSet spam = make_ground_truth(cfg, Method::C);
    const ChoiState truth = random_choi(rng);
    const Eigen::MatrixXd p = process_probabilities(spam, truth);
    const ChoiState rec = linear_invert(p, spam);
    rep.max_linear_error = std::max(rep.max_linear_error, (rec.matrix() - truth.matrix()).norm());
    const MleResult mle = mle_project(truth, 1e6);
    rep.max_mle_distance =
        std::max(rep.max_mle_distance, trace_distance<4>(mle.choi.matrix(), truth.matrix()));
  }
  return rep;
}

inline OracleOutcome process_round_trip_oracle(int cases = 100, std::uint64_t seed = 6) {
  detail::Stopwatch w;
  const RoundTripReport r = process_round_trip(cases, seed);
  OracleOutcome o{"process round trip", false, w.seconds(), ""};
  o.passed = r.max_linear_error <= 1e-8 && r.max_mle_distance <= 1e-6;
  o.detail = "linear inversion " + detail::sci(r.max_linear_error) +
             " Frobenius (limit 1e-8); projection moved physical input by " +
             detail::sci(r.max_mle_distance) + " (limit 1e-6)";
  return o;
}

struct FeasibilityReport {
  double max_constraint = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  int inner_flags = 0;  ///< projections whose inner minimizer reported non-convergence
};

inline FeasibilityReport auglag_feasibility(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeasibilityReport rep;
  for (int c = 0; c < cases; ++c) {
    const ChoiState in = random_unphysical_choi(rng);
    const MleResult r = mle_project(in, 1e6);
    rep.max_constraint = std::max(rep.max_constraint, r.max_constraint);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, r.choi.min_eigenvalue());
    rep.inner_flags += r.converged ? 0 : 1;
  }
  return rep;
}

inline OracleOutcome auglag_oracle(int cases = 100, std::uint64_t seed = 7) {
  detail::Stopwatch w;
  const FeasibilityReport r = auglag_feasibility(cases, seed);
  OracleOutcome o{"augmented Lagrangian feasibility", false, w.seconds(), ""};
  o.passed = r.max_constraint <= 1e-6 && r.min_eigenvalue >= -1e-8;
  o.detail = "max |C_i| " + detail::sci(r.max_constraint) + " (limit 1e-6), min eigenvalue " +
             detail::sci(r.min_eigenvalue) + " (limit -1e-8), inner non-convergence flags " +
             std::to_string(r.inner_flags) + "/" + std::to_string(cases);
  return o;
}

struct RandomSearchReport {
  double projected_nll = 0.0;
  double best_candidate_nll = std::numeric_limits<double>::infinity();
  double min_eigenvalue = 0.0;
};

/// A physical channel pushed slightly out of the cone, projected, and compared with random
/// feasible candidates: convex mixtures of the original channel with random channels.
inline RandomSearchReport mle_random_search(int candidates, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ChoiState base = random_choi(rng);
  Eigen::Vector4cd v;
  for (int k = 0; k < 4; ++k)
    v(k) = Complex(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
  v.normalize();
  const Mat4 kick = 0.05 * (v * v.adjoint() - Mat4::Identity() / 4.0);
  const ChoiState in(detail::hermitian_part(Mat4(base.matrix() + kick)));
  const double shots = 1e6;
  const MleResult r = mle_project(in, shots);
  RandomSearchReport rep;
  rep.projected_nll = r.nll;
  rep.min_eigenvalue = r.choi.min_eigenvalue();
  std::uniform_real_distribution<double> weight(0.0, 0.2);
  for (int c = 0; c < candidates; ++c) {
    const double s = c == 0 ? 0.0 : weight(rng);
    const Mat4 cand = (1.0 - s) * base.matrix() + s * random_choi(rng).matrix();
    rep.best_candidate_nll =
        std::min(rep.best_candidate_nll, process_nll(cholesky_from_choi(cand), in, shots));
  }
  return rep;
}

inline OracleOutcome mle_random_search_oracle(int candidates = 1000, std::uint64_t seed = 8) {
  detail::Stopwatch w;
  const RandomSearchReport r = mle_random_search(candidates, seed);
  OracleOutcome o{"projection beats random feasible candidates", false, w.seconds(), ""};
  o.passed = r.projected_nll <= r.best_candidate_nll && r.min_eigenvalue >= -1e-8;
  o.detail = "projected nll " + detail::sci(r.projected_nll) + ", best of " +
             std::to_string(candidates) + " candidates " + detail::sci(r.best_candidate_nll);
  return o;
}

struct PropertyReport {
  int cases = 0;
  int failures = 0;
  std::string first_failure;
};

/// Randomized qubit invariants: trace and Hermiticity preservation, semigroup composition,
/// fidelity symmetry and range, Choi and Pauli round trips.
inline PropertyReport qubit_properties(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PropertyReport rep;
  auto check = [&](bool ok, const char* what, int c) {
    if (ok) return;
    if (rep.failures++ == 0) rep.first_failure = std::string(what) + " (case " + std::to_string(c) + ")";
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    ++rep.cases;
    const EvolutionParams ev = detail::random_evolution(rng);
    const DensityMatrix rho = random_density(rng);
    const DensityMatrix sigma = random_density(rng);
    const double t1 = 2.0 * ev.t2 * unit(rng), t2 = 2.0 * ev.t2 * unit(rng);

    const Mat2 out = evolve_state(rho, t1, ev).matrix();
    check(std::abs(out.trace() - Complex(1.0)) < 1e-12, "trace preserved", c);
    check(detail::max_abs(Mat2(out - out.adjoint())) < 1e-12, "Hermiticity preserved", c);
    const Mat2 two_steps = evolve_state(evolve_state(rho, t1, ev), t2, ev).matrix();
    const Mat2 one_step = evolve_state(rho, t1 + t2, ev).matrix();
    check(detail::max_abs(Mat2(two_steps - one_step)) < 1e-12, "closed-form semigroup", c);

    const Vec3 axis = random_bloch(rng).normalized();
    const Mat4 s1 = lindblad_propagator(t1, axis, ev);
    const Mat4 s2 = lindblad_propagator(t2, axis, ev);
    const Mat4 s12 = lindblad_propagator(t1 + t2, axis, ev);
    check(detail::max_abs(Mat4(s2 * s1 - s12)) < 1e-9, "propagator semigroup", c);
    const Mat2 sup = apply_superoperator(s1, rho.matrix());
    check(std::abs(sup.trace() - Complex(1.0)) < 1e-10, "propagator trace preserved", c);

    const double f_ab = state_fidelity(rho, sigma), f_ba = state_fidelity(sigma, rho);
    check(std::abs(f_ab - f_ba) < 1e-10, "fidelity symmetric", c);
    check(f_ab >= -1e-12 && f_ab <= 1.0 + 1e-12, "fidelity in [0, 1]", c);
    check(std::abs(state_fidelity(rho, rho) - 1.0) < 1e-8, "self fidelity", c);

    const ChoiState choi = random_choi(rng);
    const Mat4 back = PauliTransferMatrix::from_choi(choi).to_choi().matrix();
    check(detail::max_abs(Mat4(back - choi.matrix())) < 1e-12, "Choi/transfer-matrix round trip", c);
    check(detail::max_abs(Mat4(pauli_reconstruct(pauli_expansion(choi.matrix())) - choi.matrix())) < 1e-12,
          "Pauli expansion round trip", c);
    const Mat2 via_choi = apply_choi_matrix(choi_matrix_from_superoperator(s1), rho.matrix());
    check(detail::max_abs(Mat2(via_choi - sup)) < 1e-12, "superoperator/Choi round trip", c);
    check(choi.partial_trace_deviation() < 1e-10, "random channel trace preserving", c);
  }
  return rep;
}

inline OracleOutcome qubit_property_oracle(int cases = 1000, std::uint64_t seed = 9) {
  detail::Stopwatch w;
  const PropertyReport r = qubit_properties(cases, seed);
  OracleOutcome o{"qubit property suite", false, w.seconds(), ""};
  o.passed = r.failures == 0 && o.seconds < 10.0;
  o.detail = std::to_string(r.cases) + " cases, " + std::to_string(r.failures) + " failures" +
             (r.first_failure.empty() ? "" : ", first: " + r.first_failure) + " (limit < 10 s)";
  return o;
}

/// Every oracle, cheapest first.
inline std::vector<OracleOutcome> run_oracles(std::uint64_t seed = 1) {
  return {lindblad_oracle(100, seed + 10), qubit_property_oracle(1000, seed + 8),
          process_round_trip_oracle(100, seed + 5), auglag_oracle(100, seed + 6),
          mle_random_search_oracle(1000, seed + 7), identifiability_oracle(seed)};
}

}  // namespace spamtomo
