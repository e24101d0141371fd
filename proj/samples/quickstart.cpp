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

// Simulates one device, fits it with the five-state model, then reconstructs a noisy
// Hadamard gate through the fitted state/measurement frame.

#include "spamtomo/data_sim.hpp"
#include "spamtomo/estimators.hpp"
#include "spamtomo/process_tomo.hpp"

#include <iostream>

int main() {
  using namespace spamtomo;

  GroundTruthConfig truth_cfg;
  truth_cfg.seed = 42;
  const SpamParameterSet truth = make_ground_truth(truth_cfg, Method::C);
  const CountDataset data = sample_static(truth, 1000000, 7);

  const FitResult f = fit(Method::C, data, FitOptions{}, InitStrategy::near_ideal(3));
  const ReconstructionReport raw = reconstruction_report(f.estimate, truth);
  const ReconstructionReport aligned = reconstruction_report(gauge_align(f.estimate, truth), truth);
  std::cout << "fit converged: " << std::boolalpha << f.converged
            << ", objective " << f.objective_value << '\n'
            << "state 2 infidelity: " << raw.state_infidelity[1]
            << " (gauge aligned: " << aligned.state_infidelity[1] << ")\n";

  const ChoiState gate = hadamard_truth(EvolutionParams{1.0, 100.0});
  const CountDataset gate_data = sample_process(truth, gate, 1000000, 11);
  const ChoiState linear = linear_invert(gate_data.frequencies(), f.estimate);
  const MleResult mle = mle_project(linear, 1e6);
  std::cout << "linear estimate min eigenvalue: " << linear.min_eigenvalue() << '\n'
            << "projected estimate min eigenvalue: " << mle.choi.min_eigenvalue()
            << ", max |C_i| " << mle.max_constraint << '\n'
            << "process fidelity to truth: " << process_fidelity(gate, mle.choi) << '\n'
            << "process fidelity to ideal Hadamard: "
            << process_fidelity(choi_from_unitary(hadamard()), mle.choi) << '\n';
}
