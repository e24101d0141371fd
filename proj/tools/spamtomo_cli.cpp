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

// Command-line front end. Exit codes: 0 success, 1 configuration or I/O error, 2 at least one
// fit did not converge (results are still written), 3 an oracle check failed.

#include "spamtomo/experiments.hpp"
#include "spamtomo/oracles.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace spamtomo;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitOracleFailed = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool paper_weights = false;
  std::optional<int> workers;
};

SweepConfig resolve_config(const GlobalOptions& g) {
  SweepConfig cfg = g.config.empty() ? SweepConfig{} : load_config_file(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.paper_weights) cfg.fit.weights = WeightConvention::Paper;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.out.empty()) cfg.output = g.out;
  cfg.validate();
  return cfg;
}

std::string json_path_for(const std::string& csv) {
  std::filesystem::path p(csv);
  p.replace_extension(".json");
  return p.string();
}

int finish_sweep(const SweepConfig& cfg, const SweepResult& res, const std::string& kind) {
  if (cfg.output.empty()) {
    write_csv(std::cout, res.rows);
  } else {
    emit_csv(res.rows, cfg.output);
    emit_json(sweep_document(cfg, res, kind), json_path_for(cfg.output));
    std::cerr << "wrote " << res.rows.size() << " rows to " << cfg.output << " and "
              << json_path_for(cfg.output) << '\n';
  }
  if (res.non_converged > 0) {
    std::cerr << res.non_converged << " fit(s) did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

std::ostream& output_stream(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-consistent SPAM and process tomography of a qubit on synthetic data"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the configuration)");
  app.add_option("--out", g.out, "output path (CSV for sweeps; JSON is written next to it)");
  app.add_flag("--paper-weights", g.paper_weights,
               "weight residuals as (N p (1-p))^(-1/4) instead of the chi-square convention");
  app.add_option("--workers", g.workers, "worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  auto* spam = app.add_subcommand("spam-sweep", "state/measurement convergence sweep");
  auto* process = app.add_subcommand("process-sweep", "Hadamard reconstruction sweep");

  auto* simulate = app.add_subcommand("simulate", "sample one dataset and write it as CSV");
  std::string sim_method = "C";
  std::string sim_shots = "1e6";
  int sim_run = 0;
  simulate->add_option("--method", sim_method, "A, B or C")->check(CLI::IsMember({"A", "B", "C"}));
  simulate->add_option("--shots", sim_shots, "shots per cell, e.g. 1000 or 1e6");
  simulate->add_option("--run", sim_run, "run index used to derive the seeds")
      ->check(CLI::NonNegativeNumber);

  auto* fit_cmd = app.add_subcommand("fit", "fit one dataset CSV");
  std::string fit_data, fit_method = "C", fit_init, fit_truth;
  std::optional<int> fit_restarts;
  fit_cmd->add_option("--data", fit_data, "dataset CSV written by `simulate`")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--method", fit_method, "A, B or C")->check(CLI::IsMember({"A", "B", "C"}));
  fit_cmd->add_option("--init", fit_init, "near_truth, near_ideal or ignorant")
      ->check(CLI::IsMember({"near_truth", "near_ideal", "ignorant"}));
  fit_cmd->add_option("--truth", fit_truth, "truth JSON (needed by near_truth; adds a report)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--restarts", fit_restarts, "number of starting points")
      ->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "run the brute-force verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*spam) {
      const SweepConfig cfg = resolve_config(g);
      return finish_sweep(cfg, run_spam_sweep(cfg), "spam-sweep");
    }
    if (*process) {
      const SweepConfig cfg = resolve_config(g);
      return finish_sweep(cfg, run_process_sweep(cfg), "process-sweep");
    }
    if (*simulate) {
      SweepConfig cfg = resolve_config(g);
      const Method m = parse_method(sim_method);
      const std::int64_t shots = detail::parse_count("--shots", sim_shots);
      const PointSeeds seeds = PointSeeds::of(cfg.seed, m, shots, sim_run);
      GroundTruthConfig tc = cfg.truth;
      tc.seed = seeds.truth;
      const SpamParameterSet truth = make_ground_truth(tc, m);
      const CountDataset d =
          m == Method::B
              ? sample_timeseries(truth, default_time_grid(tc.t2, cfg.time_points, cfg.time_span_t2),
                                  shots, seeds.data)
              : sample_static(truth, shots, seeds.data);
      std::ofstream file;
      write_dataset(output_stream(g.out, file), d);
      if (!g.out.empty()) {
        std::filesystem::path tp(g.out);
        tp.replace_extension(".truth.json");
        emit_json(to_json(truth), tp.string());
        std::cerr << "wrote " << g.out << " and " << tp.string() << '\n';
      }
      return kExitOk;
    }
    if (*fit_cmd) {
      const SweepConfig cfg = resolve_config(g);
      const Method m = parse_method(fit_method);
      std::ifstream in(fit_data);
      if (!in) throw IoError("cannot open '" + fit_data + "'");
      const CountDataset data = read_dataset(in, fit_data);
      std::optional<SpamParameterSet> truth;
      if (!fit_truth.empty()) {
        try {
          truth = spam_from_json(read_json(fit_truth));
        } catch (const std::invalid_argument& e) {
          throw IoError("'" + fit_truth + "': " + e.what());
        } catch (const nlohmann::json::exception& e) {
          throw IoError("'" + fit_truth + "': " + e.what());
        }
      }
      InitStrategy init;
      init.kind = fit_init.empty() ? cfg.fit.init.at(m) : parse_init_kind(fit_init);
      init.delta = cfg.fit.near_truth_delta;
      init.seed = derive_seed(cfg.seed, {hash_label("fit")});
      if (init.kind == InitKind::NearTruth) {
        if (!truth) throw ConfigError("--init near_truth needs --truth");
        init.truth = *truth;
      }
      FitOptions opt = cfg.fit.options(m);
      if (fit_restarts) opt.budget.n_restarts = *fit_restarts;
      const FitResult f = fit(m, data, opt, init);
      nlohmann::json doc = to_json(f);
      doc["pack_ordering"] = std::string(kPackOrdering);
      if (truth) {
        const ReconstructionReport rep = reconstruction_report(f.estimate, *truth);
        doc["report"] = {{"state_infidelity", rep.state_infidelity},
                         {"alpha_deg", rep.alpha_deg},
                         {"eps0_error", rep.eps0_error},
                         {"eps1_error", rep.eps1_error}};
      }
      std::ofstream file;
      output_stream(g.out, file) << doc.dump(2) << '\n';
      return f.converged ? kExitOk : kExitNotConverged;
    }
    if (*oracle) {
      const std::uint64_t seed = g.seed.value_or(1);
      bool all = true;
      for (const auto& o : run_oracles(seed)) {
        std::cout << format_outcome(o) << std::endl;
        all = all && o.passed;
      }
      return all ? kExitOk : kExitOracleFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
