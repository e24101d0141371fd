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

#include "spamtomo/experiments.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <set>
#include <sstream>

namespace spamtomo {
namespace {

SweepConfig parse(const std::string& text) {
  std::istringstream in(text);
  return load_config(in, "test.ini");
}

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.methods = {Method::C};
  cfg.n_values = {1000, 100000};
  cfg.n_spam_values = {1000000};
  cfg.runs_per_point = 1;
  cfg.seed = 42;
  cfg.workers = 2;
  cfg.process.n_values = {100000};
  return cfg;
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream out;
  write_csv(out, r.rows);
  return out.str();
}

// ---------------------------------------------------------------------------------------------
// Configuration.

TEST(Config, DefaultsAreValid) {
  const SweepConfig cfg = parse("");
  EXPECT_EQ(cfg.runs_per_point, 10);
  EXPECT_EQ(cfg.methods.size(), 3u);
  EXPECT_EQ(cfg.n_values.front(), 1000);
  EXPECT_EQ(cfg.n_values.back(), 10000000);
  EXPECT_EQ(cfg.fit.restarts.at(Method::B), 4);
  EXPECT_EQ(cfg.fit.init.at(Method::A), InitKind::NearTruth);
}

TEST(Config, ParsesEverySection) {
  const SweepConfig cfg = parse(
      "; comment\n"
      "[sweep]\nmethods = B, C\nn_values = 1e3, 1e5\nn_spam_values = 1e6\n"
      "runs_per_point = 3\nseed = 17\nworkers = 2\noutput = out.csv\n"
      "[truth]\nsystematic_angle_deg = 5\nstochastic_scale = 0.01\nomega_rot = 2\nt2 = 20\n"
      "[timeseries]\npoints = 30\nspan_t2 = 1.5\n"
      "[fit]\nweights = paper\nmax_evaluations = 100\ntolerance = 1e-9\nrestarts_C = 2\n"
      "init_C = ignorant\nnear_truth_delta = 0.01\nball_penalty = 0\n"
      "[process]\nn_values = 1e4, 1e5\nomega_rot = 0.5\nt2 = 50\nouter_iterations = 3\n"
      "mu0 = 5\neta = 4\ninner_max_evaluations = 200\n");
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::B, Method::C}));
  EXPECT_EQ(cfg.n_values, (std::vector<std::int64_t>{1000, 100000}));
  EXPECT_EQ(cfg.runs_per_point, 3);
  EXPECT_EQ(cfg.seed, 17u);
  EXPECT_EQ(cfg.output, "out.csv");
  EXPECT_EQ(cfg.truth.t2, 20.0);
  EXPECT_EQ(cfg.time_points, 30);
  EXPECT_EQ(cfg.fit.weights, WeightConvention::Paper);
  EXPECT_EQ(cfg.fit.restarts.at(Method::C), 2);
  EXPECT_EQ(cfg.fit.init.at(Method::C), InitKind::Ignorant);
  EXPECT_EQ(cfg.fit.ball_penalty, 0.0);
  EXPECT_EQ(cfg.process.n_values, (std::vector<std::int64_t>{10000, 100000}));
  EXPECT_EQ(cfg.process.auglag.outer_iterations, 3);
  EXPECT_EQ(cfg.process.auglag.inner.max_evaluations, 200);
  EXPECT_EQ(cfg.process.hadamard.omega_rot, 0.5);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse("[sweep]\nrunz = 3\n"), ConfigError);
  EXPECT_THROW(parse("[plot]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse("[sweep]\nn_values = 1e4, 1e3\n"), ConfigError);
  EXPECT_THROW(parse("[sweep]\nruns_per_point = 0\n"), ConfigError);
  EXPECT_THROW(parse("[sweep]\nruns_per_point = 2.5\n"), ConfigError);
  EXPECT_THROW(parse("[sweep]\nmethods = D\n"), ConfigError);
  EXPECT_THROW(parse("[sweep]\nseed = -1\n"), ConfigError);
  EXPECT_THROW(parse("[truth]\nt2 = abc\n"), ConfigError);
  EXPECT_THROW(parse("[fit]\nweights = unit\n"), ConfigError);
  EXPECT_THROW(parse("[fit]\ninit_B = lucky\n"), ConfigError);
  EXPECT_THROW(parse("[process]\neta = 0.5\n"), ConfigError);
  EXPECT_THROW(parse("[sweep\n"), ConfigError);
}

TEST(Config, ErrorsNameTheOrigin) {
  try {
    parse("[sweep]\nrunz = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.ini"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("runz"), std::string::npos);
  }
  EXPECT_THROW(load_config_file("/nonexistent/sweep.ini"), IoError);
}

TEST(Config, SampleFileLoads) {
  const SweepConfig cfg = load_config_file(SPAMTOMO_SAMPLE_INI);
  const SweepConfig def;
  EXPECT_EQ(cfg.n_values, def.n_values);
  EXPECT_EQ(cfg.runs_per_point, def.runs_per_point);
  EXPECT_EQ(to_json(cfg), to_json(def));
}

// ---------------------------------------------------------------------------------------------
// Serialization.

TEST(Csv, EmptyTableIsHeaderOnly) {
  std::ostringstream out;
  write_csv(out, {});
  EXPECT_EQ(out.str(), "method,n_spam,n_shots,run,seed,metric,value\n");
}

TEST(Csv, RowsSortedWithFullPrecision) {
  std::vector<ResultRow> rows{{"C", 1000, std::nullopt, 1, 7, "x", 0.1},
                              {"B", 1000, 50, 0, 8, "y", 1.0 / 3.0}};
  std::ostringstream out;
  write_csv(out, rows);
  EXPECT_EQ(out.str(),
            "method,n_spam,n_shots,run,seed,metric,value\n"
            "B,1000,50,0,8,y,0.33333333333333331\n"
            "C,1000,,1,7,x,0.10000000000000001\n");
}

TEST(Csv, UnwritablePathIsIoError) {
  EXPECT_THROW(emit_csv({}, "/nonexistent/dir/out.csv"), IoError);
  EXPECT_THROW(emit_json(nlohmann::json::object(), "/nonexistent/dir/out.json"), IoError);
}

TEST(Json, SpamRoundTrip) {
  for (Method m : {Method::A, Method::B, Method::C}) {
    GroundTruthConfig cfg;
    cfg.seed = 3;
    const SpamParameterSet t = make_ground_truth(cfg, m);
    const nlohmann::json j = to_json(t);
    const SpamParameterSet back = spam_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.method, t.method);
    ASSERT_EQ(back.states.size(), t.states.size());
    for (std::size_t i = 0; i < t.states.size(); ++i) EXPECT_EQ(back.states[i].r, t.states[i].r);
    for (std::size_t k = 0; k < t.measurements.size(); ++k)
      EXPECT_EQ(back.measurements[k].direction, t.measurements[k].direction);
    EXPECT_EQ(back.noise.eps0, t.noise.eps0);
    EXPECT_EQ(back.noise.eps1, t.noise.eps1);
    EXPECT_EQ(back.evolution.has_value(), t.evolution.has_value());
    if (t.evolution) EXPECT_EQ(back.evolution->t2, t.evolution->t2);
  }
}

TEST(Json, InfiniteT2IsOmitted) {
  GroundTruthConfig cfg;
  SpamParameterSet t = make_ground_truth(cfg, Method::B);
  t.evolution->t2 = std::numeric_limits<double>::infinity();
  const nlohmann::json j = to_json(t);
  EXPECT_FALSE(j["evolution"].contains("t2"));
  EXPECT_TRUE(std::isinf(spam_from_json(j).evolution->t2));
}

TEST(Json, RejectsForeignOrdering) {
  GroundTruthConfig cfg;
  nlohmann::json j = to_json(make_ground_truth(cfg, Method::C));
  j["pack_ordering"] = "other";
  EXPECT_THROW(spam_from_json(j), std::invalid_argument);
}

TEST(Json, ChoiRoundTrip) {
  const ChoiState h = choi_from_unitary(hadamard());
  const nlohmann::json j = to_json(h);
  ASSERT_EQ(j.size(), 16u);
  EXPECT_EQ(choi_from_json(nlohmann::json::parse(j.dump())).matrix(), h.matrix());
  EXPECT_THROW(choi_from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST(Dataset, CsvRoundTrip) {
  GroundTruthConfig cfg;
  const SpamParameterSet b = make_ground_truth(cfg, Method::B);
  const SpamParameterSet c = make_ground_truth(cfg, Method::C);
  for (const CountDataset& d :
       {sample_timeseries(b, default_time_grid(40.0, 7), 1000, 1), sample_static(c, 1000, 2)}) {
    std::stringstream s;
    write_dataset(s, d);
    const CountDataset back = read_dataset(s);
    EXPECT_EQ(back.layout, d.layout);
    EXPECT_EQ(back.counts, d.counts);
    EXPECT_EQ(back.times, d.times);
    EXPECT_EQ(back.shots, d.shots);
  }
}

TEST(Dataset, MalformedInputIsIoError) {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return read_dataset(in, "d.csv");
  };
  const std::string h = std::string(kDatasetHeader) + "\n";
  EXPECT_THROW(read(""), IoError);
  EXPECT_THROW(read(h), IoError);
  EXPECT_THROW(read(h + "static,0,0,,,10,3,9\n"), IoError);
  EXPECT_THROW(read(h + "static,0,0,,,10,11\n"), IoError);
  EXPECT_THROW(read(h + "static,0,0,,,10,1\nstatic,0,0,,,10,1\n"), IoError);
  EXPECT_THROW(read(h + "static,0,0,,,10,1\nstatic,1,1,,,10,1\n"), IoError);
  EXPECT_THROW(read(h + "diagonal,0,0,,,10,1\n"), IoError);
  EXPECT_NO_THROW(read(h + "static,0,0,,,10,1\n"));
}

// ---------------------------------------------------------------------------------------------
// Execution.

TEST(ParallelFor, RunsEveryJobOnce) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](int k) { ++hits[k]; });
  for (int h : hits) EXPECT_EQ(h, 1);
  parallel_for(0, 4, [&](int) { FAIL(); });
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 3, [](int k) {
                 if (k == 7) throw std::runtime_error("job 7");
               }),
               std::runtime_error);
}

TEST(Seeds, PointsAreIndependent) {
  std::set<std::uint64_t> data;
  for (Method m : {Method::A, Method::B, Method::C})
    for (std::int64_t n : {1000, 10000})
      for (int r = 0; r < 3; ++r) data.insert(PointSeeds::of(1, m, n, r).data);
  EXPECT_EQ(data.size(), 18u);
  EXPECT_EQ(PointSeeds::of(1, Method::A, 10, 2).truth, PointSeeds::of(1, Method::C, 1000000, 2).truth);
  EXPECT_NE(PointSeeds::of(1, Method::A, 10, 2).truth, PointSeeds::of(1, Method::A, 10, 3).truth);
  EXPECT_NE(PointSeeds::of(1, Method::A, 10, 2).data, PointSeeds::of(2, Method::A, 10, 2).data);
}

TEST(SpamSweep, RowsAndDeterminism) {
  const SweepConfig cfg = small_config();
  const SweepResult a = run_spam_sweep(cfg);
  SweepConfig serial = cfg;
  serial.workers = 1;
  const SweepResult b = run_spam_sweep(serial);
  EXPECT_EQ(csv_of(a), csv_of(b));
  EXPECT_EQ(a.fits.size(), 2u);
  std::map<std::pair<std::int64_t, std::string>, int> seen;
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.method, "C");
    EXPECT_FALSE(r.n_shots.has_value());
    ++seen[{r.n_spam, r.metric}];
  }
  for (const auto& [key, count] : seen) EXPECT_EQ(count, 1) << key.second;
  EXPECT_EQ(seen.count({1000, "infidelity_state2"}), 1u);
  EXPECT_EQ(seen.count({100000, "aligned_infidelity_state2"}), 1u);
  EXPECT_EQ(seen.count({1000, "alpha_E2_deg"}), 1u);
  EXPECT_EQ(seen.count({1000, "eps0_error"}), 1u);
}

TEST(SpamSweep, DocumentEchoesConfig) {
  const SweepConfig cfg = small_config();
  const SweepResult r = run_spam_sweep(cfg);
  const nlohmann::json doc = sweep_document(cfg, r, "spam-sweep");
  EXPECT_EQ(doc["pack_ordering"], kPackOrdering);
  EXPECT_EQ(doc["config"]["sweep"]["seed"], 42);
  EXPECT_EQ(doc["fits"].size(), 2u);
  EXPECT_TRUE(doc["fits"][0]["estimate"]["parameters"].is_array());
}

TEST(ProcessSweep, RowsAndReferenceLine) {
  const SweepConfig cfg = small_config();
  const SweepResult r = run_process_sweep(cfg);
  EXPECT_EQ(csv_of(r), csv_of(run_process_sweep(cfg)));
  const double reference =
      process_fidelity(hadamard_truth(cfg.process.hadamard), choi_from_unitary(hadamard()));
  int found = 0;
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.n_shots.has_value());
    EXPECT_EQ(*row.n_shots, 100000);
    if (row.metric == "fidelity_truth_ideal") EXPECT_EQ(row.value, reference);
    if (row.metric == "fidelity_est_truth") {
      ++found;
      EXPECT_GT(row.value, 0.95);
      EXPECT_LE(row.value, 1.0 + 1e-12);
    }
    if (row.metric == "max_constraint") EXPECT_LE(row.value, 1e-6);
  }
  EXPECT_EQ(found, 1);
}

}  // namespace
}  // namespace spamtomo
