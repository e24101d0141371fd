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

#include "spamtomo/data_sim.hpp"
#include "spamtomo/spam_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace spamtomo {
namespace {

SpamParameterSet ideal(Method m, double eps = 0.0) {
  const ModelShape s = shape_of(m);
  const auto sd = ideal_state_directions(s.n_states);
  const auto md = ideal_measurement_directions(s.n_measurements);
  SpamParameterSet p;
  p.method = m;
  p.states.push_back(StateParams::plus_z());
  p.states.push_back(StateParams::planar_x(1.0, 0.0));
  for (int i = 2; i < s.n_states; ++i) p.states.push_back(StateParams::general(sd[i]));
  p.measurements.push_back(MeasurementParams::plus_z());
  for (int j = 1; j < s.n_measurements; ++j) p.measurements.push_back(MeasurementParams::general(md[j]));
  p.noise = {eps, eps};
  if (m == Method::B) p.evolution = EvolutionParams{1.0, 40.0};
  return p;
}

SpamParameterSet truth(Method m, std::uint64_t seed) {
  GroundTruthConfig cfg;
  cfg.seed = seed;
  return make_ground_truth(cfg, m);
}

TEST(Method, ParseAndPrint) {
  for (Method m : {Method::A, Method::B, Method::C}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("D"), std::invalid_argument);
}

TEST(Shape, ParameterCounts) {
  EXPECT_EQ(shape_of(Method::A).n_params, 12);
  EXPECT_EQ(shape_of(Method::B).n_params, 18);
  EXPECT_EQ(shape_of(Method::C).n_params, 25);
}

TEST(Realize, NoiselessXMeasurementIsPlusProjector) {
  const RealizedSpam r = realize(ideal(Method::C));
  Mat2 plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  EXPECT_LT(detail::max_abs(Mat2(r.effects[1].matrix() - plus)), 1e-15);
  EXPECT_LT(detail::max_abs(Mat2(r.states[1].matrix() - plus)), 1e-15);
}

TEST(Realize, NoisyZReadout) {
  const RealizedSpam r = realize(ideal(Method::C, 0.05));
  Mat2 expected = Mat2::Zero();
  expected(0, 0) = 0.95;
  expected(1, 1) = 0.05;
  EXPECT_LT(detail::max_abs(Mat2(r.effects[0].matrix() - expected)), 1e-15);
}

TEST(Realize, RejectsUnphysical) {
  SpamParameterSet p = ideal(Method::C);
  p.states[2].r = Vec3(0, 1.1, 0);
  EXPECT_THROW(realize(p), std::invalid_argument);
  p = ideal(Method::C);
  p.noise.eps0 = 0.6;
  EXPECT_THROW(realize(p), std::invalid_argument);
}

TEST(ValidateShape, RejectsWrongLayouts) {
  SpamParameterSet p = ideal(Method::C);
  p.states.pop_back();
  EXPECT_THROW(validate_shape(p), std::invalid_argument);
  p = ideal(Method::C);
  p.states[1].kind = StateKind::General;
  EXPECT_THROW(validate_shape(p), std::invalid_argument);
  p = ideal(Method::B);
  p.evolution.reset();
  EXPECT_THROW(validate_shape(p), std::invalid_argument);
}

TEST(Pack, MethodCRoundTrip) {
  const SpamParameterSet t = truth(Method::C, 3);
  const Eigen::VectorXd x = pack(t);
  ASSERT_EQ(x.size(), 25);
  const SpamParameterSet back = unpack(Method::C, x);
  EXPECT_EQ(pack(back), x);
  for (std::size_t i = 0; i < t.states.size(); ++i) EXPECT_EQ(back.states[i].r, t.states[i].r);
  for (std::size_t j = 0; j < t.measurements.size(); ++j)
    EXPECT_EQ(back.measurements[j].direction, t.measurements[j].direction);
}

TEST(Pack, MethodAAnglesGiveUnitVectors) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int c = 0; c < 20; ++c) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
    for (int k = 0; k < 12; ++k) x(k) = u(rng);
    x(7) = 0.01;  // eps0
    x(8) = 0.02;  // eps1
    const SpamParameterSet p = unpack(Method::A, x);
    EXPECT_NEAR(p.states[1].r.norm(), 1.0, 1e-12);
    EXPECT_NEAR(p.measurements[1].direction.norm(), 1.0, 1e-12);
    EXPECT_NEAR(p.measurements[2].direction.norm(), 1.0, 1e-12);
    EXPECT_EQ(p.measurements[1].direction.y(), 0.0);
  }
}

TEST(Pack, MethodBEndsWithEvolution) {
  SpamParameterSet p = ideal(Method::B);
  p.evolution = EvolutionParams{1.7, 33.0};
  const Eigen::VectorXd x = pack(p);
  ASSERT_EQ(x.size(), 18);
  EXPECT_EQ(x(16), 1.7);
  EXPECT_EQ(x(17), 33.0);
}

TEST(Pack, RejectsWrongLength) {
  EXPECT_THROW(unpack(Method::C, Eigen::VectorXd::Zero(24)), std::invalid_argument);
}

TEST(Pack, MethodARequiresUnitVectors) {
  SpamParameterSet p = ideal(Method::A);
  p.states[1].r = Vec3(0.9, 0, 0);
  EXPECT_THROW(pack(p), std::invalid_argument);
  EXPECT_NO_THROW(pack(restrict_to_model(p, Method::A)));
}

TEST(PredictStatic, IdealValues) {
  const Eigen::MatrixXd p = predict_static(ideal(Method::C));
  EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(p(3, 0), 0.0);
}

TEST(PredictStatic, MatchesBornRuleOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SpamParameterSet t = truth(Method::C, seed);
    const Eigen::MatrixXd p = predict_static(t);
    const RealizedSpam r = realize(t);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        EXPECT_NEAR(p(i, j), born_probability(r.states[i], r.effects[j]), 1e-14);
  }
}

TEST(PredictStatic, RejectsTimeSeriesModel) {
  EXPECT_THROW(predict_static(ideal(Method::B)), std::invalid_argument);
}

TEST(PredictTimeseries, TimeZeroIsStaticTable) {
  const SpamParameterSet b = truth(Method::B, 4);
  const auto tables = predict_timeseries(b, {0.0});
  EXPECT_LT((tables[0] - static_probabilities(b)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PredictTimeseries, ZStateRowIsConstant) {
  const SpamParameterSet b = truth(Method::B, 5);
  const auto tables = predict_timeseries(b, default_time_grid(40.0));
  for (const auto& t : tables)
    EXPECT_LT((t.row(0) - tables[0].row(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PredictTimeseries, MatchesEvolveStateOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SpamParameterSet b = truth(Method::B, seed);
    const std::vector<double> times{0.0, 0.3, 2.0, 17.5, 80.0};
    const auto tables = predict_timeseries(b, times);
    const RealizedSpam r = realize(b);
    for (std::size_t k = 0; k < times.size(); ++k)
      for (int i = 0; i < 4; ++i) {
        const DensityMatrix rho = evolve_state(r.states[i], times[k], *b.evolution);
        for (int j = 0; j < 3; ++j)
          EXPECT_NEAR(tables[k](i, j), born_probability(rho, r.effects[j]), 1e-12);
      }
  }
}

TEST(ProjectPhysical, ClampsAndRescales) {
  SpamParameterSet p = ideal(Method::C);
  p.states[2].r = Vec3(0, 1.2, 0);
  p.noise.eps0 = -0.01;
  const SpamParameterSet q = project_physical(p);
  EXPECT_NEAR(q.states[2].r.norm(), 1.0, 1e-15);
  EXPECT_LT((q.states[2].r.normalized() - Vec3(0, 1, 0)).norm(), 1e-15);
  EXPECT_EQ(q.noise.eps0, 0.0);
}

TEST(ProjectPhysical, IdempotentOnPhysicalSets) {
  const SpamParameterSet t = truth(Method::C, 9);
  EXPECT_EQ(pack(project_physical(t)), pack(t));
  const SpamParameterSet once = project_physical(truth(Method::B, 2));
  EXPECT_EQ(pack(project_physical(once)), pack(once));
}

TEST(ParameterBounds, EpsilonBoxes) {
  const auto [lo, hi] = parameter_bounds(Method::C);
  EXPECT_EQ(lo(11), 0.0);
  EXPECT_EQ(hi(11), kEpsilonMax);
  const auto [lb, hb] = parameter_bounds(Method::B);
  EXPECT_EQ(lb(17), kMinT2);
  EXPECT_TRUE(std::isinf(hb(16)));
}

}  // namespace
}  // namespace spamtomo
