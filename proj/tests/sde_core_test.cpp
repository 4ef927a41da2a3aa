// Copyright 2026 The ceis Authors
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

#include "ceis/sde_core.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ceis/control_basis.hpp"
#include "ceis/error.hpp"

namespace ceis {
namespace {

double zero_drift(double, double) { return 0.0; }
double zero_cost(double) { return 0.0; }

SdeProblem brownian(double eps, double x0, double horizon, double dt) {
  return SdeProblem(zero_drift, eps, zero_cost, x0, horizon, dt);
}

TEST(EulerStep, ZeroDriftZeroDraw) {
  const auto problem = brownian(0.3, 0.0, 1.0, 0.1);
  EXPECT_EQ(euler_step(0.0, 0.0, problem, 0.0, 0.0), 0.0);
}

TEST(EulerStep, DeterministicDecay) {
  const SdeProblem problem([](double x, double) { return -x; }, 0.5, zero_cost, 1.0, 1.0, 0.1);
  EXPECT_NEAR(euler_step(1.0, 0.0, problem, 0.0, 0.0), 0.9, 1e-15);
}

TEST(EulerStep, NoiseScaling) {
  const auto problem = brownian(0.04, 0.0, 1.0, 0.25);
  // sqrt(0.04) * sqrt(0.25) * 1
  EXPECT_NEAR(euler_step(0.0, 0.0, problem, 0.0, 1.0), 0.1, 1e-15);
}

TEST(EulerStep, ControlEntersWithMinusSign) {
  const auto problem = brownian(1.0, 0.0, 1.0, 0.5);
  EXPECT_NEAR(euler_step(0.0, 0.0, problem, 2.0, 0.0), -1.0, 1e-15);
}

TEST(EulerStep, NonFiniteResultThrows) {
  const SdeProblem problem([](double, double) { return std::nan(""); }, 1.0, zero_cost, 0.0, 1.0,
                           0.5);
  try {
    (void)euler_step(0.0, 0.0, problem, 0.0, 0.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIntegrationDiverged);
  }
}

TEST(SdeProblem, RejectsBadParameters) {
  EXPECT_THROW(brownian(0.0, 0.0, 1.0, 0.1), Error);
  EXPECT_THROW(brownian(-1.0, 0.0, 1.0, 0.1), Error);
  EXPECT_THROW(brownian(1.0, 0.0, 0.0, 0.1), Error);
  EXPECT_THROW(brownian(1.0, 0.0, 1.0, -0.1), Error);
  EXPECT_THROW(brownian(1.0, 0.0, 1.0, 0.3), Error);
  EXPECT_NO_THROW(brownian(1.0, 0.0, 1.0, 0.001));
}

TEST(TimeGrid, LastNodeHitsHorizon) {
  for (const auto [horizon, dt] : {std::pair{1.0, 0.001}, std::pair{1.0, 0.01},
                                   std::pair{20.0, 0.001}, std::pair{0.7, 0.1}}) {
    const auto problem = brownian(1.0, 0.0, horizon, dt);
    const double last = problem.grid().time(problem.num_steps());
    EXPECT_LE(std::abs(last - horizon),
              std::abs(std::nextafter(horizon, 2.0 * horizon) - horizon))
        << "T = " << horizon << ", dt = " << dt;
  }
}

TEST(GaussianDraws, IndependentOfGenerationOrder) {
  const auto a = gaussian_draws(7, 3, 50);
  (void)gaussian_draws(7, 2, 50);
  const auto b = gaussian_draws(7, 3, 50);
  EXPECT_EQ(a, b);
  EXPECT_NE(gaussian_draws(7, 4, 50), a);
  EXPECT_NE(gaussian_draws(8, 3, 50), a);
}

TEST(SimulateBatch, SameSeedSameBatch) {
  const SdeProblem problem([](double x, double) { return -4.0 * x * (x * x - 1.0); }, 0.05,
                           zero_cost, -1.0, 1.0, 0.01);
  const auto a = simulate_batch(problem, nullptr, 3, 11);
  const auto b = simulate_batch(problem, nullptr, 3, 11);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.trajectories[i].states, b.trajectories[i].states);
    EXPECT_EQ(a.trajectories[i].increments, b.trajectories[i].increments);
  }
  EXPECT_EQ(trajectories_csv(a, 3), trajectories_csv(b, 3));
}

TEST(SimulatePath, ZeroNoiseIsExplicitEuler) {
  const auto drift = [](double x, double t) { return std::sin(x) - 0.5 * t; };
  const SdeProblem problem(drift, 0.2, zero_cost, 0.3, 1.0, 0.05);
  const auto dict = RbfDictionary::uniform(3, -1.0, 0.5, 0.7);
  const ControlModel model(dict, Eigen::Vector3d(0.4, -1.1, 0.6));
  const std::vector<double> zeros(problem.num_steps(), 0.0);
  const auto traj = simulate_path(problem, &model, zeros);

  double x = 0.3;
  ASSERT_EQ(traj.states.size(), problem.num_steps() + 1);
  EXPECT_EQ(traj.states[0], x);
  for (std::size_t n = 0; n < problem.num_steps(); ++n) {
    double u = 0.0;
    for (std::size_t m = 0; m < 3; ++m) {
      const double c = -1.0 + 0.5 * static_cast<double>(m + 1);
      const double z = (x - c) / 0.7;
      u += model.theta()[static_cast<Eigen::Index>(m)] * z / 0.7 * std::exp(-0.5 * z * z);
    }
    x += (drift(x, 0.05 * static_cast<double>(n)) - u) * 0.05;
    EXPECT_NEAR(traj.states[n + 1], x, 1e-13);
    EXPECT_NEAR(traj.increments[n], traj.states[n + 1] - traj.states[n], 0.0);
  }
}

TEST(SimulatePath, ExplosionAbortsAndFreezes) {
  const SdeProblem problem([](double x, double) { return x * x * x; }, 0.01, zero_cost, 3.0, 1.0,
                           0.1);
  const std::vector<double> zeros(problem.num_steps(), 0.0);
  const auto traj = simulate_path(problem, nullptr, zeros);
  EXPECT_TRUE(traj.aborted);
  for (double x : traj.states) {
    EXPECT_LE(std::abs(x), kExplosionBound);
  }
  EXPECT_EQ(traj.states.back(), traj.states[traj.states.size() - 2]);
}

TEST(SimulateBatch, BrownianMoments) {
  const double eps = 0.3;
  const double x0 = -1.0;
  const std::size_t n = 100000;
  const auto problem = brownian(eps, x0, 1.0, 0.01);
  const auto batch = simulate_batch(problem, nullptr, n, 2024);
  double mean = 0.0;
  for (const auto& t : batch.trajectories) mean += t.terminal_state();
  mean /= static_cast<double>(n);
  double var = 0.0;
  double fourth = 0.0;
  for (const auto& t : batch.trajectories) {
    const double d = t.terminal_state() - mean;
    var += d * d;
    fourth += d * d * d * d;
  }
  var /= static_cast<double>(n - 1);
  fourth /= static_cast<double>(n);
  // X_T ~ N(x0, eps T)
  EXPECT_LE(std::abs(mean - x0), 3.0 * std::sqrt(eps / static_cast<double>(n)));
  const double var_se = std::sqrt((fourth - var * var) / static_cast<double>(n));
  EXPECT_LE(std::abs(var - eps), 3.0 * var_se);
  EXPECT_LE(std::abs(var - eps), 0.1 * eps);
}

TEST(SimulateBatch, DoubleWellStaysInLeftWell) {
  const SdeProblem problem([](double x, double) { return -4.0 * x * (x * x - 1.0); }, 0.05,
                           zero_cost, -1.0, 1.0, 0.001);
  const auto batch = simulate_batch(problem, nullptr, 10000, 5);
  std::size_t crossed = 0;
  for (const auto& t : batch.trajectories) crossed += t.terminal_state() > 0.0 ? 1 : 0;
  EXPECT_LT(static_cast<double>(crossed) / 10000.0, 0.01);
}

TEST(TrajectoriesCsv, HeaderAndRowCount) {
  const auto problem = brownian(0.1, 0.0, 1.0, 0.25);
  const auto batch = simulate_batch(problem, nullptr, 5, 1);
  const auto csv = trajectories_csv(batch, 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,path_0,path_1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

}  // namespace
}  // namespace ceis
