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

#include "ceis/estimators.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ceis/cross_entropy.hpp"
#include "ceis/error.hpp"

namespace ceis {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double zero_drift(double, double) { return 0.0; }
double zero_cost(double) { return 0.0; }
double quadratic_cost(double x) { return (x - 1.0) * (x - 1.0); }

// E[exp(-(X_T - 1)^2 / eps)] for X_T ~ N(x0, eps T), by completing the square.
double gaussian_oracle(double x0, double horizon, double eps) {
  return std::exp(-(x0 - 1.0) * (x0 - 1.0) / (eps * (1.0 + 2.0 * horizon))) /
         std::sqrt(1.0 + 2.0 * horizon);
}

SdeProblem gaussian_problem(double eps, double dt = 0.01) {
  return SdeProblem(zero_drift, eps, quadratic_cost, -1.0, 1.0, dt);
}

TEST(FromLogIntegrand, TwoPointHandValues) {
  const std::vector<double> logs{0.0, std::log(3.0)};
  const auto r = estimate_from_log_integrand(logs);
  EXPECT_NEAR(r.rho_hat, 2.0, 1e-15);
  EXPECT_NEAR(r.ratio(), 1.25, 1e-14);
  EXPECT_NEAR(r.std_error, std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(r.cov, std::sqrt(0.125), 1e-14);
  EXPECT_NEAR(r.ess, 1.6, 1e-14);
  EXPECT_FALSE(r.degenerate);
}

TEST(FromLogIntegrand, ConstantIntegrandHasZeroError) {
  const std::vector<double> logs(1000, -27.5);
  const auto r = estimate_from_log_integrand(logs);
  EXPECT_NEAR(r.log_rho_hat, -27.5, 1e-13);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_NEAR(r.ratio(), 1.0, 1e-13);
  EXPECT_NEAR(r.log_ratio(), 0.0, 1e-13);
}

TEST(FromLogIntegrand, TinyValuesStayInLogSpace) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(-760.0, 2.0);
  std::vector<double> logs(2000);
  for (auto& l : logs) l = normal(rng);
  long double sum = 0.0L;
  for (double l : logs) sum += std::exp(static_cast<long double>(l) + 740.0L);
  const double expected = static_cast<double>(std::log(sum / 2000.0L)) - 740.0;
  const auto r = estimate_from_log_integrand(logs);
  EXPECT_NEAR(r.log_rho_hat, expected, 1e-10);
  EXPECT_TRUE(std::isfinite(r.log_ratio()));
}

TEST(FromLogIntegrand, AllDeadIsDegenerate) {
  const std::vector<double> logs(5, -kInf);
  const auto r = estimate_from_log_integrand(logs);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.rho_hat, 0.0);
  EXPECT_TRUE(std::isnan(r.cov));
}

TEST(FromLogIntegrand, RejectsBadInput) {
  EXPECT_THROW(estimate_from_log_integrand(std::vector<double>{}), Error);
  EXPECT_THROW(estimate_from_log_integrand(std::vector<double>{0.0, kInf}), Error);
}

TEST(McEstimate, ZeroCostIsExactlyOne) {
  const SdeProblem problem(zero_drift, 0.1, zero_cost, -1.0, 1.0, 0.1);
  const auto r = mc_estimate(simulate_batch(problem, nullptr, 500, 2), problem);
  EXPECT_EQ(r.rho_hat, 1.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(McEstimate, HugeCostIsDegenerate) {
  const SdeProblem problem(zero_drift, 0.01, [](double) { return 1e6; }, -1.0, 1.0, 0.1);
  const auto r = mc_estimate(simulate_batch(problem, nullptr, 100, 2), problem);
  EXPECT_EQ(r.rho_hat, 0.0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_NEAR(r.log_rho_hat, -1e8, 1e-3);
}

TEST(McEstimate, GaussianOracleModerateNoise) {
  const auto problem = gaussian_problem(0.25);
  const auto r = estimate(sample_integrand(problem, nullptr, 100000, 11));
  const double exact = gaussian_oracle(-1.0, 1.0, 0.25);
  EXPECT_LE(std::abs(r.rho_hat - exact), 3.0 * r.std_error)
      << r.rho_hat << " vs " << exact << " se " << r.std_error;
}

TEST(IsEstimate, ZeroControlMatchesMonteCarloBitwise) {
  const auto problem = gaussian_problem(0.25);
  const auto batch = simulate_batch(problem, nullptr, 2000, 4);
  const auto mc = mc_estimate(batch, problem);
  const auto is = is_estimate(batch, ControlModel::zero(RbfDictionary::double_well_default()), problem);
  EXPECT_EQ(mc.rho_hat, is.rho_hat);
  EXPECT_EQ(mc.std_error, is.std_error);
  EXPECT_EQ(mc.log_ratio(), is.log_ratio());
}

TEST(IsEstimate, StreamingMatchesBatch) {
  const auto problem = gaussian_problem(0.25, 0.05);
  Eigen::VectorXd theta(17);
  for (int j = 0; j < 17; ++j) theta[j] = -0.1 + 0.02 * j;
  const ControlModel model(RbfDictionary::double_well_default(), theta);
  const auto batch = simulate_batch(problem, &model, 500, 6);
  const auto a = is_estimate(batch, model, problem);
  const auto b = estimate(sample_integrand(problem, &model, 500, 6));
  EXPECT_EQ(a.rho_hat, b.rho_hat);
  EXPECT_EQ(a.std_error, b.std_error);
}

class TrainedGaussian : public ::testing::Test {
 protected:
  static ControlModel train(double eps, std::size_t n_paths, std::uint64_t seed) {
    const auto dict = RbfDictionary::double_well_default();
    CeConfig config;
    config.n_paths = n_paths;
    config.seed = seed;
    const auto report = ce_run(gaussian_problem(eps), dict, config);
    EXPECT_FALSE(report.error);
    return ControlModel(dict, report.final_theta());
  }
};

TEST_F(TrainedGaussian, ModerateNoiseUnbiasedAndEfficient) {
  const auto problem = gaussian_problem(0.25);
  const auto model = train(0.25, 30000, 100);
  const auto is = estimate(sample_integrand(problem, &model, 100000, 500));
  const auto mc = estimate(sample_integrand(problem, nullptr, 100000, 501));
  const double exact = gaussian_oracle(-1.0, 1.0, 0.25);
  EXPECT_LE(std::abs(is.rho_hat - exact), 3.0 * is.std_error);
  EXPECT_LE(std::abs(is.rho_hat - mc.rho_hat),
            3.0 * std::hypot(is.std_error, mc.std_error));
  EXPECT_LE(is.cov, mc.cov / 5.0) << is.cov << " vs " << mc.cov;
}

TEST_F(TrainedGaussian, SmallNoiseWithinTenPercent) {
  const auto problem = gaussian_problem(0.05);
  const auto model = train(0.05, 30000, 200);
  const auto is = estimate(sample_integrand(problem, &model, 30000, 600));
  const double exact = gaussian_oracle(-1.0, 1.0, 0.05);
  EXPECT_NEAR(exact, 1.5e-12, 0.05e-12);
  EXPECT_LE(std::abs(is.rho_hat / exact - 1.0), 0.1) << is.rho_hat << " vs " << exact;
}

TEST(InverseLikelihood, ZeroControlIsExactlyOne) {
  const auto check = inverse_likelihood_mean(gaussian_problem(0.25),
                                             ControlModel::zero(RbfDictionary::double_well_default()),
                                             100, 1);
  EXPECT_EQ(check.mean, 1.0);
  EXPECT_EQ(check.std_error, 0.0);
}

TEST(EstimateRecord, KeysAndNulls) {
  EstimateReport r;
  r.rho_hat = 0.5;
  r.log_rho_hat = std::log(0.5);
  r.cov = std::nan("");
  r.n_samples = 10;
  const auto text = estimate_record(r, 0.05, "trained");
  for (const char* key : {"\"rho_hat\"", "\"log_rho_hat\"", "\"std_error\"", "\"cov\": null", "\"n\"",
                          "\"ess\"", "\"epsilon\"", "\"control_tag\": \"trained\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key << " in " << text;
  }
}

TEST(EfficiencySweep, ZeroCostGivesZeroRow) {
  const auto dict = RbfDictionary::double_well_default();
  CeConfig config;
  config.n_paths = 1000;
  const std::vector<double> eps{0.1};
  const auto report = efficiency_sweep(
      [](double e) { return SdeProblem(zero_drift, e, zero_cost, -1.0, 1.0, 0.01); }, dict, config,
      eps, SweepSettings{1000, 3});
  ASSERT_EQ(report.succeeded(), 1u);
  EXPECT_EQ(report.ratio_log[0], 0.0);
  EXPECT_EQ(report.ratio_log_uncontrolled[0], 0.0);
  EXPECT_EQ(report.gamma1_hat[0], 0.0);
  const auto csv = efficiency_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "epsilon,eps_log_R,gamma1_hat,cov_is,cov_mc,ess,eps_log_R_uncontrolled,error");
}

}  // namespace
}  // namespace ceis
