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

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ceis/control_basis.hpp"
#include "ceis/cross_entropy.hpp"
#include "ceis/measure.hpp"
#include "ceis/sde_core.hpp"

namespace ceis {

/// Monte Carlo estimate of rho with plug-in error. All reductions are carried
/// out in log space; rho_hat itself may underflow while log_rho_hat does not.
struct EstimateReport {
  double rho_hat = 0.0;
  double log_rho_hat = 0.0;
  double std_error = 0.0;
  double cov = 0.0;  // NaN when degenerate
  std::size_t n_samples = 0;
  double second_moment_log = 0.0;
  double ess = 0.0;
  bool degenerate = false;

  /// Empirical second moment over squared mean, exp(log M2 - 2 log rho).
  [[nodiscard]] double ratio() const;
  /// log of ratio(), kept in log space.
  [[nodiscard]] double log_ratio() const { return second_moment_log - 2.0 * log_rho_hat; }
};

/// Estimate of E[exp(l)] from samples l_i of the log integrand (-inf allowed).
EstimateReport estimate_from_log_integrand(std::span<const double> log_integrand);

/// Crude estimator (1/N) sum exp(-g(X_T)/eps) over an uncontrolled batch.
EstimateReport mc_estimate(const TrajectoryBatch& batch, const SdeProblem& problem);

/// Importance-sampling estimator (1/N) sum exp(-g(X_T)/eps - log L^theta) over a
/// batch simulated under `model`.
EstimateReport is_estimate(const TrajectoryBatch& batch, const ControlModel& model,
                           const SdeProblem& problem);

/// Per-path integrand pieces of a batch that is simulated and discarded path by path.
struct SampledIntegrand {
  std::vector<double> log_target;    // -g(X_T) / eps
  std::vector<double> log_proposal;  // log L^theta (0 without control)
  std::vector<double> terminal_states;
  std::vector<char> aborted;

  [[nodiscard]] std::size_t size() const noexcept { return log_target.size(); }
  /// log_target - log_proposal, -inf for aborted paths.
  [[nodiscard]] std::vector<double> log_integrand() const;
  [[nodiscard]] WeightSet weights() const;
};

/// Simulates `n_paths` trajectories (same streams as simulate_batch) without
/// keeping them. `model` may be null for the uncontrolled dynamics.
SampledIntegrand sample_integrand(const SdeProblem& problem, const ControlModel* model,
                                  std::size_t n_paths, std::uint64_t seed);

EstimateReport estimate(const SampledIntegrand& sample);

/// Sample mean and standard error of exp(-log L^theta) under Q^theta; should be 1.
struct LikelihoodMeanCheck {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t aborted = 0;
};
LikelihoodMeanCheck inverse_likelihood_mean(const SdeProblem& problem, const ControlModel& model,
                                            std::size_t n_paths, std::uint64_t seed);

/// Structured text record with rho_hat, log_rho_hat, std_error, cov, n, ess,
/// epsilon and control_tag.
std::string estimate_record(const EstimateReport& report, double epsilon,
                            const std::string& control_tag);

struct EfficiencyReport {
  std::vector<double> epsilons;
  std::vector<double> ratio_log;               // eps log R_hat for the trained control
  std::vector<double> gamma1_hat;              // -eps log rho_hat
  std::vector<double> ratio_log_uncontrolled;  // eps log R_hat for theta = 0
  std::vector<double> cov_is;
  std::vector<double> cov_mc;
  std::vector<double> ess;
  std::vector<std::optional<std::string>> errors;

  [[nodiscard]] std::size_t size() const noexcept { return epsilons.size(); }
  [[nodiscard]] std::size_t succeeded() const;
};

struct SweepSettings {
  std::size_t n_estimate = 30000;
  std::uint64_t estimate_seed = 0;
};

/// Builds the problem at a given noise level.
using ProblemFactory = std::function<SdeProblem(double epsilon)>;

/// For each eps: train theta with ce_run, estimate under the trained control and
/// under theta = 0, and record eps log R_hat and -eps log rho_hat. Failures for one
/// eps are recorded and the sweep continues.
EfficiencyReport efficiency_sweep(const ProblemFactory& problem_at,
                                  const RbfDictionary& dictionary, const CeConfig& ce_config,
                                  std::span<const double> epsilons,
                                  const SweepSettings& settings);

/// CSV `epsilon,eps_log_R,gamma1_hat,cov_is,cov_mc,ess,eps_log_R_uncontrolled,error`.
std::string efficiency_csv(const EfficiencyReport& report);

}  // namespace ceis
