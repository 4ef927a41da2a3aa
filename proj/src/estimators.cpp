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

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ceis/io.hpp"
#include "ceis/measure.hpp"

namespace ceis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string json_real(double value) {
  return std::isfinite(value) ? format_real(value) : std::string("null");
}

}  // namespace

double EstimateReport::ratio() const { return std::exp(log_ratio()); }

EstimateReport estimate_from_log_integrand(std::span<const double> log_integrand) {
  EstimateReport report;
  report.n_samples = log_integrand.size();
  if (log_integrand.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "estimate needs at least one sample");
  }
  double peak = kNegInf;
  for (const double l : log_integrand) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorKind::kWeightOverflow, "log integrand is NaN or +inf");
    }
    peak = std::max(peak, l);
  }
  if (peak == kNegInf) {
    report.log_rho_hat = kNegInf;
    report.second_moment_log = kNegInf;
    report.cov = kNaN;
    report.degenerate = true;
    return report;
  }
  double first = 0.0;
  double second = 0.0;
  for (const double l : log_integrand) {
    const double scaled = std::exp(l - peak);
    first += scaled;
    second += scaled * scaled;
  }
  const double n = static_cast<double>(log_integrand.size());
  const double log_n = std::log(n);
  report.log_rho_hat = peak + std::log(first) - log_n;
  report.second_moment_log = 2.0 * peak + std::log(second) - log_n;
  report.rho_hat = std::exp(report.log_rho_hat);
  // R = M2 / rho^2 = n * second / first^2 >= 1.
  const double excess = std::max(0.0, n * second / (first * first) - 1.0);
  report.cov = std::sqrt(excess / n);
  report.std_error = report.rho_hat * report.cov;
  report.ess = first * first / second;
  report.degenerate = report.rho_hat == 0.0;
  return report;
}

std::vector<double> SampledIntegrand::log_integrand() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out[i] = aborted[i] != 0 ? kNegInf : log_target[i] - log_proposal[i];
  }
  return out;
}

WeightSet SampledIntegrand::weights() const {
  WeightSet set;
  set.log_target = log_target;
  set.log_proposal = log_proposal;
  set.log_raw = log_integrand();
  set.aborted = static_cast<std::size_t>(std::count(aborted.begin(), aborted.end(), 1));
  auto normalized = self_normalize(set.log_raw);
  set.normalized = std::move(normalized.weights);
  set.ess = normalized.ess;
  return set;
}

SampledIntegrand sample_integrand(const SdeProblem& problem, const ControlModel* model,
                                  std::size_t n_paths, std::uint64_t seed) {
  if (n_paths == 0) {
    throw Error(ErrorKind::kInvalidArgument, "n_paths must be at least 1");
  }
  SampledIntegrand sample;
  sample.log_target.reserve(n_paths);
  sample.log_proposal.reserve(n_paths);
  sample.terminal_states.reserve(n_paths);
  sample.aborted.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const auto draws = gaussian_draws(seed, i, problem.num_steps());
    const auto traj = simulate_path(problem, model, draws);
    sample.log_target.push_back(log_target_weight(traj, problem));
    sample.log_proposal.push_back(
        model != nullptr ? log_proposal_likelihood(traj, *model, problem, i) : 0.0);
    sample.terminal_states.push_back(traj.terminal_state());
    sample.aborted.push_back(traj.aborted ? 1 : 0);
  }
  return sample;
}

EstimateReport estimate(const SampledIntegrand& sample) {
  return estimate_from_log_integrand(sample.log_integrand());
}

EstimateReport mc_estimate(const TrajectoryBatch& batch, const SdeProblem& problem) {
  std::vector<double> log_integrand(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    log_integrand[i] = traj.aborted ? kNegInf : log_target_weight(traj, problem);
  }
  return estimate_from_log_integrand(log_integrand);
}

EstimateReport is_estimate(const TrajectoryBatch& batch, const ControlModel& model,
                           const SdeProblem& problem) {
  std::vector<double> log_integrand(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    log_integrand[i] = traj.aborted ? kNegInf
                                    : log_target_weight(traj, problem) -
                                          log_proposal_likelihood(traj, model, problem, i);
  }
  return estimate_from_log_integrand(log_integrand);
}

LikelihoodMeanCheck inverse_likelihood_mean(const SdeProblem& problem, const ControlModel& model,
                                            std::size_t n_paths, std::uint64_t seed) {
  const auto sample = sample_integrand(problem, &model, n_paths, seed);
  LikelihoodMeanCheck check;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.aborted[i] != 0) {
      ++check.aborted;
      continue;
    }
    const double z = std::exp(-sample.log_proposal[i]);
    sum += z;
    sum_sq += z * z;
  }
  const double n = static_cast<double>(sample.size());
  check.mean = sum / n;
  const double variance = std::max(0.0, sum_sq / n - check.mean * check.mean);
  check.std_error = std::sqrt(variance / n);
  return check;
}

std::string estimate_record(const EstimateReport& report, double epsilon,
                            const std::string& control_tag) {
  std::string out = "{\n";
  out += fmt::format("  \"rho_hat\": {},\n", json_real(report.rho_hat));
  out += fmt::format("  \"log_rho_hat\": {},\n", json_real(report.log_rho_hat));
  out += fmt::format("  \"std_error\": {},\n", json_real(report.std_error));
  out += fmt::format("  \"cov\": {},\n", json_real(report.cov));
  out += fmt::format("  \"n\": {},\n", report.n_samples);
  out += fmt::format("  \"ess\": {},\n", json_real(report.ess));
  out += fmt::format("  \"epsilon\": {},\n", json_real(epsilon));
  out += fmt::format("  \"control_tag\": \"{}\",\n", control_tag);
  out += fmt::format("  \"degenerate\": {}\n", report.degenerate ? "true" : "false");
  out += "}\n";
  return out;
}

std::size_t EfficiencyReport::succeeded() const {
  return static_cast<std::size_t>(
      std::count_if(errors.begin(), errors.end(), [](const auto& e) { return !e.has_value(); }));
}

EfficiencyReport efficiency_sweep(const ProblemFactory& problem_at,
                                  const RbfDictionary& dictionary, const CeConfig& ce_config,
                                  std::span<const double> epsilons,
                                  const SweepSettings& settings) {
  EfficiencyReport report;
  for (const double eps : epsilons) {
    report.epsilons.push_back(eps);
    double ratio_log = kNaN;
    double gamma1 = kNaN;
    double ratio_log_plain = kNaN;
    double cov_is = kNaN;
    double cov_mc = kNaN;
    double ess = kNaN;
    std::optional<std::string> error;
    try {
      if (!(eps > 0.0)) {
        throw Error(ErrorKind::kInvalidArgument, "epsilon must be positive");
      }
      const auto problem = problem_at(eps);
      const auto ce = ce_run(problem, dictionary, ce_config);
      if (ce.error) {
        throw Error(ErrorKind::kConfiguration, "cross-entropy failed: " + *ce.error);
      }
      const ControlModel trained(dictionary, ce.final_theta());
      const auto is = estimate(sample_integrand(problem, &trained, settings.n_estimate,
                                                settings.estimate_seed));
      const auto mc = estimate(sample_integrand(problem, nullptr, settings.n_estimate,
                                                settings.estimate_seed + 1));
      ratio_log = eps * is.log_ratio();
      gamma1 = -eps * is.log_rho_hat;
      ratio_log_plain = eps * mc.log_ratio();
      cov_is = is.cov;
      cov_mc = mc.cov;
      ess = is.ess;
    } catch (const Error& e) {
      error = e.what();
    }
    report.ratio_log.push_back(ratio_log);
    report.gamma1_hat.push_back(gamma1);
    report.ratio_log_uncontrolled.push_back(ratio_log_plain);
    report.cov_is.push_back(cov_is);
    report.cov_mc.push_back(cov_mc);
    report.ess.push_back(ess);
    report.errors.push_back(std::move(error));
  }
  return report;
}

std::string efficiency_csv(const EfficiencyReport& report) {
  std::string out = "epsilon,eps_log_R,gamma1_hat,cov_is,cov_mc,ess,eps_log_R_uncontrolled,error\n";
  for (std::size_t k = 0; k < report.size(); ++k) {
    auto cell = [](double v) { return std::isfinite(v) ? format_real(v) : std::string(); };
    std::string error = report.errors[k].value_or("");
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_real(report.epsilons[k]),
                       cell(report.ratio_log[k]), cell(report.gamma1_hat[k]),
                       cell(report.cov_is[k]), cell(report.cov_mc[k]), cell(report.ess[k]),
                       cell(report.ratio_log_uncontrolled[k]), error);
  }
  return out;
}

}  // namespace ceis
