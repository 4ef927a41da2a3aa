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

#include "ceis/cross_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ceis/io.hpp"

namespace ceis {

NormalEquations reduce_normal_equations(std::span<const PathStatistics> stats,
                                        std::span<const double> weights) {
  if (stats.empty() || stats.size() != weights.size()) {
    throw Error(ErrorKind::kInvalidArgument, "statistics and weights must be non-empty and aligned");
  }
  const auto size = stats.front().drive.size();
  NormalEquations eq{Eigen::MatrixXd::Zero(size, size), Eigen::VectorXd::Zero(size)};
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) {
      continue;
    }
    const auto& s = stats[i];
    for (Eigen::Index j = 0; j < size; ++j) {
      if (!std::isfinite(s.drive[j])) {
        throw Error(ErrorKind::kAssembly,
                    fmt::format("non-finite drive entry at trajectory {}, basis {}", i, j));
      }
      for (Eigen::Index l = 0; l < size; ++l) {
        if (!std::isfinite(s.gram(j, l))) {
          throw Error(ErrorKind::kAssembly,
                      fmt::format("non-finite Gram entry at trajectory {}, ({}, {})", i, j, l));
        }
      }
    }
    eq.matrix.noalias() += w * s.gram;
    eq.rhs.noalias() -= w * s.drive;
  }
  if (!eq.matrix.allFinite() || !eq.rhs.allFinite()) {
    throw Error(ErrorKind::kAssembly, "normal equations overflowed during reduction");
  }
  return eq;
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs,
                            double lambda) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size()) {
    throw Error(ErrorKind::kInvalidArgument, "solve_ridge: dimension mismatch");
  }
  if (!(lambda >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "ridge strength must be nonnegative");
  }
  Eigen::MatrixXd shifted = matrix;
  shifted.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  constexpr auto kAdvice = "(A + lambda I) is numerically singular; use a positive ridge";
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e3 * std::numeric_limits<double>::epsilon())) {
    throw Error(ErrorKind::kSingularSystem, kAdvice);
  }
  Eigen::VectorXd theta = llt.solve(rhs);
  const double residual = (shifted * theta - rhs).lpNorm<Eigen::Infinity>();
  if (!theta.allFinite() || residual > 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
    throw Error(ErrorKind::kSingularSystem, kAdvice);
  }
  return theta;
}

double RidgeSetting::resolve(const Eigen::MatrixXd& matrix) const {
  if (!relative) {
    return value;
  }
  return value * matrix.trace() / static_cast<double>(matrix.rows());
}

void CeConfig::validate() const {
  if (n_paths < 2) {
    throw Error(ErrorKind::kInvalidArgument, "cross-entropy needs at least 2 paths per iteration");
  }
  if (!(ridge.value >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "ridge must be nonnegative");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "tolerance must be positive");
  }
}

SimulatedStatistics simulate_with_statistics(const SdeProblem& problem,
                                             const RbfDictionary& dictionary,
                                             const Eigen::VectorXd& theta,
                                             std::span<const double> draws) {
  const auto& grid = problem.grid();
  const std::size_t steps = grid.num_steps();
  if (draws.size() < steps) {
    throw Error(ErrorKind::kInvalidArgument, "need one gaussian draw per step");
  }
  const std::size_t size = dictionary.size();
  const auto isize = static_cast<Eigen::Index>(size);
  SimulatedStatistics out{{Eigen::MatrixXd::Zero(isize, isize), Eigen::VectorXd::Zero(isize)}};
  std::vector<double> psi(size);
  const double dt = grid.dt();
  double x = problem.x0();
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = grid.time(n);
    dictionary.evaluate_psi(x, psi);
    double next = x;
    if (!out.aborted) {
      double u = 0.0;
      for (std::size_t m = 0; m < size; ++m) {
        u += theta[static_cast<Eigen::Index>(m)] * psi[m];
      }
      next = euler_step(x, t, problem, u, draws[n]);
      if (std::abs(next) > kExplosionBound) {
        out.aborted = true;
        next = x;
      }
    }
    detail::accumulate_step(psi, next - x, problem.drift(x, t), dt, out.stats.gram,
                            out.stats.drive);
    x = next;
  }
  detail::symmetrize_from_upper(out.stats.gram);
  out.terminal_state = x;
  return out;
}

CeStep ce_iterate(const Eigen::VectorXd& theta_k, const SdeProblem& problem,
                  const RbfDictionary& dictionary, const CeConfig& config, std::size_t iteration) {
  config.validate();
  if (static_cast<std::size_t>(theta_k.size()) != dictionary.size()) {
    throw Error(ErrorKind::kInvalidArgument, "theta length must equal the dictionary size");
  }
  const std::uint64_t seed = config.seed + iteration;
  const double eps = problem.epsilon();
  std::vector<PathStatistics> stats;
  stats.reserve(config.n_paths);
  std::vector<double> log_raw(config.n_paths);
  CeStep step;
  for (std::size_t i = 0; i < config.n_paths; ++i) {
    const auto draws = gaussian_draws(seed, i, problem.num_steps());
    auto sim = simulate_with_statistics(problem, dictionary, theta_k, draws);
    if (sim.aborted) {
      log_raw[i] = -std::numeric_limits<double>::infinity();
      ++step.aborted;
    } else {
      const double log_proposal = sim.stats.log_likelihood(theta_k, eps);
      if (!std::isfinite(log_proposal)) {
        throw Error(ErrorKind::kWeightOverflow,
                    fmt::format("log-likelihood of trajectory {} is not finite", i));
      }
      log_raw[i] = -problem.terminal_cost(sim.terminal_state) / eps - log_proposal;
    }
    stats.push_back(std::move(sim.stats));
  }
  const auto weights = self_normalize(log_raw);
  step.ess = weights.ess;
  step.equations = reduce_normal_equations(stats, weights.weights);
  step.lambda = config.ridge.resolve(step.equations.matrix);
  // A constant log_raw over the whole batch means the current proposal already
  // has zero variance; keep it instead of refitting to sampling noise.
  const auto [lo, hi] = std::minmax_element(log_raw.begin(), log_raw.end());
  if (step.aborted == 0 && *lo == *hi) {
    step.theta_next = theta_k;
    return step;
  }
  step.theta_next = solve_ridge(step.equations.matrix, step.equations.rhs, step.lambda);
  return step;
}

CeReport ce_run(const SdeProblem& problem, const RbfDictionary& dictionary,
                const CeConfig& config) {
  config.validate();
  CeReport report;
  report.theta_history.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dictionary.size())));
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    CeStep step;
    try {
      step = ce_iterate(report.theta_history.back(), problem, dictionary, config, k);
    } catch (const Error& e) {
      report.error = fmt::format("iteration {}: {}", k, e.what());
      break;
    }
    const double change = (step.theta_next - report.theta_history.back()).lpNorm<Eigen::Infinity>();
    report.ess_history.push_back(step.ess);
    report.aborted_history.push_back(step.aborted);
    report.theta_history.push_back(std::move(step.theta_next));
    report.iterations_used = k + 1;
    if (change < config.tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

std::string theta_history_csv(const CeReport& report) {
  const auto size = report.theta_history.empty() ? 0 : report.theta_history.front().size();
  std::string out = "iter,ess";
  for (Eigen::Index j = 0; j < size; ++j) {
    out += fmt::format(",theta_{}", j);
  }
  out += '\n';
  for (std::size_t k = 0; k < report.theta_history.size(); ++k) {
    out += fmt::format("{},", k);
    if (k < report.ess_history.size()) {
      out += format_real(report.ess_history[k]);
    }
    for (Eigen::Index j = 0; j < size; ++j) {
      out += ',';
      out += format_real(report.theta_history[k][j]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ceis
