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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ceis/control_basis.hpp"
#include "ceis/error.hpp"
#include "ceis/measure.hpp"
#include "ceis/sde_core.hpp"

namespace ceis {

/// Left-endpoint path integrals that make log L^theta a quadratic in theta:
///   log L^theta = -(1/eps) theta . drive - (1/(2 eps)) theta^T gram theta
/// with gram = sum psi psi^T dt and drive = sum psi dX - sum psi b dt.
struct PathStatistics {
  Eigen::MatrixXd gram;
  Eigen::VectorXd drive;

  [[nodiscard]] double log_likelihood(const Eigen::VectorXd& theta, double epsilon) const {
    return -theta.dot(drive) / epsilon - 0.5 * theta.dot(gram * theta) / epsilon;
  }
};

namespace detail {

// Adds psi psi^T dt to the upper triangle of `gram` and psi (dx - b dt) to `drive`.
inline void accumulate_step(std::span<const double> psi, double dx, double b, double dt,
                            Eigen::MatrixXd& gram, Eigen::VectorXd& drive) {
  const auto size = static_cast<Eigen::Index>(psi.size());
  for (Eigen::Index j = 0; j < size; ++j) {
    const double pj = psi[static_cast<std::size_t>(j)];
    drive[j] += pj * dx - pj * b * dt;
    const double pj_dt = pj * dt;
    for (Eigen::Index l = j; l < size; ++l) {
      gram(j, l) += pj_dt * psi[static_cast<std::size_t>(l)];
    }
  }
}

inline void symmetrize_from_upper(Eigen::MatrixXd& gram) {
  gram.triangularView<Eigen::StrictlyLower>() = gram.transpose().triangularView<Eigen::StrictlyLower>();
}

}  // namespace detail

template <PsiBasis Basis>
PathStatistics path_statistics(const Trajectory& traj, const Basis& basis,
                               const SdeProblem& problem) {
  const auto size = static_cast<Eigen::Index>(basis.size());
  PathStatistics stats{Eigen::MatrixXd::Zero(size, size), Eigen::VectorXd::Zero(size)};
  std::vector<double> psi(basis.size());
  const double dt = traj.grid.dt();
  for (std::size_t n = 0; n < traj.increments.size(); ++n) {
    const double x = traj.states[n];
    basis.evaluate_psi(x, psi);
    detail::accumulate_step(psi, traj.increments[n], problem.drift(x, traj.grid.time(n)), dt,
                            stats.gram, stats.drive);
  }
  detail::symmetrize_from_upper(stats.gram);
  return stats;
}

/// Weighted normal equations A theta = r of the cross-entropy update.
struct NormalEquations {
  Eigen::MatrixXd matrix;  // A = sum_i w_i gram_i
  Eigen::VectorXd rhs;     // r = -sum_i w_i drive_i
};

/// Reduces per-trajectory statistics with normalized weights, in index order.
/// Entries with zero weight are skipped. Throws kAssembly on a non-finite entry.
NormalEquations reduce_normal_equations(std::span<const PathStatistics> stats,
                                        std::span<const double> weights);

template <PsiBasis Basis>
NormalEquations assemble_normal_equations(const TrajectoryBatch& batch, const WeightSet& weights,
                                          const Basis& basis, const SdeProblem& problem) {
  if (weights.size() != batch.size()) {
    throw Error(ErrorKind::kInvalidArgument, "weights and batch sizes differ");
  }
  std::vector<PathStatistics> stats;
  stats.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (weights.normalized[i] > 0.0) {
      stats.push_back(path_statistics(batch.trajectories[i], basis, problem));
    } else {
      const auto size = static_cast<Eigen::Index>(basis.size());
      stats.push_back({Eigen::MatrixXd::Zero(size, size), Eigen::VectorXd::Zero(size)});
    }
  }
  return reduce_normal_equations(stats, weights.normalized);
}

/// Solves (A + lambda I) theta = r. Throws kSingularSystem when the shifted
/// matrix is not numerically positive definite or the residual check fails.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs,
                            double lambda);

/// Ridge strength, either absolute or relative to trace(A) / J.
struct RidgeSetting {
  double value = 1e-2;
  bool relative = true;

  [[nodiscard]] double resolve(const Eigen::MatrixXd& matrix) const;
};

struct CeConfig {
  std::size_t n_paths = 30000;
  std::size_t max_iters = 10;
  RidgeSetting ridge;
  double tol = 1e-2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Result of simulating one path under theta while accumulating its statistics.
struct SimulatedStatistics {
  PathStatistics stats;
  double terminal_state = 0.0;
  bool aborted = false;
};

/// Simulates under u_theta and accumulates path statistics in the same pass.
/// Bitwise identical to simulate_path followed by path_statistics.
SimulatedStatistics simulate_with_statistics(const SdeProblem& problem,
                                             const RbfDictionary& dictionary,
                                             const Eigen::VectorXd& theta,
                                             std::span<const double> draws);

struct CeStep {
  Eigen::VectorXd theta_next;
  double ess = 0.0;
  std::size_t aborted = 0;
  double lambda = 0.0;
  NormalEquations equations;
};

/// One cross-entropy update from theta_k, using the batch seeded with config.seed + iteration.
CeStep ce_iterate(const Eigen::VectorXd& theta_k, const SdeProblem& problem,
                  const RbfDictionary& dictionary, const CeConfig& config,
                  std::size_t iteration = 0);

struct CeReport {
  std::vector<Eigen::VectorXd> theta_history;  // theta^(0)..theta^(K)
  std::vector<double> ess_history;             // ESS of the batch drawn under theta^(k)
  std::vector<std::size_t> aborted_history;
  bool converged = false;
  std::size_t iterations_used = 0;
  std::optional<std::string> error;

  [[nodiscard]] const Eigen::VectorXd& final_theta() const { return theta_history.back(); }
};

/// Iterates from theta = 0 until the sup-norm update falls below tol or
/// max_iters updates have been made. A failing iteration ends the run and
/// is reported through `error`.
CeReport ce_run(const SdeProblem& problem, const RbfDictionary& dictionary,
                const CeConfig& config);

/// CSV `iter,ess,theta_0,...`; the last row's ess is empty when theta^(K) was never sampled.
std::string theta_history_csv(const CeReport& report);

}  // namespace ceis
