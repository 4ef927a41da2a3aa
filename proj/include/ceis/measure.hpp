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
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ceis/control_basis.hpp"
#include "ceis/error.hpp"
#include "ceis/sde_core.hpp"

namespace ceis {

/// Per-trajectory weights toward the zero-variance measure. The unknown
/// normalizer rho is dropped; it cancels under self-normalization.
struct WeightSet {
  std::vector<double> log_target;    // -g(X_T) / eps
  std::vector<double> log_proposal;  // log L^theta_T
  std::vector<double> log_raw;       // log_target - log_proposal
  std::vector<double> normalized;
  double ess = 0.0;
  std::size_t aborted = 0;

  [[nodiscard]] std::size_t size() const noexcept { return normalized.size(); }
};

struct NormalizedWeights {
  std::vector<double> weights;
  double ess = 0.0;
};

/// Left-endpoint discretization of the Girsanov log-likelihood log dQ/dP:
///   -1/eps sum u(X_n) dX_n + 1/eps sum u(X_n) b(X_n, t_n) dt - 1/(2 eps) sum u(X_n)^2 dt.
/// `control` is any callable x -> u(x).
template <std::invocable<double> Control>
double log_proposal_likelihood(const Trajectory& traj, const Control& control,
                               const SdeProblem& problem, std::size_t index = 0) {
  const double dt = traj.grid.dt();
  double along_path = 0.0;
  double against_drift = 0.0;
  double energy = 0.0;
  for (std::size_t n = 0; n < traj.increments.size(); ++n) {
    const double x = traj.states[n];
    const double u = control(x);
    along_path += u * traj.increments[n];
    against_drift += u * problem.drift(x, traj.grid.time(n)) * dt;
    energy += u * u * dt;
  }
  const double eps = problem.epsilon();
  const double result = -along_path / eps + against_drift / eps - energy / (2.0 * eps);
  if (!std::isfinite(result)) {
    throw Error(ErrorKind::kWeightOverflow,
                "log-likelihood of trajectory " + std::to_string(index) + " is not finite");
  }
  return result;
}

/// -g(X_M) / eps.
double log_target_weight(const Trajectory& traj, const SdeProblem& problem);

/// Log-sum-exp stabilized normalization of log weights; -inf entries get zero mass.
/// Throws kDegenerateWeights if no entry is finite.
NormalizedWeights self_normalize(std::span<const double> log_raw);

/// Weights of every trajectory in `batch` simulated under `model` (null: uncontrolled).
/// Aborted trajectories receive log_raw = -inf.
WeightSet compute_weights(const TrajectoryBatch& batch, const ControlModel* model,
                          const SdeProblem& problem);

/// CSV `index,log_target,log_proposal,log_raw,normalized`.
std::string weights_csv(const WeightSet& weights);

}  // namespace ceis
