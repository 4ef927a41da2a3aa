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

#include "ceis/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ceis/io.hpp"

namespace ceis {

double log_target_weight(const Trajectory& traj, const SdeProblem& problem) {
  return -problem.terminal_cost(traj.terminal_state()) / problem.epsilon();
}

NormalizedWeights self_normalize(std::span<const double> log_raw) {
  double peak = -std::numeric_limits<double>::infinity();
  for (const double l : log_raw) {
    if (std::isnan(l)) {
      throw Error(ErrorKind::kDegenerateWeights, "log weight is NaN");
    }
    peak = std::max(peak, l);
  }
  if (!std::isfinite(peak)) {
    throw Error(ErrorKind::kDegenerateWeights,
                peak > 0 ? "a log weight is +inf" : "no trajectory carries positive weight");
  }
  NormalizedWeights result;
  result.weights.resize(log_raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_raw.size(); ++i) {
    result.weights[i] = std::exp(log_raw[i] - peak);
    total += result.weights[i];
  }
  double sum_sq = 0.0;
  for (auto& w : result.weights) {
    w /= total;
    sum_sq += w * w;
  }
  result.ess = 1.0 / sum_sq;
  return result;
}

WeightSet compute_weights(const TrajectoryBatch& batch, const ControlModel* model,
                          const SdeProblem& problem) {
  WeightSet set;
  const std::size_t n = batch.size();
  set.log_target.resize(n);
  set.log_proposal.resize(n);
  set.log_raw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& traj = batch.trajectories[i];
    set.log_target[i] = log_target_weight(traj, problem);
    set.log_proposal[i] =
        model != nullptr ? log_proposal_likelihood(traj, *model, problem, i) : 0.0;
    if (traj.aborted) {
      set.log_raw[i] = -std::numeric_limits<double>::infinity();
      ++set.aborted;
    } else {
      set.log_raw[i] = set.log_target[i] - set.log_proposal[i];
    }
  }
  auto normalized = self_normalize(set.log_raw);
  set.normalized = std::move(normalized.weights);
  set.ess = normalized.ess;
  return set;
}

std::string weights_csv(const WeightSet& weights) {
  std::string out = "index,log_target,log_proposal,log_raw,normalized\n";
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out += fmt::format("{},{},{},{},{}\n", i, format_real(weights.log_target[i]),
                       format_real(weights.log_proposal[i]), format_real(weights.log_raw[i]),
                       format_real(weights.normalized[i]));
  }
  return out;
}

}  // namespace ceis
