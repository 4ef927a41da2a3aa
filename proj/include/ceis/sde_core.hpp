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
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ceis {

class ControlModel;

/// Drift b(x, t).
using ScalarField = std::function<double(double x, double t)>;
/// Terminal cost g(x).
using TerminalCost = std::function<double(double x)>;

/// States whose magnitude exceeds this bound abort the trajectory.
inline constexpr double kExplosionBound = 1e6;

/// Uniform time grid t_n = t0 + n * dt, n = 0..num_steps.
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, std::size_t num_steps);

  [[nodiscard]] double t0() const noexcept { return t0_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::size_t num_steps() const noexcept { return num_steps_; }
  [[nodiscard]] double time(std::size_t n) const noexcept {
    return t0_ + static_cast<double>(n) * dt_;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t0_;
  double dt_;
  std::size_t num_steps_;
};

/// dX = (b(X, t) - u(X)) dt + sqrt(eps) dB on [0, T], X_0 = x0, sampled on a grid of step dt.
///
/// Construction rejects eps <= 0, T <= 0, dt <= 0 and horizons that are not an
/// integer multiple of dt.
class SdeProblem {
 public:
  SdeProblem(ScalarField drift, double epsilon, TerminalCost terminal_cost, double x0,
             double horizon, double dt);

  [[nodiscard]] double drift(double x, double t) const { return drift_(x, t); }
  [[nodiscard]] double terminal_cost(double x) const { return terminal_cost_(x); }
  [[nodiscard]] const ScalarField& drift_field() const noexcept { return drift_; }
  [[nodiscard]] const TerminalCost& terminal_cost_fn() const noexcept { return terminal_cost_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] double x0() const noexcept { return x0_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] double dt() const noexcept { return grid_.dt(); }
  [[nodiscard]] std::size_t num_steps() const noexcept { return grid_.num_steps(); }
  [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }

  /// Copy of this problem with a different noise level.
  [[nodiscard]] SdeProblem with_epsilon(double epsilon) const;

 private:
  ScalarField drift_;
  double epsilon_;
  TerminalCost terminal_cost_;
  double x0_;
  double horizon_;
  TimeGrid grid_;
};

/// One discretized path. `aborted` marks paths that left the explosion bound;
/// their remaining states are frozen at the last admissible value.
struct Trajectory {
  TimeGrid grid;
  std::vector<double> states;      // X_0..X_M
  std::vector<double> increments;  // X_{n+1} - X_n
  bool aborted = false;

  [[nodiscard]] double terminal_state() const { return states.back(); }
};

struct TrajectoryBatch {
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;
  std::string control_tag = "none";

  [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
  [[nodiscard]] const TimeGrid& grid() const { return trajectories.front().grid; }
  [[nodiscard]] std::size_t aborted_count() const;
};

/// One Euler-Maruyama step x + (b(x,t) - u) dt + sqrt(eps dt) z.
/// Throws kIntegrationDiverged if the result is not finite.
double euler_step(double x, double t, const SdeProblem& problem, double control_value,
                  double gaussian_draw);

/// Standard normal draws for trajectory `index` of the stream keyed by `seed`.
/// Each (seed, index) pair owns an independent generator, so trajectories can
/// be produced in any order with identical results.
std::vector<double> gaussian_draws(std::uint64_t seed, std::size_t index, std::size_t count);

/// Simulates one path from x0 with the given standard normal draws (one per step).
/// `control` may be null for the uncontrolled dynamics.
Trajectory simulate_path(const SdeProblem& problem, const ControlModel* control,
                         std::span<const double> draws);

TrajectoryBatch simulate_batch(const SdeProblem& problem, const ControlModel* control,
                               std::size_t n_paths, std::uint64_t seed);

/// CSV with header `t,path_0,...` and one row per grid node. At most
/// `max_paths` trajectories are written (the first ones in index order).
std::string trajectories_csv(const TrajectoryBatch& batch, std::size_t max_paths);

}  // namespace ceis
