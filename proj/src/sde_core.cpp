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
#include <random>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "ceis/control_basis.hpp"
#include "ceis/error.hpp"
#include "ceis/io.hpp"

namespace ceis {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

std::size_t steps_for(double horizon, double dt) {
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("horizon T = {} is not a positive integer multiple of dt = {}",
                            horizon, dt));
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

TimeGrid::TimeGrid(double t0, double dt, std::size_t num_steps)
    : t0_(t0), dt_(dt), num_steps_(num_steps) {
  if (!(dt > 0.0) || num_steps == 0) {
    throw Error(ErrorKind::kInvalidArgument, "time grid needs dt > 0 and at least one step");
  }
}

SdeProblem::SdeProblem(ScalarField drift, double epsilon, TerminalCost terminal_cost, double x0,
                       double horizon, double dt)
    : drift_(std::move(drift)),
      epsilon_(epsilon),
      terminal_cost_(std::move(terminal_cost)),
      x0_(x0),
      horizon_(horizon),
      grid_(0.0, dt > 0.0 ? dt : 1.0, 1) {
  if (!drift_ || !terminal_cost_) {
    throw Error(ErrorKind::kInvalidArgument, "drift and terminal cost must be set");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::kInvalidArgument, "epsilon must be positive");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::kInvalidArgument, "horizon T must be positive");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::kInvalidArgument, "dt must be positive");
  }
  if (!std::isfinite(x0)) {
    throw Error(ErrorKind::kInvalidArgument, "x0 must be finite");
  }
  grid_ = TimeGrid(0.0, dt, steps_for(horizon, dt));
}

SdeProblem SdeProblem::with_epsilon(double epsilon) const {
  return SdeProblem(drift_, epsilon, terminal_cost_, x0_, horizon_, grid_.dt());
}

std::size_t TrajectoryBatch::aborted_count() const {
  return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(),
                                                [](const Trajectory& t) { return t.aborted; }));
}

double euler_step(double x, double t, const SdeProblem& problem, double control_value,
                  double gaussian_draw) {
  const double dt = problem.dt();
  const double next = x + (problem.drift(x, t) - control_value) * dt +
                      std::sqrt(problem.epsilon()) * std::sqrt(dt) * gaussian_draw;
  if (!std::isfinite(next)) {
    throw Error(ErrorKind::kIntegrationDiverged,
                fmt::format("Euler step at t = {} from x = {} produced a non-finite state", t, x));
  }
  return next;
}

std::vector<double> gaussian_draws(std::uint64_t seed, std::size_t index, std::size_t count) {
  std::mt19937_64 engine(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index))));
  std::normal_distribution<double> normal;
  std::vector<double> draws(count);
  for (auto& z : draws) {
    z = normal(engine);
  }
  return draws;
}

Trajectory simulate_path(const SdeProblem& problem, const ControlModel* control,
                         std::span<const double> draws) {
  const auto& grid = problem.grid();
  const std::size_t steps = grid.num_steps();
  if (draws.size() < steps) {
    throw Error(ErrorKind::kInvalidArgument, "need one gaussian draw per step");
  }
  Trajectory traj{grid, std::vector<double>(steps + 1), std::vector<double>(steps), false};
  double x = problem.x0();
  traj.states[0] = x;
  for (std::size_t n = 0; n < steps; ++n) {
    double next = x;
    if (!traj.aborted) {
      const double u = control != nullptr ? control->control_value(x) : 0.0;
      next = euler_step(x, grid.time(n), problem, u, draws[n]);
      if (std::abs(next) > kExplosionBound) {
        traj.aborted = true;
        next = x;
      }
    }
    traj.states[n + 1] = next;
    traj.increments[n] = next - x;
    x = next;
  }
  return traj;
}

TrajectoryBatch simulate_batch(const SdeProblem& problem, const ControlModel* control,
                               std::size_t n_paths, std::uint64_t seed) {
  if (n_paths == 0) {
    throw Error(ErrorKind::kInvalidArgument, "n_paths must be at least 1");
  }
  TrajectoryBatch batch;
  batch.seed = seed;
  batch.control_tag = control != nullptr ? "theta" : "none";
  batch.trajectories.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const auto draws = gaussian_draws(seed, i, problem.num_steps());
    batch.trajectories.push_back(simulate_path(problem, control, draws));
  }
  return batch;
}

std::string trajectories_csv(const TrajectoryBatch& batch, std::size_t max_paths) {
  const std::size_t paths = std::min(max_paths, batch.size());
  std::string out = "t";
  for (std::size_t i = 0; i < paths; ++i) {
    out += fmt::format(",path_{}", i);
  }
  out += '\n';
  if (paths == 0) {
    return out;
  }
  const auto& grid = batch.grid();
  for (std::size_t n = 0; n <= grid.num_steps(); ++n) {
    out += format_real(grid.time(n));
    for (std::size_t i = 0; i < paths; ++i) {
      out += ',';
      out += format_real(batch.trajectories[i].states[n]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ceis
