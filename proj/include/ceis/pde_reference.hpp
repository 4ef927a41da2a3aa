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
#include <span>
#include <string>
#include <vector>

#include "ceis/control_basis.hpp"
#include "ceis/sde_core.hpp"

namespace ceis {

/// Values below this are treated as zero when taking logarithms.
inline constexpr double kPhiFloor = 1e-300;

struct PdeGrid {
  double x_min = -6.0;
  double x_max = 6.0;
  std::size_t nx = 2001;
  std::size_t nt = 2000;

  [[nodiscard]] double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  [[nodiscard]] double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
};

struct PdeOptions {
  /// Keep every time level of phi. When false only t = 0 is stored.
  bool keep_history = true;
};

/// Solution of d_t phi + b d_x phi + (eps/2) sigma^2 d_xx phi = 0, phi(., T) = exp(-g/eps).
///
/// phi is stored row-major with rows ordered by time level t_n = n T / nt.
/// The control is expressed for the simulated dynamics dX = (b - u) dt + ...,
/// so u* = sigma d_x W with W = -eps log phi.
class PdeSolution {
 public:
  PdeSolution(PdeGrid grid, double horizon, double epsilon, std::vector<double> phi,
              std::size_t time_levels, std::vector<double> u_star, double rho_ref);

  [[nodiscard]] const PdeGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  /// Number of stored time levels (nt + 1, or 1 without history).
  [[nodiscard]] std::size_t time_levels() const noexcept { return time_levels_; }
  /// phi at stored level `level` (0 is t = 0) and node i.
  [[nodiscard]] double phi(std::size_t level, std::size_t i) const;
  /// W = -eps log max(phi, floor).
  [[nodiscard]] double w(std::size_t level, std::size_t i) const;
  [[nodiscard]] std::span<const double> phi_t0() const;
  [[nodiscard]] const std::vector<double>& u_star() const noexcept { return u_star_; }
  [[nodiscard]] double rho_ref() const noexcept { return rho_ref_; }

 private:
  PdeGrid grid_;
  double horizon_;
  double epsilon_;
  std::vector<double> phi_;
  std::size_t time_levels_;
  std::vector<double> u_star_;
  double rho_ref_;
};

/// Crank-Nicolson march backward from t = T with centered differences and
/// homogeneous Neumann boundaries. sigma defaults to 1.
///
/// Throws kConfiguration when x0 is outside the grid and kPositivityViolation
/// when phi turns negative (the grid is too coarse for the drift).
PdeSolution solve_feynman_kac(const SdeProblem& problem, const PdeGrid& grid,
                              const ScalarField& sigma = {}, PdeOptions options = {});

/// Interpolated t = 0 control at x. Throws kExtrapolation outside the grid.
double reference_control(const PdeSolution& solution, double x);

/// max_k |u_theta(x_k) - u*(x_k)|.
double control_distance(const PdeSolution& solution, const ControlModel& model,
                        std::span<const double> x_samples);

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` are unused.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs_inout);

/// CSV with a `# ...` metadata line followed by `x,phi_t0,w_t0,u_star_t0`.
std::string pde_csv(const PdeSolution& solution);

}  // namespace ceis
