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

#include "ceis/pde_reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ceis/error.hpp"
#include "ceis/io.hpp"

namespace ceis {

namespace {

// Slack for the maximum-principle bounds.
constexpr double kBoundSlack = 1e-10;

struct Stencil {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;
};

// Coefficients of L phi = a phi_xx + b phi_x with a = eps sigma^2 / 2, reflecting ghost nodes at both ends.
Stencil operator_at(const SdeProblem& problem, const ScalarField& sigma, const PdeGrid& grid,
                    double t) {
  const std::size_t nx = grid.nx;
  const double dx = grid.dx();
  Stencil s{std::vector<double>(nx), std::vector<double>(nx), std::vector<double>(nx)};
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = grid.x(i);
    const double sig = sigma ? sigma(x, t) : 1.0;
    const double a = 0.5 * problem.epsilon() * sig * sig / (dx * dx);
    const double b = problem.drift(x, t) / (2.0 * dx);
    s.lower[i] = a - b;
    s.diag[i] = -2.0 * a;
    s.upper[i] = a + b;
  }
  s.upper[0] += s.lower[0];
  s.lower[0] = 0.0;
  s.lower[nx - 1] += s.upper[nx - 1];
  s.upper[nx - 1] = 0.0;
  return s;
}

double interpolate_log(std::span<const double> values, const PdeGrid& grid, double x) {
  const double dx = grid.dx();
  const std::size_t points = std::min<std::size_t>(4, grid.nx);
  const double position = (x - grid.x_min) / dx;
  const auto base = static_cast<std::ptrdiff_t>(std::floor(position)) -
                    static_cast<std::ptrdiff_t>(points / 2 - 1);
  const auto first = static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(grid.nx - points)));
  double result = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    double basis = 1.0;
    const double xk = grid.x(first + k);
    for (std::size_t j = 0; j < points; ++j) {
      if (j != k) {
        const double xj = grid.x(first + j);
        basis *= (x - xj) / (xk - xj);
      }
    }
    result += basis * std::log(std::max(values[first + k], kPhiFloor));
  }
  return result;
}

}  // namespace

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs_inout) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs_inout.size() != n || n == 0) {
    throw Error(ErrorKind::kInvalidArgument, "tridiagonal system size mismatch");
  }
  std::vector<double> modified_upper(n);
  double pivot = diag[0];
  if (pivot == 0.0) {
    throw Error(ErrorKind::kSingularSystem, "zero pivot in tridiagonal solve");
  }
  modified_upper[0] = upper[0] / pivot;
  rhs_inout[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i] * modified_upper[i - 1];
    if (pivot == 0.0) {
      throw Error(ErrorKind::kSingularSystem, "zero pivot in tridiagonal solve");
    }
    modified_upper[i] = upper[i] / pivot;
    rhs_inout[i] = (rhs_inout[i] - lower[i] * rhs_inout[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs_inout[i] -= modified_upper[i] * rhs_inout[i + 1];
  }
}

PdeSolution::PdeSolution(PdeGrid grid, double horizon, double epsilon, std::vector<double> phi,
                         std::size_t time_levels, std::vector<double> u_star, double rho_ref)
    : grid_(grid),
      horizon_(horizon),
      epsilon_(epsilon),
      phi_(std::move(phi)),
      time_levels_(time_levels),
      u_star_(std::move(u_star)),
      rho_ref_(rho_ref) {}

double PdeSolution::phi(std::size_t level, std::size_t i) const {
  return phi_.at(level * grid_.nx + i);
}

double PdeSolution::w(std::size_t level, std::size_t i) const {
  return -epsilon_ * std::log(std::max(phi(level, i), kPhiFloor));
}

std::span<const double> PdeSolution::phi_t0() const {
  return std::span<const double>(phi_).first(grid_.nx);
}

PdeSolution solve_feynman_kac(const SdeProblem& problem, const PdeGrid& grid,
                              const ScalarField& sigma, PdeOptions options) {
  if (grid.nx < 3 || grid.nt < 1 || !(grid.x_min < grid.x_max)) {
    throw Error(ErrorKind::kConfiguration, "PDE grid needs nx >= 3, nt >= 1 and x_min < x_max");
  }
  if (!(grid.x_min < problem.x0() && problem.x0() < grid.x_max)) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("x0 = {} lies outside the PDE grid [{}, {}]", problem.x0(),
                            grid.x_min, grid.x_max));
  }
  const std::size_t nx = grid.nx;
  const std::size_t nt = grid.nt;
  const double horizon = problem.horizon();
  const double dtau = horizon / static_cast<double>(nt);
  const double eps = problem.epsilon();

  std::vector<double> current(nx);
  double lowest = std::numeric_limits<double>::infinity();
  double highest = -lowest;
  for (std::size_t i = 0; i < nx; ++i) {
    current[i] = std::exp(-problem.terminal_cost(grid.x(i)) / eps);
    if (!(current[i] >= 0.0) || !std::isfinite(current[i])) {
      throw Error(ErrorKind::kConfiguration, "terminal data exp(-g/eps) must be finite");
    }
    lowest = std::min(lowest, current[i]);
    highest = std::max(highest, current[i]);
  }
  if (!(highest > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "terminal data underflows everywhere on the grid");
  }

  const std::size_t levels = options.keep_history ? nt + 1 : 1;
  std::vector<double> phi(levels * nx);
  if (options.keep_history) {
    std::copy(current.begin(), current.end(), phi.begin() + static_cast<std::ptrdiff_t>(nt * nx));
  }

  std::vector<double> rhs(nx);
  std::vector<double> lower(nx);
  std::vector<double> diag(nx);
  std::vector<double> upper(nx);
  auto explicit_op = operator_at(problem, sigma, grid, horizon);
  for (std::size_t k = 0; k < nt; ++k) {
    const double t_next = horizon - static_cast<double>(k + 1) * dtau;
    for (std::size_t i = 0; i < nx; ++i) {
      const double left = i > 0 ? current[i - 1] : 0.0;
      const double right = i + 1 < nx ? current[i + 1] : 0.0;
      const double applied = explicit_op.lower[i] * left + explicit_op.diag[i] * current[i] +
                             explicit_op.upper[i] * right;
      rhs[i] = current[i] + 0.5 * dtau * applied;
    }
    auto implicit_op = operator_at(problem, sigma, grid, t_next);
    for (std::size_t i = 0; i < nx; ++i) {
      lower[i] = -0.5 * dtau * implicit_op.lower[i];
      diag[i] = 1.0 - 0.5 * dtau * implicit_op.diag[i];
      upper[i] = -0.5 * dtau * implicit_op.upper[i];
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    for (std::size_t i = 0; i < nx; ++i) {
      if (rhs[i] < 0.0 || rhs[i] < lowest - kBoundSlack || rhs[i] > highest + kBoundSlack ||
          !std::isfinite(rhs[i])) {
        throw Error(ErrorKind::kPositivityViolation,
                    fmt::format("phi = {} at x = {}, t = {} violates the maximum principle; "
                                "refine the grid (smaller dx for this drift)",
                                rhs[i], grid.x(i), t_next));
      }
    }
    current.swap(rhs);
    if (options.keep_history) {
      std::copy(current.begin(), current.end(),
                phi.begin() + static_cast<std::ptrdiff_t>((nt - k - 1) * nx));
    }
    explicit_op = std::move(implicit_op);
  }
  if (!options.keep_history) {
    std::copy(current.begin(), current.end(), phi.begin());
  }

  // u* = sigma d_x W at t = 0; zero slope at the reflecting ends.
  const double dx = grid.dx();
  std::vector<double> u_star(nx, 0.0);
  auto w_at = [&](std::size_t i) { return -eps * std::log(std::max(current[i], kPhiFloor)); };
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    const double sig = sigma ? sigma(grid.x(i), 0.0) : 1.0;
    u_star[i] = sig * (w_at(i + 1) - w_at(i - 1)) / (2.0 * dx);
  }

  const double rho_ref = std::exp(interpolate_log(current, grid, problem.x0()));
  return PdeSolution(grid, horizon, eps, std::move(phi), levels, std::move(u_star), rho_ref);
}

double reference_control(const PdeSolution& solution, double x) {
  const auto& grid = solution.grid();
  if (!(x >= grid.x_min && x <= grid.x_max)) {
    throw Error(ErrorKind::kExtrapolation,
                fmt::format("x = {} outside the PDE grid [{}, {}]", x, grid.x_min, grid.x_max));
  }
  const double position = (x - grid.x_min) / grid.dx();
  const auto i = std::min(static_cast<std::size_t>(position), grid.nx - 2);
  const double frac = position - static_cast<double>(i);
  const auto& u = solution.u_star();
  return (1.0 - frac) * u[i] + frac * u[i + 1];
}

double control_distance(const PdeSolution& solution, const ControlModel& model,
                        std::span<const double> x_samples) {
  double worst = 0.0;
  for (const double x : x_samples) {
    worst = std::max(worst, std::abs(model.control_value(x) - reference_control(solution, x)));
  }
  return worst;
}

std::string pde_csv(const PdeSolution& solution) {
  const auto& grid = solution.grid();
  std::string out = fmt::format("# x_min={},x_max={},nx={},nt={},T={},epsilon={},rho_ref={}\n",
                                format_real(grid.x_min), format_real(grid.x_max), grid.nx,
                                grid.nt, format_real(solution.horizon()),
                                format_real(solution.epsilon()), format_real(solution.rho_ref()));
  out += "x,phi_t0,w_t0,u_star_t0\n";
  for (std::size_t i = 0; i < grid.nx; ++i) {
    out += fmt::format("{},{},{},{}\n", format_real(grid.x(i)), format_real(solution.phi(0, i)),
                       format_real(solution.w(0, i)), format_real(solution.u_star()[i]));
  }
  return out;
}

}  // namespace ceis
