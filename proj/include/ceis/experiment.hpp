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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ceis/control_basis.hpp"
#include "ceis/cross_entropy.hpp"
#include "ceis/estimators.hpp"
#include "ceis/pde_reference.hpp"
#include "ceis/sde_core.hpp"

namespace ceis {

/// Flat key/value experiment description. Defaults reproduce the double-well
/// study: V(x) = kappa (x^2 - 1)^2, b = -V'(x), g(x) = nu (x - 1)^2.
struct ExperimentConfig {
  // problem
  double kappa = 1.0;
  double nu = 1.0;
  double epsilon = 0.05;
  double x0 = -1.0;
  double horizon = 1.0;  // key `T`
  double dt = 0.001;
  // dictionary: c_m = center_origin + center_spacing * m, m = 1..J
  std::size_t basis_count = 17;  // key `J`
  double center_origin = -1.5;
  double center_spacing = 0.1;
  double width = 0.5;
  // cross-entropy
  std::size_t n_ce = 30000;  // key `N_ce`
  std::size_t max_iters = 10;
  double ridge = 1e-2;
  bool ridge_relative = true;
  double tol = 1e-2;
  // estimation
  std::size_t n_estimate = 30000;  // key `N_estimate`
  std::size_t plot_paths = 100;
  std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05};
  // reference PDE; unset extents pick a default from the drift
  std::optional<double> pde_x_min;
  std::optional<double> pde_x_max;
  std::optional<std::size_t> pde_nx;
  std::size_t pde_nt = 2000;
  // output
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;

  /// Throws kParse naming the offending key.
  void validate() const;

  [[nodiscard]] SdeProblem problem() const;
  [[nodiscard]] SdeProblem problem_at(double eps) const;
  [[nodiscard]] RbfDictionary dictionary() const;
  [[nodiscard]] CeConfig ce_config() const;
  /// Uses the explicit pde_* keys when present. Otherwise [-6, 6] with 2001
  /// nodes for zero drift and [-2.5, 2.5] with 6001 nodes for the double well.
  [[nodiscard]] PdeGrid pde_grid() const;

  [[nodiscard]] double potential(double x) const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, malformed
/// values and constraint violations throw kParse.
ExperimentConfig parse_config(std::string_view text);

/// Applies one `key=value` override to an existing config and revalidates.
void apply_override(ExperimentConfig& config, std::string_view assignment);

/// Closed form of E[exp(-nu (x0 + sqrt(eps T) Z - 1)^2 / eps)] for zero drift.
double gaussian_closed_form(double nu, double x0, double horizon, double epsilon);

/// Analytic t = 0 control for the zero-drift case, d/dx of the closed-form W.
double gaussian_closed_form_control(double nu, double horizon, double x);

/// Fraction of values strictly above `level`.
double fraction_above(std::span<const double> values, double level);

struct DoubleWellResult {
  EstimateReport mc;
  EstimateReport is;
  CeReport ce;
  double rho_ref = 0.0;
  double uncontrolled_above = 0.0;  // fraction with X_T > 0.5
  double controlled_above = 0.0;
  double control_distance = 0.0;  // on [-1.3, 1.3]
  std::vector<std::filesystem::path> artifacts;
};

struct GaussianResult {
  double closed_form = 0.0;
  EstimateReport mc;
  EstimateReport is;
  CeReport ce;
  double rho_ref = 0.0;
  double mc_rel_error = 0.0;
  double is_rel_error = 0.0;
  double pde_rel_error = 0.0;
  std::vector<std::filesystem::path> artifacts;
};

struct SweepResult {
  EfficiencyReport report;
  std::vector<std::filesystem::path> artifacts;
};

struct PdeResult {
  double rho_ref = 0.0;
  std::vector<std::filesystem::path> artifacts;
};

/// Thrown by the runners; names the stage that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(ErrorKind::kConfiguration, "stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)) {}

  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

DoubleWellResult run_doublewell(const ExperimentConfig& config);
GaussianResult run_gaussian_oracle(const ExperimentConfig& config);
SweepResult run_sweep(const ExperimentConfig& config, std::span<const double> epsilons);
PdeResult run_pde(const ExperimentConfig& config);

/// Table `x,V(x),V_modified(x),u_theta(x),u_star(x)`; V_modified = V + int_0^x u_theta
/// by the trapezoid rule on the output grid.
std::string potential_control_csv(const ExperimentConfig& config, const ControlModel& model,
                                  const PdeSolution& solution, std::size_t points);

}  // namespace ceis
