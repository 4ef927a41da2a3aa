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

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ceis {

/// Anything that yields the control basis values psi_1(x)..psi_J(x).
template <class B>
concept PsiBasis = requires(const B& basis, double x, std::span<double> out) {
  { basis.size() } -> std::convertible_to<std::size_t>;
  basis.evaluate_psi(x, out);
};

/// Gaussian kernels phi_m(x) = exp(-(x - c_m)^2 / (2 r_m^2)).
class RbfDictionary {
 public:
  RbfDictionary(std::vector<double> centers, std::vector<double> widths);

  /// J kernels with c_m = first_center + spacing * m for m = 1..J, common width.
  static RbfDictionary uniform(std::size_t count, double origin, double spacing, double width);

  /// 17 kernels, c_m = -1.5 + 0.1 m, r_m = 0.5.
  static RbfDictionary double_well_default();

  [[nodiscard]] std::size_t size() const noexcept { return centers_.size(); }
  [[nodiscard]] const std::vector<double>& centers() const noexcept { return centers_; }
  [[nodiscard]] const std::vector<double>& widths() const noexcept { return widths_; }

  /// phi_m(x), in (0, 1].
  [[nodiscard]] double rbf_value(std::size_t m, double x) const;

  /// psi_m(x) = -d/dx phi_m(x) = (x - c_m) / r_m^2 * phi_m(x).
  [[nodiscard]] double basis_psi(std::size_t m, double x) const;

  /// Writes psi_1(x)..psi_J(x) into `out` (size J).
  void evaluate_psi(double x, std::span<double> out) const;

  friend bool operator==(const RbfDictionary&, const RbfDictionary&) = default;

 private:
  std::vector<double> centers_;
  std::vector<double> widths_;
  std::vector<double> inv_width_sq_;
};

/// u_theta(x) = sum_m theta_m psi_m(x).
class ControlModel {
 public:
  ControlModel(RbfDictionary dictionary, Eigen::VectorXd theta);

  /// theta = 0.
  static ControlModel zero(RbfDictionary dictionary);

  [[nodiscard]] const RbfDictionary& dictionary() const noexcept { return dictionary_; }
  [[nodiscard]] const Eigen::VectorXd& theta() const noexcept { return theta_; }
  [[nodiscard]] std::size_t size() const noexcept { return dictionary_.size(); }

  [[nodiscard]] double control_value(double x) const;
  [[nodiscard]] double operator()(double x) const { return control_value(x); }

 private:
  RbfDictionary dictionary_;
  Eigen::VectorXd theta_;
};

/// |psi_m(x) + (phi_m(x + h) - phi_m(x - h)) / (2h)|; O(h^2) for smooth kernels.
double gradient_check(const RbfDictionary& dictionary, std::size_t m, double x, double h);

}  // namespace ceis
