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

#include "ceis/control_basis.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "ceis/error.hpp"

namespace ceis {

RbfDictionary::RbfDictionary(std::vector<double> centers, std::vector<double> widths)
    : centers_(std::move(centers)), widths_(std::move(widths)) {
  if (centers_.size() != widths_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "centers and widths differ in length");
  }
  if (centers_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "dictionary needs at least one kernel");
  }
  inv_width_sq_.reserve(widths_.size());
  for (std::size_t m = 0; m < widths_.size(); ++m) {
    if (!(widths_[m] > 0.0) || !std::isfinite(widths_[m]) || !std::isfinite(centers_[m])) {
      throw Error(ErrorKind::kInvalidArgument,
                  "kernel " + std::to_string(m) + " needs a finite center and positive width");
    }
    inv_width_sq_.push_back(1.0 / (widths_[m] * widths_[m]));
  }
}

RbfDictionary RbfDictionary::uniform(std::size_t count, double origin, double spacing,
                                     double width) {
  std::vector<double> centers;
  centers.reserve(count);
  for (std::size_t m = 1; m <= count; ++m) {
    centers.push_back(origin + spacing * static_cast<double>(m));
  }
  return RbfDictionary(std::move(centers), std::vector<double>(count, width));
}

RbfDictionary RbfDictionary::double_well_default() { return uniform(17, -1.5, 0.1, 0.5); }

double RbfDictionary::rbf_value(std::size_t m, double x) const {
  const double d = x - centers_.at(m);
  return std::exp(-0.5 * d * d * inv_width_sq_[m]);
}

double RbfDictionary::basis_psi(std::size_t m, double x) const {
  const double d = x - centers_.at(m);
  const double s = inv_width_sq_[m];
  return d * s * std::exp(-0.5 * d * d * s);
}

void RbfDictionary::evaluate_psi(double x, std::span<double> out) const {
  for (std::size_t m = 0; m < centers_.size(); ++m) {
    const double d = x - centers_[m];
    const double s = inv_width_sq_[m];
    out[m] = d * s * std::exp(-0.5 * d * d * s);
  }
}

ControlModel::ControlModel(RbfDictionary dictionary, Eigen::VectorXd theta)
    : dictionary_(std::move(dictionary)), theta_(std::move(theta)) {
  if (static_cast<std::size_t>(theta_.size()) != dictionary_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "theta length must equal the dictionary size");
  }
  if (!theta_.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "theta has non-finite entries");
  }
}

ControlModel ControlModel::zero(RbfDictionary dictionary) {
  const auto size = static_cast<Eigen::Index>(dictionary.size());
  return ControlModel(std::move(dictionary), Eigen::VectorXd::Zero(size));
}

double ControlModel::control_value(double x) const {
  double u = 0.0;
  for (std::size_t m = 0; m < dictionary_.size(); ++m) {
    u += theta_[static_cast<Eigen::Index>(m)] * dictionary_.basis_psi(m, x);
  }
  return u;
}

double gradient_check(const RbfDictionary& dictionary, std::size_t m, double x, double h) {
  if (!(h > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "finite-difference step must be positive");
  }
  const double central = (dictionary.rbf_value(m, x + h) - dictionary.rbf_value(m, x - h)) / (2.0 * h);
  return std::abs(dictionary.basis_psi(m, x) + central);
}

}  // namespace ceis
