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

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ceis/error.hpp"

namespace ceis {
namespace {

RbfDictionary single(double center, double width) { return RbfDictionary({center}, {width}); }

TEST(RbfValue, AtCenterIsOne) {
  const auto dict = RbfDictionary::double_well_default();
  for (std::size_t m = 0; m < dict.size(); ++m) {
    EXPECT_EQ(dict.rbf_value(m, dict.centers()[m]), 1.0);
  }
}

TEST(RbfValue, OneWidthAway) {
  const auto dict = single(0.3, 0.5);
  EXPECT_NEAR(dict.rbf_value(0, 0.8), 0.6065306597126334, 1e-15);
}

TEST(RbfValue, HandEvaluation) {
  EXPECT_NEAR(single(0.0, 0.5).rbf_value(0, 1.0), 0.1353352832366127, 1e-15);
}

TEST(BasisPsi, VanishesAtCenter) {
  EXPECT_EQ(single(0.4, 0.5).basis_psi(0, 0.4), 0.0);
}

TEST(BasisPsi, HandDerivative) {
  // -d/dx exp(-x^2/2) at x = 1
  EXPECT_NEAR(single(0.0, 1.0).basis_psi(0, 1.0), 0.6065306597126334, 1e-15);
}

TEST(BasisPsi, OddAboutCenter) {
  const auto dict = single(-0.75, 0.5);
  for (double h : {0.015625, 0.25, 1.25, 4.0}) {
    EXPECT_EQ(dict.basis_psi(0, -0.75 + h), -dict.basis_psi(0, -0.75 - h)) << h;
  }
}

TEST(BasisPsi, Bounded) {
  const auto dict = RbfDictionary({0.0, 1.0, -2.0}, {0.5, 0.1, 2.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pick(-5.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = pick(rng);
    for (std::size_t m = 0; m < dict.size(); ++m) {
      EXPECT_LE(std::abs(dict.basis_psi(m, x)), std::exp(-0.5) / dict.widths()[m] * (1 + 1e-15));
    }
  }
}

TEST(Dictionary, DefaultLayout) {
  const auto dict = RbfDictionary::double_well_default();
  ASSERT_EQ(dict.size(), 17u);
  EXPECT_NEAR(dict.centers().front(), -1.4, 1e-15);
  EXPECT_NEAR(dict.centers().back(), 0.2, 1e-15);
  for (double r : dict.widths()) EXPECT_EQ(r, 0.5);
}

TEST(Dictionary, RejectsBadInput) {
  EXPECT_THROW(RbfDictionary({0.0}, {0.0}), Error);
  EXPECT_THROW(RbfDictionary({0.0, 1.0}, {1.0}), Error);
  EXPECT_THROW(RbfDictionary({}, {}), Error);
}

TEST(Dictionary, EvaluatePsiMatchesPerBasis) {
  const auto dict = RbfDictionary::double_well_default();
  std::vector<double> out(dict.size());
  for (double x : {-1.3, -0.2, 0.0, 0.9}) {
    dict.evaluate_psi(x, out);
    for (std::size_t m = 0; m < dict.size(); ++m) EXPECT_EQ(out[m], dict.basis_psi(m, x));
  }
}

TEST(ControlModel, ZeroThetaIsZero) {
  const auto model = ControlModel::zero(RbfDictionary::double_well_default());
  for (double x : {-3.0, -1.0, 0.0, 0.5, 7.0}) EXPECT_EQ(model.control_value(x), 0.0);
}

TEST(ControlModel, SingleBasisAtCenter) {
  const ControlModel model(single(0.25, 0.5), Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_EQ(model.control_value(0.25), 0.0);
}

TEST(ControlModel, SumOfTwoBases) {
  const auto dict = RbfDictionary({-0.5, 0.5}, {0.4, 0.6});
  const ControlModel model(dict, Eigen::Vector2d(1.0, 1.0));
  for (double x : {-1.0, 0.1, 0.8}) {
    EXPECT_EQ(model.control_value(x), dict.basis_psi(0, x) + dict.basis_psi(1, x));
  }
}

TEST(ControlModel, LengthMismatchThrows) {
  EXPECT_THROW(ControlModel(single(0.0, 1.0), Eigen::Vector2d(1.0, 2.0)), Error);
}

TEST(ControlModel, LinearInTheta) {
  const auto dict = RbfDictionary::double_well_default();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> pick(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd a(17);
    Eigen::VectorXd b(17);
    for (int j = 0; j < 17; ++j) {
      a[j] = normal(rng);
      b[j] = normal(rng);
    }
    const double x = pick(rng);
    const double sum = ControlModel(dict, a + b).control_value(x);
    const double parts = ControlModel(dict, a).control_value(x) + ControlModel(dict, b).control_value(x);
    double scale = 0.0;
    for (std::size_t m = 0; m < 17; ++m) {
      scale += (std::abs(a[static_cast<Eigen::Index>(m)]) + std::abs(b[static_cast<Eigen::Index>(m)])) *
               std::abs(dict.basis_psi(m, x));
    }
    EXPECT_LE(std::abs(sum - parts), 4.0 * 17.0 * std::numeric_limits<double>::epsilon() * scale);
  }
}

TEST(GradientCheck, CentralDifferenceResidual) {
  EXPECT_LT(gradient_check(single(0.0, 1.0), 0, 0.3, 1e-4), 1e-7);
}

TEST(GradientCheck, CenterIsTrivial) {
  for (double h : {1e-1, 1e-3}) {
    EXPECT_LT(gradient_check(single(0.6, 0.5), 0, 0.6, h), h * h);
  }
}

TEST(GradientCheck, SecondOrderConvergence) {
  const auto dict = single(0.0, 1.0);
  const double coarse = gradient_check(dict, 0, 0.3, 1e-2);
  const double fine = gradient_check(dict, 0, 0.3, 5e-3);
  EXPECT_NEAR(coarse / fine, 4.0, 0.05);
}

TEST(GradientCheck, RandomPointsAreSecondOrder) {
  const auto dict = RbfDictionary::double_well_default();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pick(-2.5, 1.5);
  const double h = 1e-3;
  for (int k = 0; k < 100; ++k) {
    const double x = pick(rng);
    for (std::size_t m = 0; m < dict.size(); ++m) {
      // third derivative of phi is bounded by ~3/r^3 (= 24 for r = 0.5)
      EXPECT_LT(gradient_check(dict, m, x, h), 24.0 * h * h / 6.0 + 1e-10);
    }
  }
}

}  // namespace
}  // namespace ceis
