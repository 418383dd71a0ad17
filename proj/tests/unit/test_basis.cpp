// Copyright 2026 The ttdis Authors
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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "ttdis/basis.hpp"
#include "ttdis/error.hpp"

namespace ttdis {
namespace {

TEST(UnivariateBasis, NodalValues) {
  const UnivariateBasis b({0.0, 0.5, 1.0});
  const Eigen::VectorXd at_mid = b.eval(0.5);
  EXPECT_DOUBLE_EQ(at_mid[0], 0.0);
  EXPECT_DOUBLE_EQ(at_mid[1], 1.0);
  EXPECT_DOUBLE_EQ(at_mid[2], 0.0);
  const Eigen::VectorXd quarter = b.eval(0.25);
  EXPECT_DOUBLE_EQ(quarter[0], 0.5);
  EXPECT_DOUBLE_EQ(quarter[1], 0.5);
  EXPECT_DOUBLE_EQ(quarter[2], 0.0);
  const UnivariateBasis two({0.0, 1.0});
  const Eigen::VectorXd left = two.eval(0.0);
  EXPECT_DOUBLE_EQ(left[0], 1.0);
  EXPECT_DOUBLE_EQ(left[1], 0.0);
}

TEST(UnivariateBasis, RejectsBadGrids) {
  EXPECT_THROW(UnivariateBasis({0.0}), DomainError);
  EXPECT_THROW(UnivariateBasis({0.0, 0.0, 1.0}), DomainError);
  EXPECT_THROW(UnivariateBasis({1.0, 0.0}), DomainError);
}

TEST(UnivariateBasis, OutsideDomainThrows) {
  const auto b = UnivariateBasis::uniform(0.0, 1.0, 5);
  EXPECT_THROW(b.eval(1.5), DomainError);
  EXPECT_THROW(b.eval(-1e-3), DomainError);
}

TEST(UnivariateBasis, PartitionOfUnity) {
  std::mt19937_64 rng(3);
  const UnivariateBasis b({-3.0, -1.7, -0.2, 0.0, 0.9, 2.5, 3.0});
  std::uniform_real_distribution<double> x(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd v = b.eval(x(rng));
    EXPECT_NEAR(v.sum(), 1.0, 1e-14);
    EXPECT_GE(v.minCoeff(), 0.0);
    EXPECT_LE((v.array() > 0.0).count(), 2);
  }
}

TEST(UnivariateBasis, MassMatrixClosedForm) {
  const Eigen::MatrixXd m = UnivariateBasis({0.0, 1.0}).mass_matrix();
  EXPECT_NEAR(m(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m(0, 1), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(m(1, 0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(m(1, 1), 1.0 / 3.0, 1e-15);
  const Eigen::MatrixXd m3 = UnivariateBasis({0.0, 0.5, 1.0}).mass_matrix();
  EXPECT_NEAR(m3(1, 1), 1.0 / 3.0, 1e-15);
}

TEST(UnivariateBasis, MassMatrixMatchesTrapezoid) {
  const UnivariateBasis b({0.0, 0.2, 0.35, 0.7, 1.0});
  const Eigen::MatrixXd m = b.mass_matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double q = oracle::trapezoid([&](double x) { const auto v = b.eval(x); return v[i] * v[j]; }, 0.0, 1.0, 100000);
      if (q == 0.0) {
        EXPECT_EQ(m(i, j), 0.0);
      } else {
        EXPECT_NEAR(m(i, j), q, 1e-8 * std::abs(q)) << i << "," << j;
      }
    }
  }
}

TEST(UnivariateBasis, WeightedMassMatrix) {
  const UnivariateBasis unit({0.0, 1.0});
  EXPECT_TRUE(unit.weighted_mass_matrix(ReferenceDensity1D::uniform(0.0, 1.0)).isApprox(unit.mass_matrix(), 1e-14));

  const auto normal = ReferenceDensity1D::truncated_normal(3.0);
  const auto sym = UnivariateBasis::uniform(-3.0, 3.0, 7);
  const Eigen::MatrixXd w = sym.weighted_mass_matrix(normal);
  const Eigen::MatrixXd flipped = w.reverse();
  EXPECT_TRUE(w.isApprox(flipped, 1e-14));

  const UnivariateBasis coarse({-3.0, 0.0, 3.0});
  const Eigen::MatrixXd wc = coarse.weighted_mass_matrix(normal);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double q = oracle::trapezoid(
          [&](double x) { const auto v = coarse.eval(x); return v[i] * v[j] * normal.pdf(x); }, -3.0, 3.0, 100000);
      EXPECT_NEAR(wc(i, j), q, 1e-8) << i << "," << j;
    }
  }
  EXPECT_THROW(coarse.weighted_mass_matrix(ReferenceDensity1D::truncated_normal(2.0)), DomainError);
}

TEST(ReferenceDensity, CdfExamples) {
  const auto normal = ReferenceDensity1D::truncated_normal(3.0);
  EXPECT_NEAR(normal.cdf(0.0), 0.5, 1e-15);
  EXPECT_EQ(normal.cdf(-3.0), 0.0);
  EXPECT_EQ(normal.cdf(3.0), 1.0);
  EXPECT_NEAR(normal.inverse_cdf(normal.cdf(1.7)), 1.7, 1e-10);
  const auto uni = ReferenceDensity1D::uniform(0.0, 1.0);
  EXPECT_NEAR(uni.cdf(0.3), 0.3, 1e-15);
  EXPECT_THROW(uni.inverse_cdf(1.2), DomainError);
  EXPECT_THROW(normal.inverse_cdf(-0.1), DomainError);
  EXPECT_EQ(uni.pdf(2.0), 0.0);
}

TEST(ReferenceDensity, NormalizedByConstruction) {
  for (const auto& ref : {ReferenceDensity1D::truncated_normal(3.0), ReferenceDensity1D::truncated_normal(8.0),
                          ReferenceDensity1D::uniform(-2.0, 5.0)}) {
    EXPECT_NEAR(oracle::integrate([&](double x) { return ref.pdf(x); }, ref.lower(), ref.upper(), 2000), 1.0, 1e-12);
  }
}

TEST(ReferenceDensity, RoundTrip) {
  std::mt19937_64 rng(5);
  const auto normal = ReferenceDensity1D::truncated_normal(3.0);
  std::uniform_real_distribution<double> x(-2.999, 2.999);
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double v = x(rng);
    EXPECT_NEAR(normal.inverse_cdf(normal.cdf(v)), v, 1e-10);
  }
  for (double v = -3.0; v <= 3.0; v += 0.01) {
    EXPECT_GT(normal.cdf(v), prev);
    prev = normal.cdf(v);
  }
}

TEST(NormalFunctions, Tails) {
  EXPECT_NEAR(normal_cdf(-10.0), 7.619853024160527e-24, 1e-36);
  EXPECT_NEAR(normal_quantile(normal_cdf(-8.0)), -8.0, 1e-9);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-13);
}

}  // namespace
}  // namespace ttdis
