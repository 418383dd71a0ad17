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

#include "support/oracles.hpp"
#include "ttdis/cross_entropy.hpp"
#include "ttdis/error.hpp"
#include "ttdis/problems.hpp"

namespace ttdis {
namespace {

TEST(Mixture, SingleComponentIsWeightedMoments) {
  const std::vector<double> x{0.0, 1.0, 2.0}, w{1.0, 2.0, 1.0};
  bool reg = false;
  const auto mix = fit_mixture(x, w, 1, 1, nullptr, reg);
  EXPECT_NEAR(mix.component(0).mean[0], 1.0, 1e-15);
  EXPECT_NEAR(mix.component(0).covariance(0, 0), 0.5, 1e-15);
  EXPECT_FALSE(reg);
}

TEST(Mixture, DegenerateCovarianceIsRegularized) {
  const std::vector<double> x{1.0, 2.0, 1.0, 2.0}, w{1.0, 1.0};
  bool reg = false;
  const auto mix = fit_mixture(x, w, 2, 1, nullptr, reg);
  EXPECT_TRUE(reg);
  EXPECT_TRUE(std::isfinite(mix.log_pdf(std::vector<double>{1.0, 2.0})));
}

TEST(Mixture, EmSeparatesClusters) {
  auto stream = make_stream(3, StreamPurpose::cross_entropy);
  std::vector<double> x, w;
  for (int i = 0; i < 4000; ++i) {
    x.push_back((i % 2 ? 3.0 : -3.0) + 0.5 * stream.normal());
    w.push_back(1.0);
  }
  bool reg = false;
  const auto mix = fit_mixture(x, w, 1, 2, nullptr, reg);
  ASSERT_EQ(mix.size(), 2u);
  std::vector<double> means{mix.component(0).mean[0], mix.component(1).mean[0]};
  std::sort(means.begin(), means.end());
  EXPECT_NEAR(means[0], -3.0, 0.05);
  EXPECT_NEAR(means[1], 3.0, 0.05);
  EXPECT_NEAR(mix.component(0).weight, 0.5, 0.03);
  const double mass = oracle::integrate([&](double v) { return std::exp(mix.log_pdf(std::vector<double>{v})); }, -10.0, 10.0, 400);
  EXPECT_NEAR(mass, 1.0, 1e-10);
}

TEST(Mixture, RejectsBadInput) {
  bool reg = false;
  EXPECT_THROW(fit_mixture(std::vector<double>{1.0}, std::vector<double>{1.0}, 1, 0, nullptr, reg), ConfigError);
  EXPECT_THROW(fit_mixture(std::vector<double>{1.0}, std::vector<double>{0.0}, 1, 1, nullptr, reg), NumericalError);
}

TEST(CrossEntropy, GaussianTargetConvergesImmediately) {
  const ProductReference ref(2, ReferenceDensity1D::truncated_normal(8.0));
  const Model model = [ref](std::span<const double> x) {
    ModelPoint m;
    m.log_prior = ref.log_pdf(x);
    return m;
  };
  CrossEntropyOptions o;
  o.samples_per_iteration = 20000;
  const auto r = cross_entropy_evidence(model, ref, o);
  EXPECT_LE(r.iterations, 2u);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.report.estimate, 1.0, 3.0 * r.report.std_error + 1e-12);
}

TEST(CrossEntropy, DiskArea) {
  const AnnulusProblem disk{{0.4, 0.4}, 0.0, 0.01};
  CrossEntropyOptions o;
  o.samples_per_iteration = 10000;
  o.seed = 2;
  const auto r = cross_entropy_event(disk.model(), disk.reference(), disk.event(), false, o);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.report.estimate / disk.exact_probability(), 1.0, 0.1);
  EXPECT_GT(r.report.n_evals, 0u);
}

TEST(CrossEntropy, ToyPosteriorProbability) {
  const ToyGaussianProblem toy{};
  CrossEntropyOptions o;
  o.samples_per_iteration = 20000;
  o.seed = 4;
  const auto r = cross_entropy_posterior_probability(toy.model(), toy.reference(), toy.event(), o);
  EXPECT_NEAR(r.ratio.estimate, toy.exact_ratio(), 3.0 * r.ratio.std_error);
  EXPECT_NEAR(r.denominator.report.estimate, toy.exact_evidence(), 3.0 * r.denominator.report.std_error);
}

TEST(CrossEntropy, OptionsValidated) {
  const ToyGaussianProblem toy{};
  CrossEntropyOptions o;
  o.elite_fraction = 1.5;
  EXPECT_THROW(cross_entropy_event(toy.model(), toy.reference(), toy.event(), false, o), ConfigError);
}

}  // namespace
}  // namespace ttdis
