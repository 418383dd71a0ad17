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
#include <limits>

#include "ttdis/error.hpp"
#include "ttdis/estimators.hpp"
#include "ttdis/problems.hpp"
#include "ttdis/random.hpp"

namespace ttdis {
namespace {

TEST(Ess, Examples) {
  EXPECT_DOUBLE_EQ(ess(std::vector<double>(10, 3.0)), 10.0);
  EXPECT_DOUBLE_EQ(ess(std::vector<double>{0.0, 0.0, 4.0, 0.0}), 1.0);
  EXPECT_NEAR(ess(std::vector<double>{1.0, 1.0, 2.0}), 16.0 / 6.0, 1e-15);
  EXPECT_EQ(ess(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_NEAR(ess_log(std::vector<double>{-700.0, -700.0, -700.0 + std::log(2.0)}), 16.0 / 6.0, 1e-12);
}

TEST(LogMeanExp, Stable) {
  EXPECT_NEAR(log_mean_exp(std::vector<double>{-1000.0, -1000.0}), -1000.0, 1e-12);
  EXPECT_NEAR(log_mean_exp(std::vector<double>{0.0, std::log(3.0)}), std::log(2.0), 1e-15);
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_mean_exp(std::vector<double>{ninf, ninf}), ninf);
}

TEST(Hellinger, IdenticalDensities) {
  const auto h = hellinger_from_log_weights(std::vector<double>(500, -3.2));
  EXPECT_EQ(h.value, 0.0);
}

TEST(Hellinger, GaussianPair) {
  // Samples of N(0,1) weighted towards N(1,1).
  auto stream = make_stream(1, StreamPurpose::hellinger);
  std::vector<double> lw(100000);
  for (auto& v : lw) v = stream.normal() - 0.5;
  const auto h = hellinger_from_log_weights(lw);
  const double exact = std::sqrt(1.0 - std::exp(-1.0 / 8.0));
  EXPECT_NEAR(h.value, exact, 3.0 * h.std_error);
  EXPECT_GE(h.value, 0.0);
  EXPECT_LE(h.value, 1.0);
}

TEST(Dis, ZeroVarianceForExactProposal) {
  const ProductReference ref(2, ReferenceDensity1D::truncated_normal(3.0));
  const DIRT identity(ref);
  SampleOptions so;
  so.n = 512;
  const auto r = dis_estimate(identity, [&](std::span<const double> x) { return ref.log_pdf(x); }, so);
  EXPECT_NEAR(r.estimate, 1.0, 1e-14);
  EXPECT_NEAR(r.weight_rel_var, 0.0, 1e-14);
  EXPECT_NEAR(r.ess, 512.0, 1e-9);
  EXPECT_NEAR(*r.d_hell, 0.0, 1e-7);
  EXPECT_EQ(r.n_evals, 512u);
}

TEST(Dis, AllZeroWeightsAreDegenerate) {
  const ProductReference ref(1, ReferenceDensity1D::uniform(0.0, 1.0));
  SampleOptions so;
  so.n = 64;
  const auto r = dis_estimate(DIRT(ref), [](auto) { return -std::numeric_limits<double>::infinity(); }, so);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_TRUE(r.degenerate);
}

TEST(Dis, WorkerCountDoesNotChangeResults) {
  const ProductReference ref(3, ReferenceDensity1D::truncated_normal(3.0));
  const LogDensity target = [](std::span<const double> x) { return -0.3 * (x[0] * x[0] + x[1] * x[2]); };
  SampleOptions so;
  so.n = 3000;
  so.seed = 4;
  const auto a = dis_estimate(DIRT(ref), target, so);
  so.threads = 3;
  const auto b = dis_estimate(DIRT(ref), target, so);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(*a.d_hell, *b.d_hell);
}

// Posterior maps for the conjugate toy built once for the suite.
class Toy : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    problem_ = new ToyGaussianProblem{};
    const auto model = problem_->model();
    DirtOptions o;
    o.bases = problem_->reference().uniform_bases(129);
    o.cross.max_rank = o.cross.initial_rank = 1;
    o.cross.sweeps = 1;
    o.cross.residual_samples = 100;
    evidence_ = new DIRT(build_dirt(posterior_denominator_bridging(model, {0.1, 1.0}), problem_->reference(), o));
  }
  static void TearDownTestSuite() {
    delete evidence_;
    delete problem_;
  }
  static LogDensity log_evidence() {
    const auto model = problem_->model();
    return [model](std::span<const double> x) {
      const auto m = model(x);
      return m.log_prior + m.log_likelihood;
    };
  }
  static ToyGaussianProblem* problem_;
  static DIRT* evidence_;
};
ToyGaussianProblem* Toy::problem_ = nullptr;
DIRT* Toy::evidence_ = nullptr;

TEST_F(Toy, EvidenceEstimateIsUnbiased) {
  std::vector<double> est;
  SampleOptions so;
  so.n = 1024;
  so.hellinger = false;
  for (std::uint64_t r = 0; r < 200; ++r) {
    so.replicate = r;
    est.push_back(dis_estimate(*evidence_, log_evidence(), so).estimate);
  }
  const auto s = summarize_replicates(est);
  EXPECT_NEAR(s.mean, problem_->exact_evidence(), 3.0 * s.std / std::sqrt(200.0));
}

TEST_F(Toy, RelativeSpreadFallsAsRootN) {
  std::vector<double> scaled;
  for (std::size_t n : {1024, 4096, 16384}) {
    std::vector<double> est;
    SampleOptions so;
    so.n = n;
    so.hellinger = false;
    so.seed = 7;
    for (std::uint64_t r = 0; r < 40; ++r) {
      so.replicate = r;
      est.push_back(dis_estimate(*evidence_, log_evidence(), so).estimate);
    }
    scaled.push_back(summarize_replicates(est).rel_std * std::sqrt(static_cast<double>(n)));
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  EXPECT_LE(*hi / *lo, 1.5);
}

TEST_F(Toy, IdenticalStreamsGiveUnitRatio) {
  SampleOptions so;
  so.n = 777;
  const auto r = ratio_estimate(*evidence_, log_evidence(), *evidence_, log_evidence(), CouplingSpec{1.0}, so);
  EXPECT_DOUBLE_EQ(r.ratio.estimate, 1.0);
  const auto sn = self_normalized_estimate(*evidence_, log_evidence(), log_evidence(), so);
  EXPECT_DOUBLE_EQ(sn.ratio.estimate, 1.0);
}

TEST_F(Toy, RatioMatchesClosedForm) {
  // Event weights under the posterior map, whose tail is light but nonzero.
  const auto model = problem_->model();
  const auto event = problem_->event();
  const LogDensity numerator = [model, event](std::span<const double> x) {
    const auto m = model(x);
    return event.indicator(m.response) > 0.0 ? m.log_prior + m.log_likelihood : -INFINITY;
  };
  SampleOptions so;
  so.n = 1 << 16;
  so.seed = 3;
  const auto r = ratio_estimate(*evidence_, numerator, *evidence_, log_evidence(), CouplingSpec{0.5}, so);
  EXPECT_NEAR(r.ratio.estimate, problem_->exact_ratio(), 3.0 * r.ratio.std_error);
  EXPECT_NEAR(r.denominator.estimate, problem_->exact_evidence(), 3.0 * r.denominator.std_error);
}

TEST(Coupling, Validates) {
  EXPECT_THROW(CouplingSpec{1.5}.validate(), ConfigError);
  EXPECT_NO_THROW(CouplingSpec{-1.0}.validate());
}

TEST(ReplicateSummary, Decomposition) {
  const std::vector<double> est{1.02, 0.97, 1.05, 0.99, 1.01};
  const auto s = summarize_replicates(est, 1.0);
  EXPECT_NEAR(s.rel_mse, s.rel_var + s.rel_bias * s.rel_bias, 1e-15);
  EXPECT_NEAR(s.mean, 1.008, 1e-15);
  const auto one = summarize_replicates(std::vector<double>{2.5});
  EXPECT_EQ(one.std, 0.0);
  EXPECT_EQ(one.rel_std, 0.0);
  EXPECT_THROW(summarize_replicates(std::vector<double>{}), DomainError);
}

TEST(Sampling, ReferenceStreamsAreReproducible) {
  const ProductReference ref(2, ReferenceDensity1D::truncated_normal(3.0));
  const auto a = sample_reference(ref, 100, 5, 2);
  EXPECT_EQ(a, sample_reference(ref, 100, 5, 2));
  EXPECT_NE(a, sample_reference(ref, 100, 5, 3));
  for (double v : a) {
    EXPECT_GE(v, -3.0);
    EXPECT_LE(v, 3.0);
  }
}

}  // namespace
}  // namespace ttdis
