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
#include <fstream>
#include <random>
#include <sstream>

#include "ttdis/error.hpp"
#include "ttdis/problems.hpp"

namespace ttdis {
namespace {

TEST(Annulus, IndicatorAndSmoothing) {
  const AnnulusProblem disk{{0.4, 0.4}, 0.0, 0.1};
  EXPECT_EQ(disk.indicator(std::vector<double>{0.4, 0.4}), 1.0);
  EXPECT_EQ(disk.indicator(std::vector<double>{0.6, 0.4}), 0.0);
  const double gamma = 1e3;
  const std::vector<double> edge{0.5, 0.4};
  EXPECT_NEAR(disk.squared_radius(edge), 0.01, 1e-15);
  EXPECT_NEAR(disk.smooth(gamma, edge), 0.5 / (1.0 + std::exp(-gamma * 0.01)), 1e-14);
  const AnnulusProblem ring{{0.4, 0.4}, 0.05, 0.1};
  EXPECT_EQ(ring.indicator(std::vector<double>{0.4, 0.4}), 0.0);
  EXPECT_EQ(ring.indicator(std::vector<double>{0.47, 0.4}), 1.0);
  EXPECT_THROW((AnnulusProblem{{0.4, 0.4}, 0.2, 0.1}.validate()), ConfigError);
}

TEST(Annulus, MonteCarloArea) {
  const AnnulusProblem ring{{0.4, 0.4}, 0.05, 0.1};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr std::size_t n = 10000000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x[2] = {u(rng), u(rng)};
    hits += ring.indicator(x) > 0.0;
  }
  const double p = ring.exact_probability();
  EXPECT_NEAR(p, M_PI * (0.01 - 0.0025), 1e-15);
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST(Sir, RhsExamples) {
  auto p = SirProblem::lattice(4);
  std::vector<double> state(12), rates(8, 0.0), dy(12);
  for (std::size_t k = 0; k < 4; ++k) {
    state[3 * k] = 50.0;
    state[3 * k + 1] = 3.0;
    state[3 * k + 2] = 1.0;
  }
  p.rhs(state, rates, dy);
  for (double v : dy) EXPECT_EQ(v, 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    for (auto& s : state) s = 50.0 * u(rng);
    for (auto& r : rates) r = u(rng);
    p.rhs(state, rates, dy);
    double total = 0.0;
    for (double v : dy) total += v;
    EXPECT_NEAR(total, 0.0, 1e-11);
  }

  const auto one = SirProblem::lattice(1);
  const std::vector<double> s1{90.0, 5.0, 5.0}, r1{0.3, 0.7};
  std::vector<double> d1(3);
  one.rhs(s1, r1, d1);
  EXPECT_NEAR(d1[0], -0.3 * 90.0 * 5.0, 1e-12);
  EXPECT_NEAR(d1[1], 0.3 * 90.0 * 5.0 - 0.7 * 5.0, 1e-12);
  EXPECT_NEAR(d1[2], 0.7 * 5.0, 1e-12);
}

TEST(Sir, TrajectoryProperties) {
  const auto still = SirProblem::lattice(1);
  const auto flat = still.simulate(std::vector<double>{0.0, 0.0});
  for (double v : flat.observations) EXPECT_EQ(v, 1.0);

  const auto decay = still.simulate(std::vector<double>{0.0, 1.0});
  EXPECT_NEAR(decay.observations.back(), std::exp(-5.0), 1e-6);

  const auto lattice = SirProblem::lattice(3);
  const std::vector<double> rates{0.3, 1.2, 0.05, 0.4, 0.2, 0.9};
  const auto t = lattice.simulate(rates);
  for (double time = 0.0; time <= 5.0; time += 0.01) {
    const auto y = t.solution.value(time);
    double total = 0.0;
    for (double v : y) {
      total += v;
      EXPECT_GE(v, -1e-9);
    }
    EXPECT_NEAR(total, 300.0, 1e-8);
  }
  // The running peak dominates every sampled value of the monitored compartment.
  for (double time = 0.0; time <= 5.0; time += 0.005) {
    EXPECT_LE(t.solution.value(time)[3 * lattice.monitored + 1], t.max_infected + 1e-9);
  }
}

TEST(Sir, LikelihoodExamples) {
  auto p = SirProblem::lattice(1);
  const std::vector<double> x{0.1, 1.0};
  p.data = p.generate_data(x, 0, false);
  EXPECT_NEAR(p.log_likelihood(x), 0.0, 1e-12);
  for (std::size_t j = 0; j < p.data.size(); ++j) {
    auto q = p;
    q.data[j] += 0.3;
    EXPECT_LT(q.log_likelihood(x), p.log_likelihood(x));
  }
}

TEST(Sir, LikelihoodStableUnderTighterTolerance) {
  auto p = SirProblem::lattice(2);
  p.data = p.generate_data(std::vector<double>{0.1, 1.0, 0.1, 1.0}, 5);
  const std::vector<double> a{0.15, 0.8, 0.05, 1.3}, b{0.3, 0.5, 0.2, 0.9};
  auto tight = p;
  tight.ode.abs_tol = tight.ode.rel_tol = 1e-7;
  EXPECT_NEAR(p.log_likelihood(a) - p.log_likelihood(b), tight.log_likelihood(a) - tight.log_likelihood(b), 1e-4);
}

TEST(Sir, DataNoise) {
  const auto p = SirProblem::lattice(1);
  const std::vector<double> x{0.1, 1.0};
  EXPECT_EQ(p.generate_data(x, 42), p.generate_data(x, 42));
  const auto clean = p.generate_data(x, 0, false);
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 1667; ++seed) {
    const auto noisy = p.generate_data(x, seed);
    for (std::size_t j = 0; j < noisy.size(); ++j) {
      const double e = noisy[j] - clean[j];
      sum += e;
      sq += e * e;
      ++count;
    }
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sq / count - mean * mean);
  EXPECT_GE(count, 10000u);
  EXPECT_NEAR(sd, 1.0, 0.03);
}

TEST(Sir, PriorTransform) {
  const auto p = SirProblem::lattice(1);
  std::vector<double> x(2);
  p.prior_transform(std::vector<double>{0.0, -3.0}, x);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
  const std::vector<double> u{0.7, -1.3};
  const double h = 1e-6;
  std::vector<double> xp(2), xm(2);
  double log_fd = 0.0;
  for (int k = 0; k < 2; ++k) {
    auto up = u, dn = u;
    up[k] += h;
    dn[k] -= h;
    p.prior_transform(up, xp);
    p.prior_transform(dn, xm);
    log_fd += std::log((xp[k] - xm[k]) / (2 * h));
  }
  EXPECT_NEAR(std::exp(p.log_prior_jacobian(u) - log_fd), 1.0, 1e-6);
}

TEST(Sir, AdjacencyFiles) {
  std::istringstream in("# ring\ncompartments 3\nedge 1 2\nedge 2 3\n");
  const auto adj = read_adjacency(in);
  ASSERT_EQ(adj.size(), 3u);
  EXPECT_EQ(adj[1], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(adj[0], (std::vector<std::size_t>{1}));
  std::istringstream bad("compartments 2\nedge 1 3\n");
  EXPECT_THROW(read_adjacency(bad), ConfigError);

  const auto austria = load_adjacency(std::string(TTDIS_SOURCE_DIR) + "/configs/austria.adj");
  ASSERT_EQ(austria.size(), 9u);
  for (std::size_t k = 0; k < 9; ++k) {
    for (std::size_t j : austria[k]) {
      EXPECT_NE(j, k);
      EXPECT_NE(std::find(austria[j].begin(), austria[j].end(), k), austria[j].end());
    }
  }
  EXPECT_EQ(SirProblem::periodic_lattice(1)[0].size(), 0u);
  EXPECT_EQ(SirProblem::periodic_lattice(5)[0], (std::vector<std::size_t>{1, 4}));
}

TEST(Sir, DataCsvRoundTrip) {
  const std::vector<double> data{1.5, 2.25, -0.125, 4.0, 5.5, 6.0};
  std::ostringstream out;
  write_data_csv(out, data, 2, 3);
  std::istringstream in(out.str());
  EXPECT_EQ(read_data_csv(in, 2, 3), data);
  std::istringstream missing("compartment,time_index,value\n1,1,0.5\n");
  EXPECT_THROW(read_data_csv(missing, 1, 2), ConfigError);
}

}  // namespace
}  // namespace ttdis
