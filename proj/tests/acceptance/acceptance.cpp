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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any
// failure. Every tolerance is a named constant below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "ttdis/dirt.hpp"
#include "ttdis/estimators.hpp"
#include "ttdis/experiment.hpp"
#include "ttdis/problems.hpp"
#include "ttdis/sirt.hpp"

namespace {

using namespace ttdis;
using Clock = std::chrono::steady_clock;

// Criterion 1
constexpr double kDiskRelError = 0.01;
constexpr double kDiskHellinger = 0.35;
constexpr double kDiskSeconds = 60.0;
// Criterion 2
constexpr double kAnnulusRelError = 0.01;
constexpr double kAnnulusHellinger = 0.40;
constexpr std::size_t kAnnulusEvaluations = 3 * 3510;
constexpr double kAnnulusSeconds = 180.0;
// Criterion 3
constexpr double kZetaTol = 1e-10;
constexpr double kRoundTripTol = 1e-7;
constexpr double kJacobianClosedTol = 1e-8;
constexpr double kJacobianFdTol = 1e-4;
// Criterion 5
constexpr double kCompositeRelTol = 1e-3;
constexpr double kMassTol = 1e-4;
// Criterion 6
constexpr double kSlopeLow = -0.65;
constexpr double kSlopeHigh = -0.35;
// Criterion 7
constexpr double kRatioSigmas = 3.0;
constexpr double kBiasFactor = 3.0;
constexpr std::size_t kBiasReplicates = 2000;
constexpr double kRatioSeconds = 120.0;
// Criterion 8
constexpr double kSirRelStd = 0.05;
constexpr double kSirSigmas = 3.0;
constexpr double kSirLow = 1e-5;
constexpr double kSirHigh = 1e-4;
constexpr double kSirSeconds = 600.0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string source_path(const std::string& rel) { return std::string(TTDIS_SOURCE_DIR) + "/" + rel; }

ExperimentConfig config_at(const std::string& rel) {
  auto c = load_config(source_path(rel));
  c.threads = 1;
  return c;
}

ProductReference normal_ref(std::size_t d) { return ProductReference(d, ReferenceDensity1D::truncated_normal(3.0)); }
ProductReference uniform_ref(std::size_t d) { return ProductReference(d, ReferenceDensity1D::uniform(0.0, 1.0)); }

FunctionalTT random_tt(const ProductReference& ref, std::size_t n, std::size_t r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const std::size_t d = ref.dimension();
  std::vector<CoreMatrix> cores;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t left = k == 0 ? 1 : r, right = k + 1 == d ? 1 : r;
    CoreMatrix c(static_cast<Eigen::Index>(left * n), static_cast<Eigen::Index>(right));
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = z(rng);
    cores.push_back(c);
  }
  return FunctionalTT(ref.uniform_bases(n), cores);
}

std::vector<double> reference_point(const ProductReference& ref, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> u(ref.dimension());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = ref[k].inverse_cdf(u01(rng));
  return u;
}

BridgingSchedule tempered(const LogDensity& target, const std::vector<double>& betas) {
  BridgingSchedule s;
  for (double b : betas) s.layers.push_back({[target, b](std::span<const double> x) { return b * target(x); }, b, 0.0});
  return s;
}

DirtOptions dirt_options(const ProductReference& ref, std::size_t n, std::size_t rank, std::uint64_t seed) {
  DirtOptions o;
  o.bases = ref.uniform_bases(n);
  o.cross.max_rank = rank;
  o.cross.initial_rank = rank;
  o.cross.rank_increment = 0;
  o.cross.sweeps = 2;
  o.cross.residual_samples = 100;
  o.cross.seed = seed;
  return o;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

Outcome reproduce(const std::string& rel, double rel_tol, double hell_tol, std::size_t max_evals, double max_seconds) {
  const auto start = Clock::now();
  const auto config = config_at(rel);
  const auto setup = make_problem(config);
  const auto built = build(config, setup);
  const auto r = estimate(config, setup, built);
  const double elapsed = seconds_since(start);
  Outcome o;
  o.check(r.rel_error_mean <= rel_tol,
          fmt("mean relative error %.4g +- %.2g <= %.3g", r.rel_error_mean, r.rel_error_std, rel_tol));
  o.check(r.d_hell_mean <= hell_tol, fmt("D_H %.4g +- %.2g <= %.3g", r.d_hell_mean, r.d_hell_std, hell_tol));
  if (max_evals > 0) {
    o.check(r.n_tt <= max_evals, fmt("density evaluations %.0f <= %.0f", double(r.n_tt), double(max_evals)));
  } else {
    o.detail += fmt("; density evaluations %.0f", double(r.n_tt));
  }
  o.detail += fmt("; estimate %.6g vs %.6g", r.summary.mean, *setup.truth);
  o.check(elapsed <= max_seconds, fmt("runtime %.1f s <= %.0f s", elapsed, max_seconds));
  return o;
}

Outcome criterion1() { return reproduce("configs/disk.json", kDiskRelError, kDiskHellinger, 0, kDiskSeconds); }

Outcome criterion2() {
  return reproduce("configs/annulus.json", kAnnulusRelError, kAnnulusHellinger, kAnnulusEvaluations, kAnnulusSeconds);
}

Outcome criterion3() {
  Outcome o;
  // zeta is the Lebesgue integral of g^2 + tau lambda over the domain; g is
  // exactly representable in each case.
  const auto linear = FunctionalTT::separable(normal_ref(2).uniform_bases(9),
                                              {[](double x) { return 0.5 + 2.0 * x; }, [](double) { return 1.0; }});
  const auto x_only = FunctionalTT::separable(uniform_ref(3).uniform_bases(5), {[](double) { return 1.0; },
                                                                                  [](double y) { return y; },
                                                                                  [](double) { return 1.0; }});
  // int_{-3}^{3} (0.5 + 2x)^2 dx = 1.5 + 72, times the width 6 of the second coordinate.
  const double linear_zeta = (1.5 + 72.0) * 6.0;
  const std::vector<std::pair<double, double>> zetas{
      {SIRT(FunctionalTT::constant(uniform_ref(2).uniform_bases(4), 1.0), 0.0, uniform_ref(2)).zeta(), 1.0},
      {SIRT(FunctionalTT::constant(normal_ref(3).uniform_bases(7), 2.0), 0.5, normal_ref(3)).zeta(), 4.0 * 216.0 + 0.5},
      {SIRT(x_only, 0.0, uniform_ref(3)).zeta(), 1.0 / 3.0},
      {SIRT(linear, 0.0, normal_ref(2)).zeta(), linear_zeta},
      {SIRT(linear, 0.1, normal_ref(2)).zeta(), linear_zeta + 0.1},
  };
  double zeta_err = 0.0;
  for (const auto& [got, want] : zetas) zeta_err = std::max(zeta_err, std::abs(got - want) / want);
  o.check(zeta_err <= kZetaTol, fmt("max relative zeta error %.2g <= %.0e", zeta_err, kZetaTol));

  std::mt19937_64 rng(3);
  {
    const auto ref = normal_ref(5);
    const SIRT s(random_tt(ref, 11, 3, 18), 1e-3, ref);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto u = reference_point(ref, rng);
      std::vector<double> x(5), back(5);
      s.irt(u, x);
      s.rt(x, back);
      for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(back[k] - u[k]));
    }
    o.check(worst <= kRoundTripTol, fmt("rt(irt(u)) error %.2g <= %.0e on 1000 points, d=5", worst, kRoundTripTol));
  }
  {
    // p(irt(u)) |grad irt(u)| / lambda(u), with |grad irt| from the triangular chain.
    const auto ref = normal_ref(4);
    const SIRT s(random_tt(ref, 9, 3, 21), 1e-3, ref);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto u = reference_point(ref, rng);
      std::vector<double> x(4);
      const double log_chain = s.irt(u, x);
      worst = std::max(worst, std::abs(std::exp(s.log_density(x) - log_chain) - 1.0));
    }
    o.check(worst <= kJacobianClosedTol, fmt("closed-form Jacobian identity %.2g <= %.0e", worst, kJacobianClosedTol));
  }
  double fd_worst = 0.0;
  for (std::size_t d = 1; d <= 3; ++d) {
    const auto ref = normal_ref(d);
    const SIRT s(random_tt(ref, 9, 2, 23 + d), 1e-2, ref);
    std::uniform_real_distribution<double> uu(-2.5, 2.5);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> u(d), x(d);
      for (auto& v : u) v = uu(rng);
      s.irt(u, x);
      const double det = oracle::fd_jacobian_det([&](auto a, auto b) { s.irt(a, b); }, u, 1e-6);
      fd_worst = std::max(fd_worst, std::abs(s.density(x) * det / std::exp(ref.log_pdf(u)) - 1.0));
    }
  }
  o.check(fd_worst <= kJacobianFdTol, fmt("finite-difference Jacobian identity %.2g <= %.0e, d<=3", fd_worst,
                                          kJacobianFdTol));
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto inst = oracle::perturbed_instance(eps);
    const double zeta_bound = std::sqrt(2.0) * inst.eps;
    const double hell_bound = 2.0 * inst.eps / std::sqrt(inst.zeta_star);
    o.check(inst.tau <= inst.eps * inst.eps * (1.0 + 1e-12) && std::abs(inst.zeta_star - inst.zeta) <= zeta_bound &&
                inst.d_hell <= hell_bound,
            fmt("eps %.0e: |zeta*-zeta| %.3g <= ", eps, std::abs(inst.zeta_star - inst.zeta)) +
                fmt("%.3g, D_H %.3g <= ", zeta_bound, inst.d_hell) + fmt("%.3g", hell_bound));
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  {
    const auto ref = normal_ref(2);
    const LogDensity banana = [](std::span<const double> x) {
      const double y = x[1] - 0.5 * x[0] * x[0] + 1.0;
      return -0.5 * x[0] * x[0] - 0.5 * y * y / 0.25;
    };
    const DIRT dirt = build_dirt(tempered(banana, {0.1, 0.3, 1.0}), ref, dirt_options(ref, 17, 4, 1));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uu(-2.5, 2.5);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> u{uu(rng), uu(rng)};
      std::vector<double> x(2);
      dirt.forward(u, x);
      const double det = oracle::fd_jacobian_det([&](auto a, auto b) { dirt.forward(a, b); }, u, 1e-6);
      const double log_lambda = ref.log_pdf(u);
      worst = std::max(worst, std::abs(dirt.log_density(x) + std::log(det) - log_lambda) / std::abs(log_lambda));
    }
    o.check(dirt.layer_count() == 3 && worst <= kCompositeRelTol,
            fmt("L=3 banana: max relative defect %.2g <= %.0e at 100 points", worst, kCompositeRelTol));
  }
  {
    const auto ref = normal_ref(1);
    const LogDensity bimodal = [](std::span<const double> x) {
      return std::log(std::exp(-2.0 * (x[0] - 1.2) * (x[0] - 1.2)) + 0.6 * std::exp(-3.0 * (x[0] + 1.0) * (x[0] + 1.0)));
    };
    const DIRT dirt = build_dirt(tempered(bimodal, {0.2, 0.5, 1.0}), ref, dirt_options(ref, 33, 1, 2));
    const double mass = oracle::integrate(
        [&](double x) { return std::exp(dirt.log_density(std::span<const double>(&x, 1))); }, -3.0, 3.0, 6000);
    o.check(dirt.layer_count() == 3 && std::abs(mass - 1.0) <= kMassTol,
            fmt("d=1, L=3: integral of pbar %.8f, |error| <= %.0e", mass, kMassTol));
  }
  return o;
}

Outcome criterion6() {
  std::vector<double> gammas{10.0, 100.0, 1000.0, 10000.0}, dh;
  for (double g : gammas) dh.push_back(oracle::smoothing_hellinger(g));
  const double slope = oracle::loglog_slope(gammas, dh);
  Outcome o;
  o.check(slope >= kSlopeLow && slope <= kSlopeHigh,
          fmt("slope %.4f in [%.2f, %.2f]", slope, kSlopeLow, kSlopeHigh) +
              fmt(" (D_H %.3g at gamma 10, %.3g at gamma 1e4)", dh.front(), dh.back()));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto start = Clock::now();
  const auto config = config_at("configs/toy.json");
  const auto setup = make_problem(config);
  const ToyGaussianProblem toy{config.toy.half_width, config.toy.observation, config.toy.noise_std,
                               config.toy.threshold};
  const double truth = toy.exact_ratio(), q_exact = toy.exact_numerator(), z_exact = toy.exact_evidence();

  // (a) full ladder, N = 2^14.
  const auto built = build(config, setup);
  SampleOptions so;
  so.n = 1 << 14;
  so.seed = config.seed;
  so.hellinger = false;
  const auto a = ratio_estimate(built.dirts[0], setup.log_target, built.dirts[1], setup.log_evidence,
                                CouplingSpec{config.estimator.coupling}, so);
  o.check(std::abs(a.ratio.estimate - truth) <= kRatioSigmas * a.ratio.std_error,
          fmt("(a) R %.6g vs %.6g within 3 x %.3g", a.ratio.estimate, truth, a.ratio.std_error));

  // Single-layer maps on a 17-point grid. Their weights vary enough (relative
  // variance near 0.1 for the evidence) for the 1/N bias to stand out of the
  // Monte Carlo noise and for the coupling to have something to cancel.
  auto cheap = config;
  cheap.schedule.beta_start = cheap.schedule.alpha_start = 1.0;
  cheap.cross.n = 17;
  const auto quick = build(cheap, setup);
  // (b) independent streams. The first-order part of R_hat - R has zero mean
  // and is removed with the exact Q and Z, leaving the O(1/N) bias.
  std::vector<double> scaled, raw;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    double bias = 0.0, plain = 0.0;
    for (std::size_t r = 0; r < kBiasReplicates; ++r) {
      SampleOptions s;
      s.n = n;
      s.seed = 77;
      s.replicate = r;
      s.hellinger = false;
      const auto rr = ratio_estimate(quick.dirts[0], setup.log_target, quick.dirts[1], setup.log_evidence,
                                     CouplingSpec{0.0}, s);
      const double linear = truth * (1.0 + (rr.numerator.estimate - q_exact) / q_exact -
                                     (rr.denominator.estimate - z_exact) / z_exact);
      bias += rr.ratio.estimate - linear;
      plain += rr.ratio.estimate - truth;
    }
    bias /= static_cast<double>(kBiasReplicates);
    plain /= static_cast<double>(kBiasReplicates);
    scaled.push_back(static_cast<double>(n) * bias / truth);
    raw.push_back(static_cast<double>(n) * plain / truth);
  }
  const bool same_sign = (scaled[0] > 0) == (scaled[1] > 0) && (scaled[1] > 0) == (scaled[2] > 0) && scaled[0] != 0.0;
  const double lo = std::min({std::abs(scaled[0]), std::abs(scaled[1]), std::abs(scaled[2])});
  const double hi = std::max({std::abs(scaled[0]), std::abs(scaled[1]), std::abs(scaled[2])});
  o.check(same_sign && hi <= kBiasFactor * lo,
          fmt("(b) N x relative bias %.3g, %.3g, %.3g", scaled[0], scaled[1], scaled[2]) +
              fmt(" spread %.2f <= %.0f", hi / lo, kBiasFactor) +
              fmt(" (uncorrected %.3g, %.3g, %.3g)", raw[0], raw[1], raw[2]));

  // (c) weakly varying f = exp(0.1 x), both integrals from the evidence map.
  const LogDensity log_fl = [&](std::span<const double> x) { return 0.1 * x[0] + setup.log_evidence(x); };
  double rel_std[2];
  for (int c = 0; c < 2; ++c) {
    std::vector<double> est;
    for (std::size_t r = 0; r < 20; ++r) {
      SampleOptions s;
      s.n = 4096;
      s.seed = 91;
      s.replicate = r;
      s.hellinger = false;
      est.push_back(ratio_estimate(quick.dirts[1], log_fl, quick.dirts[1], setup.log_evidence,
                                   CouplingSpec{c == 0 ? 1.0 : 0.0}, s)
                        .ratio.estimate);
    }
    rel_std[c] = summarize_replicates(est).rel_std;
  }
  o.check(rel_std[0] < rel_std[1], fmt("(c) replicate rel std a=1 %.3g < a=0 %.3g", rel_std[0], rel_std[1]));
  const double elapsed = seconds_since(start);
  o.check(elapsed <= kRatioSeconds, fmt("runtime %.1f s <= %.0f s", elapsed, kRatioSeconds));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto start = Clock::now();
  const auto config = config_at("configs/sir_k1.json");
  const auto setup = make_problem(config);
  const auto built = build(config, setup);
  const auto dis = estimate(config, setup, built);
  const auto ce = cross_entropy_baseline(config, setup);
  const double elapsed = seconds_since(start);
  const double combined = std::hypot(dis.summary.std, ce.summary.std);
  std::size_t layers = 0;
  for (const auto& d : built.dirts) layers = std::max(layers, d.layer_count());
  o.check(dis.summary.replicates == 10 && dis.summary.rel_std <= kSirRelStd,
          fmt("DIS %.5g +- %.3g, replicate rel std %.3g", dis.summary.mean, dis.summary.std, dis.summary.rel_std) +
              fmt(" <= %.2f (%.0f replicates, %.0f layers)", kSirRelStd, double(dis.summary.replicates),
                  double(layers)));
  o.check(std::abs(dis.summary.mean - ce.summary.mean) <= kSirSigmas * combined,
          fmt("CE %.5g +- %.3g over %.0f replicates", ce.summary.mean, ce.summary.std, double(ce.summary.replicates)) +
              fmt(", |difference| %.3g <= 3 x %.3g", std::abs(dis.summary.mean - ce.summary.mean), combined));
  o.check(dis.summary.mean >= kSirLow && dis.summary.mean <= kSirHigh,
          fmt("magnitude %.3g in [%.0e, %.0e]", dis.summary.mean, kSirLow, kSirHigh));
  o.check(elapsed <= kSirSeconds, fmt("runtime %.1f s <= %.0f s", elapsed, kSirSeconds));
  return o;
}

}  // namespace

// Optional arguments select criteria by number; the default runs all of them.
int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"1 disk", criterion1},
      {"2 annulus", criterion2},
      {"3 SIRT exactness", criterion3},
      {"4 perturbation bounds", criterion4},
      {"5 composite density", criterion5},
      {"6 smoothing rate", criterion6},
      {"7 ratio estimator", criterion7},
      {"8 SIR K=1", criterion8},
  };
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %s\n", argv[i]);
      return 2;
    }
    selected[static_cast<std::size_t>(k - 1)] = true;
  }
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (!selected[c]) continue;
    const auto& [name, run] = criteria[c];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
