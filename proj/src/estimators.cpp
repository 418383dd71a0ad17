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

#include "ttdis/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ttdis/error.hpp"
#include "ttdis/parallel.hpp"
#include "ttdis/random.hpp"

namespace ttdis {

namespace {

double max_finite(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw NumericalError("importance weight is not finite");
    }
    m = std::max(m, v);
  }
  return m;
}

std::vector<double> scaled_weights(std::span<const double> log_weights, double shift) {
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - shift);
  return w;
}

double mean_of(std::span<const double> values) {
  return pairwise_sum(values) / static_cast<double>(values.size());
}

// Centered second moment with 1/N.
double central_moment(std::span<const double> values, double mean) {
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  return mean_of(sq);
}

double cross_moment(std::span<const double> a, double mean_a, std::span<const double> b, double mean_b) {
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = (a[i] - mean_a) * (b[i] - mean_b);
  return mean_of(prod);
}

// Maps reference samples of one stream through the Gaussian copula coupling.
std::vector<double> coupled_reference(const ProductReference& reference, std::span<const double> xi_q,
                                      const CouplingSpec& coupling, std::uint64_t seed, std::uint64_t replicate) {
  const std::size_t d = reference.dimension();
  std::vector<double> u(xi_q.size());
  if (coupling.a == 1.0) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = reference[i % d].inverse_cdf(xi_q[i]);
    return u;
  }
  auto noise = make_stream(seed, StreamPurpose::coupling_noise, replicate);
  const double a = coupling.a;
  const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double g = a * normal_quantile(xi_q[i]) + b * noise.normal();
    u[i] = reference[i % d].inverse_cdf(normal_cdf(g));
  }
  return u;
}

std::vector<double> reference_uniforms(std::size_t count, std::uint64_t seed, std::uint64_t replicate) {
  auto stream = make_stream(seed, StreamPurpose::reference_samples, replicate);
  std::vector<double> xi(count);
  for (auto& v : xi) v = stream.uniform();
  return xi;
}

RatioReport combine_ratio(std::span<const double> log_wq, std::span<const double> log_wz, const SampleOptions& options) {
  RatioReport report;
  report.numerator = summarize_log_weights(log_wq);
  report.denominator = summarize_log_weights(log_wz);
  report.numerator.seed = report.denominator.seed = report.ratio.seed = options.seed;
  report.numerator.replicate = report.denominator.replicate = report.ratio.replicate = options.replicate;
  report.numerator.n_evals = log_wq.size();
  report.denominator.n_evals = log_wz.size();
  if (options.hellinger) {
    for (auto [lw, rep] : {std::pair{log_wq, &report.numerator}, std::pair{log_wz, &report.denominator}}) {
      if (rep->degenerate) continue;
      const auto h = hellinger_from_log_weights(lw);
      rep->d_hell = h.value;
      rep->d_hell_se = h.std_error;
    }
  }

  auto& r = report.ratio;
  r.n = log_wq.size();
  r.n_evals = report.numerator.n_evals + report.denominator.n_evals;
  const double q = report.numerator.estimate;
  const double z = report.denominator.estimate;
  if (!(z > 0.0)) {
    r.degenerate = true;
    return report;
  }
  r.estimate = q / z;
  r.weight_mean = r.estimate;
  r.ess = report.numerator.ess;
  if (!(q > 0.0)) {
    r.degenerate = report.numerator.degenerate;
    return report;
  }
  const double mq = max_finite(log_wq), mz = max_finite(log_wz);
  const auto wq = scaled_weights(log_wq, mq);
  const auto wz = scaled_weights(log_wz, mz);
  const double meanq = mean_of(wq), meanz = mean_of(wz);
  const double n = static_cast<double>(r.n);
  const double bessel = n / (n - 1.0);
  const double cov_scaled = cross_moment(wq, meanq, wz, meanz) * bessel;
  const double varq = central_moment(wq, meanq) * bessel;
  const double varz = central_moment(wz, meanz) * bessel;
  report.covariance = cov_scaled * std::exp(mq + mz);
  const double rel_var =
      (varq / (meanq * meanq) + varz / (meanz * meanz) - 2.0 * cov_scaled / (meanq * meanz)) / n;
  r.rel_std = std::sqrt(std::max(0.0, rel_var));
  r.std_error = r.rel_std * r.estimate;
  return report;
}

}  // namespace

void CouplingSpec::validate() const {
  if (!(a >= -1.0 && a <= 1.0)) throw ConfigError("coupling coefficient must lie in [-1, 1]");
}

double ess(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

double ess_log(std::span<const double> log_weights) {
  if (log_weights.empty()) return 0.0;
  const double m = max_finite(log_weights);
  if (!std::isfinite(m)) return 0.0;
  const auto w = scaled_weights(log_weights, m);
  std::vector<double> w2(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w2[i] = w[i] * w[i];
  const double s = pairwise_sum(w);
  return s * s / pairwise_sum(w2);
}

double log_mean_exp(std::span<const double> log_values) {
  if (log_values.empty()) throw DomainError("log_mean_exp of an empty sample");
  const double m = max_finite(log_values);
  if (!std::isfinite(m)) return m;
  return m + std::log(mean_of(scaled_weights(log_values, m)));
}

HellingerEstimate hellinger_from_log_weights(std::span<const double> log_weights) {
  HellingerEstimate h;
  const double m = log_weights.empty() ? -INFINITY : max_finite(log_weights);
  if (!std::isfinite(m) || log_weights.size() < 2) {
    h.degenerate = true;
    h.value = 1.0;
    return h;
  }
  const auto w = scaled_weights(log_weights, m);
  std::vector<double> root(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) root[i] = std::sqrt(w[i]);
  const double a = mean_of(root);
  const double b = mean_of(w);
  const double d2 = std::clamp(1.0 - a / std::sqrt(b), 0.0, 1.0);
  h.value = std::sqrt(d2);
  // Delta method on g(a, b) = 1 - a b^{-1/2}.
  const double n = static_cast<double>(w.size());
  const double ga = -1.0 / std::sqrt(b);
  const double gb = 0.5 * a / (b * std::sqrt(b));
  const double var_a = central_moment(root, a);
  const double var_b = central_moment(w, b);
  const double cov_ab = cross_moment(root, a, w, b);
  const double var_d2 = (ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov_ab) / (n - 1.0);
  const double se_d2 = std::sqrt(std::max(0.0, var_d2));
  h.std_error = h.value > 0.0 ? se_d2 / (2.0 * h.value) : std::sqrt(se_d2);
  return h;
}

EstimatorReport summarize_log_weights(std::span<const double> log_weights) {
  EstimatorReport r;
  r.n = log_weights.size();
  if (r.n < 2) throw DomainError("an estimate needs at least two samples");
  const double m = max_finite(log_weights);
  if (!std::isfinite(m)) {
    r.degenerate = true;
    return r;
  }
  const auto w = scaled_weights(log_weights, m);
  const double mean = mean_of(w);
  const double var = central_moment(w, mean);
  const double n = static_cast<double>(r.n);
  const double scale = std::exp(m);
  r.estimate = scale * mean;
  r.weight_mean = r.estimate;
  r.weight_rel_var = var / (mean * mean);
  r.std_error = scale * std::sqrt(var / (n - 1.0));
  r.rel_std = std::sqrt(var / (n - 1.0)) / mean;
  r.ess = n / (1.0 + r.weight_rel_var);
  if (!std::isfinite(r.estimate)) throw NumericalError("importance-sampling estimate overflowed");
  return r;
}

std::vector<double> sample_reference(const ProductReference& reference, std::size_t n, std::uint64_t seed,
                                     std::uint64_t replicate) {
  const std::size_t d = reference.dimension();
  auto xi = reference_uniforms(n * d, seed, replicate);
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = reference[i % d].inverse_cdf(xi[i]);
  return xi;
}

std::vector<double> log_weights(const DIRT& dirt, const LogDensity& log_rho_star, std::span<const double> u,
                                std::size_t threads) {
  const std::size_t d = dirt.dimension();
  const std::size_t n = u.size() / d;
  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto ui = u.subspan(i * d, d);
    std::vector<double> x(d);
    const double log_det = dirt.forward(ui, x);
    const double target = log_rho_star(x);
    if (std::isnan(target) || target == std::numeric_limits<double>::infinity()) {
      throw NumericalError("target density is not finite at " + format_point(x));
    }
    out[i] = target - dirt.reference().log_pdf(ui) + log_det;
  });
  return out;
}

EstimatorReport dis_estimate(const DIRT& dirt, const LogDensity& log_rho_star, const SampleOptions& options) {
  const auto u = sample_reference(dirt.reference(), options.n, options.seed, options.replicate);
  const auto lw = log_weights(dirt, log_rho_star, u, options.threads);
  EstimatorReport r = summarize_log_weights(lw);
  r.n_evals = options.n;
  r.seed = options.seed;
  r.replicate = options.replicate;
  if (options.hellinger && !r.degenerate) {
    const auto h = hellinger_from_log_weights(lw);
    r.d_hell = h.value;
    r.d_hell_se = h.std_error;
  }
  return r;
}

HellingerEstimate hellinger_estimate(const DIRT& dirt, const LogDensity& log_rho_star, const SampleOptions& options) {
  if (options.n < 100) throw DomainError("Hellinger estimate needs at least 100 samples");
  auto stream = make_stream(options.seed, StreamPurpose::hellinger, options.replicate);
  const std::size_t d = dirt.dimension();
  std::vector<double> u(options.n * d);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = dirt.reference()[i % d].inverse_cdf(stream.uniform());
  return hellinger_from_log_weights(log_weights(dirt, log_rho_star, u, options.threads));
}

RatioReport ratio_estimate(const DIRT& dirt_p, const LogDensity& log_numerator, const DIRT& dirt_q,
                           const LogDensity& log_denominator, const CouplingSpec& coupling,
                           const SampleOptions& options) {
  coupling.validate();
  if (dirt_p.dimension() != dirt_q.dimension() || !(dirt_p.reference() == dirt_q.reference())) {
    throw DomainError("ratio estimate: both maps must share the reference");
  }
  const std::size_t d = dirt_q.dimension();
  const auto xi = reference_uniforms(options.n * d, options.seed, options.replicate);
  std::vector<double> u_q(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) u_q[i] = dirt_q.reference()[i % d].inverse_cdf(xi[i]);
  const auto u_p = coupled_reference(dirt_p.reference(), xi, coupling, options.seed, options.replicate);
  const auto lwq = log_weights(dirt_p, log_numerator, u_p, options.threads);
  const auto lwz = log_weights(dirt_q, log_denominator, u_q, options.threads);
  return combine_ratio(lwq, lwz, options);
}

RatioReport self_normalized_estimate(const DIRT& dirt_q, const LogDensity& log_numerator,
                                     const LogDensity& log_denominator, const SampleOptions& options) {
  const auto u = sample_reference(dirt_q.reference(), options.n, options.seed, options.replicate);
  const std::size_t d = dirt_q.dimension();
  const std::size_t n = options.n;
  std::vector<double> lwq(n), lwz(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const auto ui = std::span<const double>(u).subspan(i * d, d);
    std::vector<double> x(d);
    const double log_proposal = dirt_q.reference().log_pdf(ui) - dirt_q.forward(ui, x);
    lwq[i] = log_numerator(x) - log_proposal;
    lwz[i] = log_denominator(x) - log_proposal;
  });
  RatioReport report = combine_ratio(lwq, lwz, options);
  // Shared samples cost one target evaluation each.
  report.ratio.n_evals = n;
  return report;
}

ReplicateSummary summarize_replicates(std::span<const double> estimates, std::optional<double> truth) {
  ReplicateSummary s;
  s.replicates = estimates.size();
  if (estimates.empty()) throw DomainError("no replicates to summarize");
  s.mean = mean_of(estimates);
  const double var_pop = central_moment(estimates, s.mean);
  const double m = static_cast<double>(estimates.size());
  s.std = estimates.size() > 1 ? std::sqrt(var_pop * m / (m - 1.0)) : 0.0;
  s.rel_std = s.mean != 0.0 ? s.std / std::abs(s.mean) : 0.0;
  s.truth = truth;
  const double reference = truth ? *truth : s.mean;
  if (reference != 0.0) {
    s.rel_var = var_pop / (reference * reference);
    s.rel_bias = (s.mean - reference) / reference;
    std::vector<double> sq(estimates.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (estimates[i] - reference) * (estimates[i] - reference);
    s.rel_mse = mean_of(sq) / (reference * reference);
  }
  return s;
}

}  // namespace ttdis
