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

#ifndef TTDIS_ESTIMATORS_HPP
#define TTDIS_ESTIMATORS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ttdis/dirt.hpp"

namespace ttdis {

/// Result of one importance-sampling run.
struct EstimatorReport {
  double estimate = 0.0;
  std::size_t n = 0;
  /// Standard error of `estimate` from the sample variance of the weights.
  double std_error = 0.0;
  /// std_error / estimate for a single run; replicate summaries overwrite it
  /// with the spread across replicates.
  double rel_std = 0.0;
  double weight_mean = 0.0;
  /// var(w) / mean(w)^2 with the 1/N variance.
  double weight_rel_var = 0.0;
  double ess = 0.0;
  std::optional<double> d_hell;
  double d_hell_se = 0.0;
  std::size_t n_evals = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  /// Set when every weight vanished or the diagnostics are undefined.
  bool degenerate = false;
};

/// Ratio estimate Q/Z with the two component reports.
struct RatioReport {
  EstimatorReport ratio;
  EstimatorReport numerator;
  EstimatorReport denominator;
  /// Sample covariance of the paired numerator and denominator weights.
  double covariance = 0.0;
};

/// Correlation of the two reference streams, U_p = a U_q + sqrt(1 - a^2) eps,
/// applied in Gaussian copula space so both marginals stay equal to the
/// reference.
struct CouplingSpec {
  double a = 0.0;
  void validate() const;
};

/// (sum w)^2 / sum w^2; 0 when every weight is zero.
double ess(std::span<const double> weights);
/// Same from log-weights, stable for weights spanning many orders of magnitude.
double ess_log(std::span<const double> log_weights);

/// log of mean(exp(v)) with pairwise summation.
double log_mean_exp(std::span<const double> log_values);

/// Self-normalized Hellinger distance estimate from unnormalized log-weights
/// target/proposal at proposal samples: sqrt(max(0, 1 - mean(sqrt w) /
/// sqrt(mean w))) with a delta-method standard error.
struct HellingerEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool degenerate = false;
};
HellingerEstimate hellinger_from_log_weights(std::span<const double> log_weights);

/// Summary of an importance-sampling run from its log-weights.
EstimatorReport summarize_log_weights(std::span<const double> log_weights);

/// Draws n reference samples from stream (seed, purpose, replicate), row-major.
std::vector<double> sample_reference(const ProductReference& reference, std::size_t n, std::uint64_t seed,
                                     std::uint64_t replicate = 0);

struct SampleOptions {
  std::size_t n = 1024;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::size_t threads = 1;
  /// Also estimate the Hellinger distance to the target from the same samples.
  bool hellinger = true;
};

/// log w_i = log rho*(T(u_i)) - log pbar(T(u_i)) for the given reference
/// samples, using log pbar(T(u)) = log lambda(u) - log|grad T(u)|.
std::vector<double> log_weights(const DIRT& dirt, const LogDensity& log_rho_star, std::span<const double> u,
                                std::size_t threads = 1);

/// Deep importance sampling estimate of the integral of rho*.
EstimatorReport dis_estimate(const DIRT& dirt, const LogDensity& log_rho_star, const SampleOptions& options);

/// Hellinger distance between pbar and rho* / integral(rho*), from samples of pbar.
HellingerEstimate hellinger_estimate(const DIRT& dirt, const LogDensity& log_rho_star, const SampleOptions& options);

/// Ratio estimator: numerator integral of log_numerator with samples of
/// dirt_p, denominator integral of log_denominator with samples of dirt_q,
/// coupled through `coupling`.
RatioReport ratio_estimate(const DIRT& dirt_p, const LogDensity& log_numerator, const DIRT& dirt_q,
                           const LogDensity& log_denominator, const CouplingSpec& coupling,
                           const SampleOptions& options);

/// Self-normalized variant sharing the samples of dirt_q for both integrals.
RatioReport self_normalized_estimate(const DIRT& dirt_q, const LogDensity& log_numerator,
                                     const LogDensity& log_denominator, const SampleOptions& options);

/// Spread of replicate estimates. Variance and mse use 1/M so that
/// rel_mse = rel_var + rel_bias^2 holds exactly; `std` uses 1/(M - 1).
struct ReplicateSummary {
  std::size_t replicates = 0;
  double mean = 0.0;
  double std = 0.0;
  double rel_std = 0.0;
  std::optional<double> truth;
  double rel_bias = 0.0;
  double rel_var = 0.0;
  double rel_mse = 0.0;
};
ReplicateSummary summarize_replicates(std::span<const double> estimates, std::optional<double> truth = std::nullopt);

}  // namespace ttdis

#endif  // TTDIS_ESTIMATORS_HPP
