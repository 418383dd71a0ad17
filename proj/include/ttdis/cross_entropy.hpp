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

#ifndef TTDIS_CROSS_ENTROPY_HPP
#define TTDIS_CROSS_ENTROPY_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ttdis/basis.hpp"
#include "ttdis/estimators.hpp"
#include "ttdis/random.hpp"
#include "ttdis/rare_event.hpp"

namespace ttdis {

/// Gaussian mixture proposal.
class GaussianMixture {
 public:
  struct Component {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
  };

  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<Component> components);

  std::size_t dimension() const { return components_.front().mean.size(); }
  std::size_t size() const { return components_.size(); }
  const Component& component(std::size_t j) const { return components_[j]; }

  double log_pdf(std::span<const double> x) const;
  /// Per-component log weight + log density.
  Eigen::VectorXd component_log_pdf(std::span<const double> x) const;
  void sample(RandomStream& stream, std::span<double> x) const;

 private:
  std::vector<Component> components_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_norm_;
};

struct CrossEntropyOptions {
  std::size_t components = 1;
  std::size_t samples_per_iteration = 10000;
  /// Samples for the final estimate; 0 uses samples_per_iteration.
  std::size_t final_samples = 0;
  double elite_fraction = 0.1;
  std::size_t max_iterations = 50;
  /// Each tempering step keeps this fraction of the previous ESS.
  double ess_fraction = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::size_t threads = 1;
};

struct CrossEntropyResult {
  EstimatorReport report;
  GaussianMixture proposal;
  std::size_t iterations = 0;
  /// Some elite covariance needed the 1e-8 I regularization.
  bool regularized = false;
  /// The level never reached the event within the iteration cap.
  bool converged = true;
};

/// Weighted EM fit of a K-component mixture. With K = 1 this is weighted
/// moment matching. Points are row-major n x d.
GaussianMixture fit_mixture(std::span<const double> points, std::span<const double> weights, std::size_t d,
                            std::size_t components, const GaussianMixture* start, bool& regularized);

/// Multilevel cross entropy for the integral of 1_A(h(x)) L(x) pi0(x)
/// over the reference domain (the likelihood enters when
/// `include_likelihood` is set). Levels march the (1 - elite_fraction)
/// quantile of -dist(h, A) up to zero. Starts from `start` when given,
/// otherwise from a Gaussian fitted to the reference.
CrossEntropyResult cross_entropy_event(const Model& model, const ProductReference& domain, const FailureEvent& event,
                                       bool include_likelihood, const CrossEntropyOptions& options,
                                       const GaussianMixture* start = nullptr);

/// Adaptive tempering cross entropy for the evidence, the integral of L pi0.
CrossEntropyResult cross_entropy_evidence(const Model& model, const ProductReference& domain,
                                          const CrossEntropyOptions& options);

/// Posterior probability of the event as the ratio of the two estimates
/// above; the event run starts from the fitted posterior proposal.
struct CrossEntropyRatio {
  EstimatorReport ratio;
  CrossEntropyResult numerator;
  CrossEntropyResult denominator;
};
CrossEntropyRatio cross_entropy_posterior_probability(const Model& model, const ProductReference& domain,
                                                      const FailureEvent& event, const CrossEntropyOptions& options);

}  // namespace ttdis

#endif  // TTDIS_CROSS_ENTROPY_HPP
