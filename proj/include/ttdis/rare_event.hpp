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

#ifndef TTDIS_RARE_EVENT_HPP
#define TTDIS_RARE_EVENT_HPP

#include <functional>
#include <span>
#include <vector>

#include "ttdis/dirt.hpp"

namespace ttdis {

/// Logistic surrogate [1 + exp(gamma (a - z))]^{-1} of the indicator of [a, inf).
double sigmoid_smooth(double z, double a, double gamma);
/// Logarithm of sigmoid_smooth, accurate deep in the lower tail.
double log_sigmoid_smooth(double z, double a, double gamma);

/// Failure event {x : h(x) in A} for an interval A.
struct FailureEvent {
  enum class Kind { above, below, between };
  /// How two-sided events are smoothed: the difference of two one-sided
  /// surrogates, or the product of an upper and a lower sigmoid.
  enum class TwoSided { difference, product };

  Kind kind = Kind::above;
  double a = 0.0;
  /// Upper end for Kind::between.
  double b = 0.0;
  TwoSided two_sided = TwoSided::difference;

  static FailureEvent above(double a) { return {Kind::above, a, 0.0, TwoSided::difference}; }
  static FailureEvent below(double a) { return {Kind::below, a, 0.0, TwoSided::difference}; }
  static FailureEvent between(double a, double b, TwoSided form = TwoSided::difference);

  /// Exact indicator of the event at response value z.
  double indicator(double z) const;
  /// Smoothed indicator f_gamma at response value z, in [0, 1).
  double smooth(double z, double gamma) const;
  double log_smooth(double z, double gamma) const;

  /// Throws ConfigError for an empty interval.
  void validate() const;
};

/// Pointwise model quantities in the DIRT coordinates.
struct ModelPoint {
  double log_prior = 0.0;
  double log_likelihood = 0.0;
  double response = 0.0;
};
using Model = std::function<ModelPoint(std::span<const double>)>;

/// phi_l = f_{gamma_l} pi0 with one layer per smoothing width.
BridgingSchedule prior_bridging(const Model& model, const FailureEvent& event, const std::vector<double>& gammas);

/// phi_l = L^{alpha_l} pi0.
BridgingSchedule posterior_denominator_bridging(const Model& model, const std::vector<double>& alphas);

/// phi_l = f_{gamma_l} L^{beta_l} pi0 with gamma_l = beta_l * gamma_star.
BridgingSchedule posterior_numerator_bridging(const Model& model, const FailureEvent& event,
                                              const std::vector<double>& betas, double gamma_star);

/// Hellinger bound for the smoothing error. With `square_integrable` false
/// this is 2 sqrt(ln 2 * sup_density / zeta_star) gamma^{-1/2}, where
/// sup_density bounds the density of the response. Otherwise `sup_density`
/// is read as the integral of the squared response density and the bound is
/// sqrt(2 / zeta_star) (2 ln 2 - 1)^{1/4} (integral)^{1/4} gamma^{-1/4}.
double smoothing_bound(double sup_density, double zeta_star, double gamma, bool square_integrable = false);

}  // namespace ttdis

#endif  // TTDIS_RARE_EVENT_HPP
