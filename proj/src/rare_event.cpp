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

#include "ttdis/rare_event.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ttdis/error.hpp"

namespace ttdis {

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

// log(e^p - e^q) for p >= q; -inf when they coincide.
double log_diff_exp(double p, double q) {
  if (!(p > q)) return -std::numeric_limits<double>::infinity();
  return p + std::log1p(-std::exp(q - p));
}

}  // namespace

double sigmoid_smooth(double z, double a, double gamma) {
  const double t = gamma * (a - z);
  if (t > 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double log_sigmoid_smooth(double z, double a, double gamma) { return -softplus(gamma * (a - z)); }

FailureEvent FailureEvent::between(double a, double b, TwoSided form) {
  FailureEvent e{Kind::between, a, b, form};
  e.validate();
  return e;
}

void FailureEvent::validate() const {
  if (!std::isfinite(a)) throw ConfigError("failure threshold must be finite");
  if (kind == Kind::between && !(a < b)) throw ConfigError("two-sided failure event needs a < b");
}

double FailureEvent::indicator(double z) const {
  switch (kind) {
    case Kind::above:
      return z >= a ? 1.0 : 0.0;
    case Kind::below:
      return z <= a ? 1.0 : 0.0;
    case Kind::between:
      return (z >= a && z <= b) ? 1.0 : 0.0;
  }
  return 0.0;
}

double FailureEvent::smooth(double z, double gamma) const {
  switch (kind) {
    case Kind::above:
      return sigmoid_smooth(z, a, gamma);
    case Kind::below:
      return sigmoid_smooth(-z, -a, gamma);
    case Kind::between:
      if (two_sided == TwoSided::product) return sigmoid_smooth(z, a, gamma) * sigmoid_smooth(-z, -b, gamma);
      return std::max(0.0, sigmoid_smooth(z, a, gamma) - sigmoid_smooth(z, b, gamma));
  }
  return 0.0;
}

double FailureEvent::log_smooth(double z, double gamma) const {
  switch (kind) {
    case Kind::above:
      return log_sigmoid_smooth(z, a, gamma);
    case Kind::below:
      return log_sigmoid_smooth(-z, -a, gamma);
    case Kind::between:
      if (two_sided == TwoSided::product) {
        return log_sigmoid_smooth(z, a, gamma) + log_sigmoid_smooth(-z, -b, gamma);
      }
      return log_diff_exp(log_sigmoid_smooth(z, a, gamma), log_sigmoid_smooth(z, b, gamma));
  }
  return 0.0;
}

BridgingSchedule prior_bridging(const Model& model, const FailureEvent& event, const std::vector<double>& gammas) {
  event.validate();
  BridgingSchedule schedule;
  for (double gamma : gammas) {
    if (!(gamma > 0.0)) throw ConfigError("smoothing widths must be positive");
    BridgingLayer layer;
    layer.gamma = gamma;
    layer.log_phi = [model, event, gamma](std::span<const double> x) {
      const ModelPoint m = model(x);
      return event.log_smooth(m.response, gamma) + m.log_prior;
    };
    schedule.layers.push_back(std::move(layer));
  }
  schedule.validate();
  return schedule;
}

BridgingSchedule posterior_denominator_bridging(const Model& model, const std::vector<double>& alphas) {
  if (alphas.empty() || alphas.back() != 1.0) throw ConfigError("tempering ladder must end at 1");
  BridgingSchedule schedule;
  for (double alpha : alphas) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("tempering powers must lie in (0, 1]");
    BridgingLayer layer;
    layer.beta = alpha;
    layer.log_phi = [model, alpha](std::span<const double> x) {
      const ModelPoint m = model(x);
      return alpha * m.log_likelihood + m.log_prior;
    };
    schedule.layers.push_back(std::move(layer));
  }
  schedule.validate();
  return schedule;
}

BridgingSchedule posterior_numerator_bridging(const Model& model, const FailureEvent& event,
                                              const std::vector<double>& betas, double gamma_star) {
  event.validate();
  if (betas.empty() || betas.back() != 1.0) throw ConfigError("tempering ladder must end at 1");
  if (!(gamma_star > 0.0)) throw ConfigError("final smoothing width must be positive");
  BridgingSchedule schedule;
  for (double beta : betas) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("tempering powers must lie in (0, 1]");
    BridgingLayer layer;
    layer.beta = beta;
    layer.gamma = beta * gamma_star;
    layer.log_phi = [model, event, beta, gamma = layer.gamma](std::span<const double> x) {
      const ModelPoint m = model(x);
      return event.log_smooth(m.response, gamma) + beta * m.log_likelihood + m.log_prior;
    };
    schedule.layers.push_back(std::move(layer));
  }
  schedule.validate();
  return schedule;
}

double smoothing_bound(double sup_density, double zeta_star, double gamma, bool square_integrable) {
  if (!(sup_density > 0.0 && zeta_star > 0.0 && gamma > 0.0)) {
    throw DomainError("smoothing bound needs positive inputs");
  }
  if (!square_integrable) return 2.0 * std::sqrt(std::numbers::ln2 * sup_density / zeta_star) / std::sqrt(gamma);
  return std::sqrt(2.0 / zeta_star) * std::pow(2.0 * std::numbers::ln2 - 1.0, 0.25) * std::pow(sup_density, 0.25) *
         std::pow(gamma, -0.25);
}

}  // namespace ttdis
