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

#include "ttdis/dirt.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ttdis/error.hpp"
#include "ttdis/parallel.hpp"

namespace ttdis {

void BridgingSchedule::validate() const {
  if (layers.empty()) throw ConfigError("bridging schedule needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].log_phi) throw ConfigError("bridging layer without a density");
    if (l == 0) continue;
    if (layers[l].beta < layers[l - 1].beta || layers[l].gamma < layers[l - 1].gamma) {
      throw ConfigError("bridging parameters must be nondecreasing");
    }
  }
}

std::vector<double> geometric_ladder(double start, double ratio) {
  if (!(start > 0.0 && start <= 1.0)) throw ConfigError("ladder start must lie in (0, 1]");
  if (!(ratio > 1.0) && start < 1.0) throw ConfigError("ladder ratio must exceed 1");
  std::vector<double> ladder;
  for (int k = 0;; ++k) {
    const double value = start * std::pow(ratio, k);
    if (value >= 1.0 - 1e-9) {
      ladder.push_back(1.0);
      break;
    }
    ladder.push_back(value);
  }
  return ladder;
}

DIRT::DIRT(ProductReference reference) : reference_(std::move(reference)) {}

void DIRT::add_layer(SIRT layer, LayerInfo info) {
  if (layer.dimension() != dimension() || !(layer.reference() == reference_)) {
    throw DomainError("DIRT: every layer must share the reference");
  }
  layers_.push_back(std::move(layer));
  info_.push_back(std::move(info));
}

std::size_t DIRT::evaluations() const {
  std::size_t total = 0;
  for (const auto& i : info_) total += i.evaluations;
  return total;
}

double DIRT::forward(std::span<const double> u, std::span<double> x) const {
  const std::size_t d = dimension();
  if (u.size() != d || x.size() != d) throw DomainError("DIRT: forward dimension mismatch");
  std::vector<double> z(u.begin(), u.end()), next(d);
  double log_det = 0.0;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const double log_ref = reference_.log_pdf(z);
    const double log_p = layers_[l].irt(z, next);
    log_det += log_ref - log_p;
    z.swap(next);
  }
  std::copy(z.begin(), z.end(), x.begin());
  return log_det;
}

double DIRT::inverse(std::span<const double> x, std::span<double> u) const {
  const std::size_t d = dimension();
  if (u.size() != d || x.size() != d) throw DomainError("DIRT: inverse dimension mismatch");
  std::vector<double> w(x.begin(), x.end()), next(d);
  if (layers_.empty()) {
    std::copy(w.begin(), w.end(), u.begin());
    return reference_.log_pdf(w);
  }
  double log_p = 0.0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0) log_p -= reference_.log_pdf(w);
    log_p += layers_[l].rt(w, next);
    w.swap(next);
  }
  std::copy(w.begin(), w.end(), u.begin());
  return log_p;
}

double DIRT::log_density(std::span<const double> x) const {
  std::vector<double> u(dimension());
  return inverse(x, u);
}

double DIRT::pullback_log(const LogDensity& log_phi, std::span<const double> u) const {
  std::vector<double> x(dimension());
  const double log_det = forward(u, x);
  const double value = log_phi(x);
  if (std::isnan(value) || value == std::numeric_limits<double>::infinity()) {
    throw NumericalError("DIRT: bridging density is not finite at " + format_point(x));
  }
  return value + log_det;
}

DIRT build_dirt(const BridgingSchedule& schedule, const ProductReference& reference,
                const DirtOptions& options) {
  schedule.validate();
  const std::size_t d = reference.dimension();
  if (d == 0) throw ConfigError("DIRT: reference has no dimensions");
  std::vector<UnivariateBasis> bases = options.bases;
  if (bases.empty()) bases = reference.uniform_bases(17);
  if (bases.size() != d) throw ConfigError("DIRT: one grid per dimension required");

  DIRT dirt(reference);
  dirt.set_seed(options.cross.seed);
  for (std::size_t l = 0; l < schedule.size(); ++l) {
    const auto& layer = schedule.layers[l];
    bool have_shift = false;
    double shift = 0.0;
    BatchFunction sqrt_pullback = [&](std::span<const double> points, std::span<double> values) {
      const std::size_t count = values.size();
      std::vector<double> logs(count);
      parallel_for(count, options.threads, [&](std::size_t p) {
        logs[p] = dirt.pullback_log(layer.log_phi, points.subspan(p * d, d));
      });
      if (!have_shift) {
        shift = -std::numeric_limits<double>::infinity();
        for (double v : logs) shift = std::max(shift, v);
        if (!std::isfinite(shift)) shift = 0.0;
        have_shift = true;
      }
      for (std::size_t p = 0; p < count; ++p) values[p] = std::exp(0.5 * (logs[p] - shift));
    };

    CrossOptions cross = options.cross;
    cross.seed = options.cross.seed ^ (0x9E3779B97F4A7C15ull * (l + 1));
    CrossResult result;
    try {
      result = cross_approximate(sqrt_pullback, bases, cross);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "layer " << l + 1 << ": " << e.what();
      throw NumericalError(os.str());
    }

    SIRT probe(result.tt, 0.0, reference);
    const double mass = probe.zeta();
    const double tau = options.tau ? *options.tau : std::max(result.residual * result.residual * mass, 1e-14);
    SIRT sirt(std::move(result.tt), tau, reference);

    LayerInfo info;
    info.beta = layer.beta;
    info.gamma = layer.gamma;
    info.ranks = sirt.tt().ranks();
    info.residual = result.residual;
    info.evaluations = result.evaluations;
    info.sweeps = result.sweeps;
    info.rank_capped = result.rank_capped;
    info.log_shift = shift;
    info.tau = tau;
    info.zeta = sirt.zeta();
    dirt.add_layer(std::move(sirt), std::move(info));
  }
  return dirt;
}

}  // namespace ttdis
