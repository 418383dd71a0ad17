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

#ifndef TTDIS_DIRT_HPP
#define TTDIS_DIRT_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttdis/basis.hpp"
#include "ttdis/ftt.hpp"
#include "ttdis/sirt.hpp"

namespace ttdis {

/// Pointwise log of an unnormalized density. May return -infinity where the
/// density vanishes; NaN and +infinity are errors. Must be safe to call
/// concurrently.
using LogDensity = std::function<double(std::span<const double>)>;

/// One bridging density together with the ladder parameters that produced it.
struct BridgingLayer {
  LogDensity log_phi;
  /// Tempering power; 1 when the likelihood is not tempered.
  double beta = 1.0;
  /// Smoothing width; 0 when no smoothing applies.
  double gamma = 0.0;
};

/// Ordered bridging densities; the last entry is the target.
struct BridgingSchedule {
  std::vector<BridgingLayer> layers;

  std::size_t size() const { return layers.size(); }

  /// Throws ConfigError on an empty schedule or non-monotone parameters.
  void validate() const;
};

/// Build record of one layer.
struct LayerInfo {
  double beta = 1.0;
  double gamma = 0.0;
  std::vector<std::size_t> ranks;
  double residual = 0.0;
  std::size_t evaluations = 0;
  std::size_t sweeps = 0;
  bool rank_capped = false;
  /// Log-scale subtracted from the pullback before the square root is taken.
  double log_shift = 0.0;
  double tau = 0.0;
  double zeta = 0.0;

  friend bool operator==(const LayerInfo&, const LayerInfo&) = default;
};

/// Composition T = Q_1 o ... o Q_L of SIRT layers, each a map on the
/// reference domain that pushes the reference forward to the layer density.
class DIRT {
 public:
  DIRT() = default;
  /// Zero layers: the identity map on the reference domain.
  explicit DIRT(ProductReference reference);

  std::size_t dimension() const { return reference_.dimension(); }
  std::size_t layer_count() const { return layers_.size(); }
  const ProductReference& reference() const { return reference_; }
  const SIRT& layer(std::size_t l) const { return layers_[l]; }
  const std::vector<SIRT>& layers() const { return layers_; }
  const std::vector<LayerInfo>& info() const { return info_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void add_layer(SIRT layer, LayerInfo info = {});

  /// Total target evaluations spent in the build.
  std::size_t evaluations() const;

  /// x = T(u). Returns log |det grad T(u)|.
  double forward(std::span<const double> u, std::span<double> x) const;

  /// u = T^{-1}(x). Returns log pbar(x).
  double inverse(std::span<const double> x, std::span<double> u) const;

  /// log pbar(x), the pushforward of the reference through T.
  double log_density(std::span<const double> x) const;

  /// log[phi(T(u)) |det grad T(u)|] in a single forward pass.
  double pullback_log(const LogDensity& log_phi, std::span<const double> u) const;

  friend bool operator==(const DIRT&, const DIRT&) = default;

 private:
  ProductReference reference_;
  std::vector<SIRT> layers_;
  std::vector<LayerInfo> info_;
  std::uint64_t seed_ = 0;
};

struct DirtOptions {
  /// Grid for every coordinate; defaults to reference.uniform_bases(n).
  std::vector<UnivariateBasis> bases;
  CrossOptions cross;
  /// Fixed regularization; when unset tau = residual^2 * integral of g^2,
  /// floored at 1e-14.
  std::optional<double> tau;
  std::size_t threads = 1;
};

/// Builds one layer per schedule entry. Layer l approximates the square root
/// of the pullback of phi_l through the layers built so far.
DIRT build_dirt(const BridgingSchedule& schedule, const ProductReference& reference,
                const DirtOptions& options);

/// Tempering ladder start, start * ratio, ... capped at 1; the last value is
/// exactly 1.
std::vector<double> geometric_ladder(double start, double ratio);

}  // namespace ttdis

#endif  // TTDIS_DIRT_HPP
