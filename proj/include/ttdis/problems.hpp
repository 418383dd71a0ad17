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

#ifndef TTDIS_PROBLEMS_HPP
#define TTDIS_PROBLEMS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ttdis/basis.hpp"
#include "ttdis/ode.hpp"
#include "ttdis/rare_event.hpp"

namespace ttdis {

/// Uniform prior on [0,1]^2 and the event R_i <= |x - x0| <= R_o.
struct AnnulusProblem {
  std::array<double, 2> center{0.4, 0.4};
  double inner_radius = 0.0;
  double outer_radius = 0.1;

  void validate() const;
  double exact_probability() const;
  double squared_radius(std::span<const double> x) const;
  double indicator(std::span<const double> x) const;
  /// Product of the outer and inner sigmoids.
  double smooth(double gamma, std::span<const double> x) const;
  /// Event on the squared radius, smoothed by the product form.
  FailureEvent event() const;
  ProductReference reference() const;
  /// Prior density 1 on the square, response = squared radius.
  Model model() const;
};

/// One-dimensional conjugate Gaussian problem: prior N(0,1) truncated to
/// [-w, w], likelihood exp(-(x - y)^2 / (2 s^2)), event x > threshold.
struct ToyGaussianProblem {
  double half_width = 8.0;
  double observation = 1.0;
  double noise_std = 0.5;
  double threshold = 2.0;

  ProductReference reference() const;
  Model model() const;
  FailureEvent event() const { return FailureEvent::above(threshold); }
  double posterior_mean() const;
  double posterior_std() const;
  /// Integral of L pi0 over the truncated domain.
  double exact_evidence() const;
  /// Integral of 1{x > threshold} L pi0.
  double exact_numerator() const;
  /// Posterior probability of the event.
  double exact_ratio() const;
};

/// Compartmental SIR model with diffusion along a graph. Rates are ordered
/// (theta_1, nu_1, ..., theta_K, nu_K) with a uniform prior on
/// [0, prior_upper] for each, and compartment k starts with S = 99 - K + k,
/// I = K + 1 - k, R = 0 (k = 1..K).
struct SirProblem {
  std::size_t compartments = 1;
  /// Neighbour sets J_k (0-based, symmetric, no self loops).
  std::vector<std::vector<std::size_t>> adjacency;
  std::vector<double> observation_times;
  double horizon = 5.0;
  double noise_std = 1.0;
  double threshold = 80.0;
  /// 0-based compartment whose infectious peak defines the risk.
  std::size_t monitored = 0;
  double prior_upper = 2.0;
  double reference_half_width = 3.0;
  /// Observations, row-major compartments x observation times.
  std::vector<double> data;
  OdeOptions ode;

  /// Periodic one-dimensional lattice with the default times 5j/6, j = 1..6,
  /// monitoring the last compartment.
  static SirProblem lattice(std::size_t compartments);
  static std::vector<std::vector<std::size_t>> periodic_lattice(std::size_t compartments);

  std::size_t dimension() const { return 2 * compartments; }
  void validate() const;

  std::vector<double> initial_state() const;
  /// State layout (S_1, I_1, R_1, ..., S_K, I_K, R_K).
  void rhs(std::span<const double> state, std::span<const double> rates, std::span<double> derivative) const;

  struct Trajectory {
    /// I_k at the observation times, row-major compartments x times.
    std::vector<double> observations;
    /// Maximum over [0, horizon] of I for the monitored compartment.
    double max_infected = 0.0;
    OdeSolution solution;
  };
  Trajectory simulate(std::span<const double> rates) const;
  Trajectory simulate(std::span<const double> rates, const OdeOptions& options) const;

  /// -1/(2 s^2) times the squared misfit against `data`.
  double log_likelihood(std::span<const double> rates) const;
  double log_likelihood(const Trajectory& trajectory) const;

  /// Model outputs at x_true plus N(0, noise_std^2) noise from the data stream.
  std::vector<double> generate_data(std::span<const double> rates, std::uint64_t seed, bool noise = true) const;

  ProductReference reference() const;
  /// x_k = prior_upper * R_k(u_k).
  void prior_transform(std::span<const double> u, std::span<double> x) const;
  /// log |dx/du| of prior_transform.
  double log_prior_jacobian(std::span<const double> u) const;

  /// Model in reference coordinates: the pulled-back uniform prior equals the
  /// reference density, the likelihood is evaluated at prior_transform(u), and
  /// the response is the monitored infectious peak.
  Model model() const;
};

/// Adjacency text: a line "compartments K" followed by lines "edge i j" with
/// 1-based indices; '#' starts a comment. Edges are undirected.
std::vector<std::vector<std::size_t>> read_adjacency(std::istream& in);
std::vector<std::vector<std::size_t>> load_adjacency(const std::string& path);

/// Data CSV with header "compartment,time_index,value" and 1-based indices.
void write_data_csv(std::ostream& out, std::span<const double> data, std::size_t compartments, std::size_t times);
std::vector<double> read_data_csv(std::istream& in, std::size_t compartments, std::size_t times);

}  // namespace ttdis

#endif  // TTDIS_PROBLEMS_HPP
