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

#include "ttdis/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "ttdis/error.hpp"
#include "ttdis/random.hpp"

namespace ttdis {

// ---------------------------------------------------------------------------
// Annulus

void AnnulusProblem::validate() const {
  if (!(inner_radius >= 0.0 && inner_radius < outer_radius)) {
    throw ConfigError("annulus radii must satisfy 0 <= inner < outer");
  }
}

double AnnulusProblem::exact_probability() const {
  return std::numbers::pi * (outer_radius * outer_radius - inner_radius * inner_radius);
}

double AnnulusProblem::squared_radius(std::span<const double> x) const {
  const double dx = x[0] - center[0], dy = x[1] - center[1];
  return dx * dx + dy * dy;
}

double AnnulusProblem::indicator(std::span<const double> x) const { return event().indicator(squared_radius(x)); }

double AnnulusProblem::smooth(double gamma, std::span<const double> x) const {
  return event().smooth(squared_radius(x), gamma);
}

FailureEvent AnnulusProblem::event() const {
  validate();
  return FailureEvent::between(inner_radius * inner_radius, outer_radius * outer_radius,
                               FailureEvent::TwoSided::product);
}

ProductReference AnnulusProblem::reference() const {
  return ProductReference(2, ReferenceDensity1D::uniform(0.0, 1.0));
}

Model AnnulusProblem::model() const {
  validate();
  const AnnulusProblem copy = *this;
  return [copy](std::span<const double> x) {
    ModelPoint m;
    m.log_prior = 0.0;
    m.log_likelihood = 0.0;
    m.response = copy.squared_radius(x);
    return m;
  };
}

// ---------------------------------------------------------------------------
// Conjugate toy

ProductReference ToyGaussianProblem::reference() const {
  return ProductReference(1, ReferenceDensity1D::truncated_normal(half_width));
}

Model ToyGaussianProblem::model() const {
  const ReferenceDensity1D prior = ReferenceDensity1D::truncated_normal(half_width);
  const double y = observation, s2 = noise_std * noise_std;
  return [prior, y, s2](std::span<const double> x) {
    ModelPoint m;
    m.log_prior = prior.log_pdf(x[0]);
    m.log_likelihood = -0.5 * (x[0] - y) * (x[0] - y) / s2;
    m.response = x[0];
    return m;
  };
}

double ToyGaussianProblem::posterior_mean() const {
  return observation / (1.0 + noise_std * noise_std);
}

double ToyGaussianProblem::posterior_std() const {
  const double s2 = noise_std * noise_std;
  return std::sqrt(s2 / (1.0 + s2));
}

double ToyGaussianProblem::exact_evidence() const {
  const double s2 = noise_std * noise_std;
  const double untruncated = std::sqrt(s2 / (1.0 + s2)) * std::exp(-0.5 * observation * observation / (1.0 + s2));
  const double m = posterior_mean(), sd = posterior_std();
  const double prior_mass = normal_cdf(half_width) - normal_cdf(-half_width);
  return untruncated * (normal_cdf((half_width - m) / sd) - normal_cdf((-half_width - m) / sd)) / prior_mass;
}

double ToyGaussianProblem::exact_numerator() const {
  const double s2 = noise_std * noise_std;
  const double untruncated = std::sqrt(s2 / (1.0 + s2)) * std::exp(-0.5 * observation * observation / (1.0 + s2));
  const double m = posterior_mean(), sd = posterior_std();
  const double prior_mass = normal_cdf(half_width) - normal_cdf(-half_width);
  // Upper-tail differences taken on the far side to keep precision.
  const double tail = normal_cdf(-(threshold - m) / sd) - normal_cdf(-(half_width - m) / sd);
  return untruncated * tail / prior_mass;
}

double ToyGaussianProblem::exact_ratio() const { return exact_numerator() / exact_evidence(); }

// ---------------------------------------------------------------------------
// SIR

std::vector<std::vector<std::size_t>> SirProblem::periodic_lattice(std::size_t compartments) {
  std::vector<std::vector<std::size_t>> adj(compartments);
  if (compartments < 2) return adj;
  for (std::size_t k = 0; k < compartments; ++k) {
    std::set<std::size_t> nb{(k + compartments - 1) % compartments, (k + 1) % compartments};
    nb.erase(k);
    adj[k].assign(nb.begin(), nb.end());
  }
  return adj;
}

SirProblem SirProblem::lattice(std::size_t compartments) {
  SirProblem p;
  p.compartments = compartments;
  p.adjacency = periodic_lattice(compartments);
  for (int j = 1; j <= 6; ++j) p.observation_times.push_back(5.0 * j / 6.0);
  p.monitored = compartments - 1;
  return p;
}

void SirProblem::validate() const {
  if (compartments == 0) throw ConfigError("SIR model needs at least one compartment");
  if (adjacency.size() != compartments) throw ConfigError("SIR adjacency must list every compartment");
  for (std::size_t k = 0; k < compartments; ++k) {
    for (std::size_t j : adjacency[k]) {
      if (j >= compartments || j == k) throw ConfigError("SIR adjacency has an invalid neighbour");
      const auto& back = adjacency[j];
      if (std::find(back.begin(), back.end(), k) == back.end()) throw ConfigError("SIR adjacency must be symmetric");
    }
  }
  if (observation_times.empty()) throw ConfigError("SIR model needs observation times");
  for (std::size_t j = 0; j < observation_times.size(); ++j) {
    if (!(observation_times[j] > 0.0 && observation_times[j] <= horizon)) {
      throw ConfigError("SIR observation times must lie in (0, horizon]");
    }
    if (j > 0 && !(observation_times[j] > observation_times[j - 1])) {
      throw ConfigError("SIR observation times must increase");
    }
  }
  if (monitored >= compartments) throw ConfigError("monitored compartment out of range");
  if (!(noise_std > 0.0)) throw ConfigError("noise standard deviation must be positive");
  if (!(prior_upper > 0.0)) throw ConfigError("prior upper bound must be positive");
  if (compartments > 99) throw ConfigError("initial state requires at most 99 compartments");
  ode.validate();
}

std::vector<double> SirProblem::initial_state() const {
  const auto K = static_cast<double>(compartments);
  std::vector<double> s(3 * compartments, 0.0);
  for (std::size_t k = 0; k < compartments; ++k) {
    const double k1 = static_cast<double>(k + 1);
    s[3 * k] = 99.0 - K + k1;
    s[3 * k + 1] = K + 1.0 - k1;
  }
  return s;
}

void SirProblem::rhs(std::span<const double> state, std::span<const double> rates,
                     std::span<double> derivative) const {
  for (std::size_t k = 0; k < compartments; ++k) {
    const double s = state[3 * k], i = state[3 * k + 1], r = state[3 * k + 2];
    const double theta = rates[2 * k], nu = rates[2 * k + 1];
    double ds = -theta * s * i, di = theta * s * i - nu * i, dr = nu * i;
    for (std::size_t j : adjacency[k]) {
      ds += 0.5 * (state[3 * j] - s);
      di += 0.5 * (state[3 * j + 1] - i);
      dr += 0.5 * (state[3 * j + 2] - r);
    }
    derivative[3 * k] = ds;
    derivative[3 * k + 1] = di;
    derivative[3 * k + 2] = dr;
  }
}

SirProblem::Trajectory SirProblem::simulate(std::span<const double> rates) const { return simulate(rates, ode); }

SirProblem::Trajectory SirProblem::simulate(std::span<const double> rates, const OdeOptions& options) const {
  if (rates.size() != dimension()) throw DomainError("SIR: expected 2K rates");
  for (double r : rates) {
    if (!std::isfinite(r)) throw DomainError("SIR: rates must be finite");
  }
  const OdeRhs f = [this, rates](double, std::span<const double> y, std::span<double> dy) { rhs(y, rates, dy); };
  const auto y0 = initial_state();
  Trajectory traj;
  try {
    traj.solution = integrate_dopri5(f, y0, 0.0, horizon, observation_times, options);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("SIR solve failed for rates ") + format_point(rates) + ": " + e.what());
  }
  const std::size_t times = observation_times.size();
  traj.observations.resize(compartments * times);
  const auto& stops = traj.solution.stops();
  for (std::size_t j = 0; j < times; ++j) {
    for (std::size_t k = 0; k < compartments; ++k) traj.observations[k * times + j] = stops[j][3 * k + 1];
  }

  // Peak of the monitored I from the dense output: five samples per step and
  // a parabola through the best sample and its neighbours.
  const std::size_t comp = 3 * monitored + 1;
  double best = y0[comp];
  for (const auto& step : traj.solution.steps()) {
    std::array<double, 5> f5{};
    for (int q = 0; q < 5; ++q) f5[static_cast<std::size_t>(q)] = step.component(comp, 0.25 * q);
    const auto arg = static_cast<int>(std::max_element(f5.begin(), f5.end()) - f5.begin());
    best = std::max(best, f5[static_cast<std::size_t>(arg)]);
    const int mid = std::clamp(arg, 1, 3);
    const double fa = f5[static_cast<std::size_t>(mid - 1)], fb = f5[static_cast<std::size_t>(mid)],
                 fc = f5[static_cast<std::size_t>(mid + 1)];
    const double curvature = fa - 2.0 * fb + fc;
    if (curvature < 0.0) {
      const double theta = std::clamp(0.25 * mid + 0.25 * (fa - fc) / (2.0 * curvature), 0.25 * (mid - 1),
                                      0.25 * (mid + 1));
      best = std::max(best, step.component(comp, theta));
    }
  }
  traj.max_infected = best;
  return traj;
}

double SirProblem::log_likelihood(const Trajectory& trajectory) const {
  if (data.size() != trajectory.observations.size()) throw ConfigError("SIR: data has the wrong shape");
  double misfit = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = trajectory.observations[i] - data[i];
    misfit += r * r;
  }
  return -0.5 * misfit / (noise_std * noise_std);
}

double SirProblem::log_likelihood(std::span<const double> rates) const { return log_likelihood(simulate(rates)); }

std::vector<double> SirProblem::generate_data(std::span<const double> rates, std::uint64_t seed, bool noise) const {
  auto traj = simulate(rates);
  if (noise) {
    auto stream = make_stream(seed, StreamPurpose::data_noise);
    for (auto& v : traj.observations) v += noise_std * stream.normal();
  }
  return traj.observations;
}

ProductReference SirProblem::reference() const {
  return ProductReference(dimension(), ReferenceDensity1D::truncated_normal(reference_half_width));
}

void SirProblem::prior_transform(std::span<const double> u, std::span<double> x) const {
  const auto ref = ReferenceDensity1D::truncated_normal(reference_half_width);
  for (std::size_t k = 0; k < u.size(); ++k) x[k] = prior_upper * ref.cdf(u[k]);
}

double SirProblem::log_prior_jacobian(std::span<const double> u) const {
  const auto ref = ReferenceDensity1D::truncated_normal(reference_half_width);
  double total = 0.0;
  for (double v : u) total += std::log(prior_upper) + ref.log_pdf(v);
  return total;
}

Model SirProblem::model() const {
  validate();
  if (data.size() != compartments * observation_times.size()) throw ConfigError("SIR: data has the wrong shape");
  const SirProblem copy = *this;
  const ProductReference ref = reference();
  return [copy, ref](std::span<const double> u) {
    std::vector<double> x(u.size());
    copy.prior_transform(u, x);
    const auto traj = copy.simulate(x);
    ModelPoint m;
    m.log_prior = ref.log_pdf(u);
    m.log_likelihood = copy.log_likelihood(traj);
    m.response = traj.max_infected;
    return m;
  };
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::vector<std::size_t>> read_adjacency(std::istream& in) {
  std::string line;
  std::size_t k = 0;
  bool have_k = false;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "compartments") {
      if (!(ls >> k) || k == 0) throw ConfigError("adjacency line " + std::to_string(line_no) + ": bad count");
      have_k = true;
    } else if (key == "edge") {
      std::size_t a = 0, b = 0;
      if (!(ls >> a >> b)) throw ConfigError("adjacency line " + std::to_string(line_no) + ": bad edge");
      edges.emplace_back(a, b);
    } else {
      throw ConfigError("adjacency line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_k) throw ConfigError("adjacency file lacks a compartments line");
  std::vector<std::set<std::size_t>> sets(k);
  for (auto [a, b] : edges) {
    if (a < 1 || b < 1 || a > k || b > k || a == b) throw ConfigError("adjacency edge out of range or a self loop");
    sets[a - 1].insert(b - 1);
    sets[b - 1].insert(a - 1);
  }
  std::vector<std::vector<std::size_t>> adj(k);
  for (std::size_t i = 0; i < k; ++i) adj[i].assign(sets[i].begin(), sets[i].end());
  return adj;
}

std::vector<std::vector<std::size_t>> load_adjacency(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open adjacency file " + path);
  return read_adjacency(in);
}

void write_data_csv(std::ostream& out, std::span<const double> data, std::size_t compartments, std::size_t times) {
  out << "compartment,time_index,value\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < compartments; ++k) {
    for (std::size_t j = 0; j < times; ++j) out << k + 1 << ',' << j + 1 << ',' << data[k * times + j] << '\n';
  }
}

std::vector<double> read_data_csv(std::istream& in, std::size_t compartments, std::size_t times) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("compartment,time_index,value", 0) != 0) {
    throw ConfigError("data CSV must start with the header compartment,time_index,value");
  }
  std::vector<double> data(compartments * times, std::numeric_limits<double>::quiet_NaN());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t k = 0, j = 0;
    double v = 0.0;
    char c1 = 0, c2 = 0;
    if (!(ls >> k >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',') throw ConfigError("malformed data row: " + line);
    if (k < 1 || k > compartments || j < 1 || j > times) throw ConfigError("data row out of range: " + line);
    data[(k - 1) * times + (j - 1)] = v;
  }
  for (double v : data) {
    if (std::isnan(v)) throw ConfigError("data CSV is missing entries");
  }
  return data;
}

}  // namespace ttdis
