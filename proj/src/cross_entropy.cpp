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

#include "ttdis/cross_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ttdis/error.hpp"
#include "ttdis/parallel.hpp"

namespace ttdis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRegularization = 1e-8;

bool inside(const ProductReference& domain, std::span<const double> x) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= domain[k].lower() && x[k] <= domain[k].upper())) return false;
  }
  return true;
}

double distance_to_event(const FailureEvent& event, double z) {
  switch (event.kind) {
    case FailureEvent::Kind::above:
      return std::max(0.0, event.a - z);
    case FailureEvent::Kind::below:
      return std::max(0.0, z - event.a);
    case FailureEvent::Kind::between:
      return std::max({0.0, event.a - z, z - event.b});
  }
  return 0.0;
}

// Samples of the current proposal with their model values.
struct Batch {
  std::vector<double> x;
  std::vector<double> log_q;
  std::vector<double> log_prior;
  std::vector<double> log_likelihood;
  std::vector<double> response;
  std::vector<char> in_domain;
};

Batch draw(const GaussianMixture& q, const Model& model, const ProductReference& domain, std::size_t n,
           RandomStream& stream, std::size_t threads) {
  const std::size_t d = domain.dimension();
  Batch b;
  b.x.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) q.sample(stream, std::span<double>(b.x).subspan(i * d, d));
  b.log_q.resize(n);
  b.log_prior.assign(n, kNegInf);
  b.log_likelihood.assign(n, kNegInf);
  b.response.assign(n, std::numeric_limits<double>::quiet_NaN());
  b.in_domain.assign(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::span<const double> xi(b.x.data() + i * d, d);
    b.log_q[i] = q.log_pdf(xi);
    if (!inside(domain, xi)) return;
    const ModelPoint m = model(xi);
    b.in_domain[i] = 1;
    b.log_prior[i] = m.log_prior;
    b.log_likelihood[i] = m.log_likelihood;
    b.response[i] = m.response;
  });
  return b;
}

GaussianMixture reference_fit(const ProductReference& domain, std::uint64_t seed, std::uint64_t replicate) {
  const std::size_t d = domain.dimension();
  const std::size_t n = 20000;
  const auto u = sample_reference(domain, n, seed ^ 0xCEull, replicate);
  std::vector<double> w(n, 1.0);
  bool regularized = false;
  return fit_mixture(u, w, d, 1, nullptr, regularized);
}

std::size_t count_in_domain(const Batch& b) {
  return static_cast<std::size_t>(std::count(b.in_domain.begin(), b.in_domain.end(), 1));
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components) : components_(std::move(components)) {
  if (components_.empty()) throw DomainError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) total += c.weight;
  const auto d = components_.front().mean.size();
  for (auto& c : components_) {
    c.weight /= total;
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
      throw DomainError("mixture components must share the dimension");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("mixture covariance is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det_half += std::log(l(i, i));
    log_norm_.push_back(std::log(c.weight) - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
                        log_det_half);
    chol_.push_back(std::move(l));
  }
}

Eigen::VectorXd GaussianMixture::component_log_pdf(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd out(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const Eigen::VectorXd z = chol_[j].triangularView<Eigen::Lower>().solve(v - components_[j].mean);
    out[static_cast<Eigen::Index>(j)] = log_norm_[j] - 0.5 * z.squaredNorm();
  }
  return out;
}

double GaussianMixture::log_pdf(std::span<const double> x) const {
  const Eigen::VectorXd c = component_log_pdf(x);
  const double m = c.maxCoeff();
  return m + std::log((c.array() - m).exp().sum());
}

void GaussianMixture::sample(RandomStream& stream, std::span<double> x) const {
  std::size_t j = 0;
  if (components_.size() > 1) {
    double u = stream.uniform();
    for (; j + 1 < components_.size(); ++j) {
      if (u < components_[j].weight) break;
      u -= components_[j].weight;
    }
  }
  const auto d = static_cast<Eigen::Index>(dimension());
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = stream.normal();
  const Eigen::VectorXd v = components_[j].mean + chol_[j] * z;
  for (Eigen::Index i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = v[i];
}

GaussianMixture fit_mixture(std::span<const double> points, std::span<const double> weights, std::size_t d,
                            std::size_t components, const GaussianMixture* start, bool& regularized) {
  const std::size_t n = weights.size();
  if (points.size() != n * d) throw DomainError("fit_mixture: points and weights disagree");
  if (components == 0) throw ConfigError("mixture size must be at least 1");
  const auto dd = static_cast<Eigen::Index>(d);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xs(
      points.data(), static_cast<Eigen::Index>(n), dd);
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(n));
  const double total = w.sum();
  if (!(total > 0.0)) throw NumericalError("fit_mixture: all weights vanish");

  auto moment_fit = [&](const Eigen::VectorXd& resp) {
    GaussianMixture::Component c;
    const double mass = resp.sum();
    c.weight = mass / total;
    c.mean = (xs.transpose() * resp) / mass;
    const Eigen::MatrixXd centered = xs.rowwise() - c.mean.transpose();
    c.covariance = (centered.transpose() * resp.asDiagonal() * centered) / mass;
    c.covariance = 0.5 * (c.covariance + c.covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.covariance, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, c.covariance.trace());
    if (!(eig.eigenvalues().minCoeff() > 1e-14 * scale)) {
      c.covariance += kRegularization * Eigen::MatrixXd::Identity(dd, dd);
      regularized = true;
    }
    return c;
  };

  if (components == 1) return GaussianMixture({moment_fit(w)});

  // Initial mixture: the supplied one, or components spread along the
  // principal axis of the single-Gaussian fit.
  std::vector<GaussianMixture::Component> comps;
  if (start != nullptr && start->size() == components && start->dimension() == d) {
    for (std::size_t j = 0; j < components; ++j) comps.push_back(start->component(j));
  } else {
    const auto single = moment_fit(w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(single.covariance);
    const Eigen::VectorXd axis = eig.eigenvectors().col(dd - 1) * std::sqrt(eig.eigenvalues()[dd - 1]);
    for (std::size_t j = 0; j < components; ++j) {
      auto c = single;
      c.weight = 1.0 / static_cast<double>(components);
      const double offset = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(components - 1);
      c.mean += offset * axis;
      comps.push_back(std::move(c));
    }
  }
  GaussianMixture mix(comps);
  for (int iter = 0; iter < 30; ++iter) {
    Eigen::MatrixXd resp(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(components));
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::VectorXd lp = mix.component_log_pdf(points.subspan(i * d, d));
      const double m = lp.maxCoeff();
      Eigen::VectorXd r = (lp.array() - m).exp();
      r /= r.sum();
      resp.row(static_cast<Eigen::Index>(i)) = w[static_cast<Eigen::Index>(i)] * r.transpose();
    }
    comps.clear();
    for (std::size_t j = 0; j < components; ++j) {
      const Eigen::VectorXd rj = resp.col(static_cast<Eigen::Index>(j));
      if (!(rj.sum() > 1e-12 * total)) continue;  // drop empty components
      comps.push_back(moment_fit(rj));
    }
    mix = GaussianMixture(comps);
  }
  return mix;
}

CrossEntropyResult cross_entropy_event(const Model& model, const ProductReference& domain, const FailureEvent& event,
                                       bool include_likelihood, const CrossEntropyOptions& options,
                                       const GaussianMixture* start) {
  event.validate();
  if (!(options.elite_fraction > 0.0 && options.elite_fraction < 1.0)) {
    throw ConfigError("elite fraction must lie in (0, 1)");
  }
  const std::size_t d = domain.dimension();
  const std::size_t n = options.samples_per_iteration;
  CrossEntropyResult result;
  result.proposal = start ? *start : reference_fit(domain, options.seed, options.replicate);
  auto stream = make_stream(options.seed, StreamPurpose::cross_entropy, 2 * options.replicate + 1);
  std::size_t evaluations = 0;
  result.converged = false;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const Batch b = draw(result.proposal, model, domain, n, stream, options.threads);
    evaluations += count_in_domain(b);
    std::vector<double> score(n, kNegInf);
    for (std::size_t i = 0; i < n; ++i) {
      if (b.in_domain[i]) score[i] = -distance_to_event(event, b.response[i]);
    }
    std::vector<double> sorted = score;
    const auto q_index = static_cast<std::size_t>(std::floor((1.0 - options.elite_fraction) * static_cast<double>(n)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q_index), sorted.end());
    const double level = std::min(0.0, sorted[q_index]);
    if (!std::isfinite(level)) throw NumericalError("cross entropy: proposal left the domain");

    std::vector<double> log_w(n, kNegInf);
    for (std::size_t i = 0; i < n; ++i) {
      if (score[i] < level) continue;
      log_w[i] = b.log_prior[i] + (include_likelihood ? b.log_likelihood[i] : 0.0) - b.log_q[i];
    }
    const double m = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(m)) throw NumericalError("cross entropy: elite weights vanish");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(log_w[i] - m);
    result.proposal = fit_mixture(b.x, w, d, options.components, &result.proposal, result.regularized);
    result.iterations = iter + 1;
    if (level >= 0.0) {
      result.converged = true;
      break;
    }
  }

  const std::size_t n_final = options.final_samples ? options.final_samples : n;
  const Batch b = draw(result.proposal, model, domain, n_final, stream, options.threads);
  evaluations += count_in_domain(b);
  std::vector<double> log_w(n_final, kNegInf);
  for (std::size_t i = 0; i < n_final; ++i) {
    if (!b.in_domain[i] || event.indicator(b.response[i]) == 0.0) continue;
    log_w[i] = b.log_prior[i] + (include_likelihood ? b.log_likelihood[i] : 0.0) - b.log_q[i];
  }
  result.report = summarize_log_weights(log_w);
  result.report.n_evals = evaluations;
  result.report.seed = options.seed;
  result.report.replicate = options.replicate;
  return result;
}

CrossEntropyResult cross_entropy_evidence(const Model& model, const ProductReference& domain,
                                          const CrossEntropyOptions& options) {
  const std::size_t d = domain.dimension();
  const std::size_t n = options.samples_per_iteration;
  if (!(options.ess_fraction > 0.0 && options.ess_fraction < 1.0)) throw ConfigError("ESS fraction must lie in (0, 1)");
  CrossEntropyResult result;
  result.proposal = reference_fit(domain, options.seed, options.replicate);
  auto stream = make_stream(options.seed, StreamPurpose::cross_entropy, 2 * options.replicate);
  std::size_t evaluations = 0;
  double alpha = 0.0;
  result.converged = false;
  for (std::size_t iter = 0; iter < options.max_iterations && alpha < 1.0; ++iter) {
    const Batch b = draw(result.proposal, model, domain, n, stream, options.threads);
    evaluations += count_in_domain(b);
    auto tempered = [&](double a) {
      std::vector<double> lw(n, kNegInf);
      for (std::size_t i = 0; i < n; ++i) {
        if (b.in_domain[i]) lw[i] = b.log_prior[i] + a * b.log_likelihood[i] - b.log_q[i];
      }
      return lw;
    };
    const double target_ess = options.ess_fraction * ess_log(tempered(alpha));
    double next = 1.0;
    if (ess_log(tempered(1.0)) < target_ess) {
      double lo = alpha, hi = 1.0;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (ess_log(tempered(mid)) >= target_ess) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      next = std::max(lo, alpha + 1e-12);
    }
    const auto lw = tempered(next);
    const double m = *std::max_element(lw.begin(), lw.end());
    if (!std::isfinite(m)) throw NumericalError("cross entropy: tempered weights vanish");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(lw[i] - m);
    result.proposal = fit_mixture(b.x, w, d, options.components, &result.proposal, result.regularized);
    alpha = next;
    result.iterations = iter + 1;
  }
  result.converged = alpha >= 1.0;

  const std::size_t n_final = options.final_samples ? options.final_samples : n;
  const Batch b = draw(result.proposal, model, domain, n_final, stream, options.threads);
  evaluations += count_in_domain(b);
  std::vector<double> log_w(n_final, kNegInf);
  for (std::size_t i = 0; i < n_final; ++i) {
    if (b.in_domain[i]) log_w[i] = b.log_prior[i] + b.log_likelihood[i] - b.log_q[i];
  }
  result.report = summarize_log_weights(log_w);
  result.report.n_evals = evaluations;
  result.report.seed = options.seed;
  result.report.replicate = options.replicate;
  return result;
}

CrossEntropyRatio cross_entropy_posterior_probability(const Model& model, const ProductReference& domain,
                                                      const FailureEvent& event, const CrossEntropyOptions& options) {
  CrossEntropyRatio out;
  out.denominator = cross_entropy_evidence(model, domain, options);
  out.numerator = cross_entropy_event(model, domain, event, true, options, &out.denominator.proposal);
  auto& r = out.ratio;
  const auto& q = out.numerator.report;
  const auto& z = out.denominator.report;
  r.seed = options.seed;
  r.replicate = options.replicate;
  r.n = q.n;
  r.n_evals = q.n_evals + z.n_evals;
  if (!(z.estimate > 0.0)) {
    r.degenerate = true;
    return out;
  }
  r.estimate = q.estimate / z.estimate;
  r.ess = q.ess;
  r.degenerate = q.degenerate;
  // The two runs use independent streams.
  r.rel_std = std::sqrt(q.rel_std * q.rel_std + z.rel_std * z.rel_std);
  r.std_error = r.rel_std * r.estimate;
  return out;
}

}  // namespace ttdis
