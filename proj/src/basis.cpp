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

#include "ttdis/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "ttdis/error.hpp"

namespace ttdis {

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) os << ", ";
    os << x[i];
  }
  os << ')';
  return os.str();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("normal_quantile: probability outside [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (p <= 0.5) return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

namespace {

constexpr double kLocateSlack = 1e-12;
constexpr double kWeightedPieceWidth = 0.25;

// 7-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 7> kGaussNodes = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
    0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
constexpr std::array<double, 7> kGaussWeights = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

}  // namespace

ReferenceDensity1D::ReferenceDensity1D(Kind kind, double lower, double upper)
    : kind_(kind), lower_(lower), upper_(upper), mass_(1.0), tail_mass_(0.0) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw DomainError("reference density needs a finite interval with lower < upper");
  }
  if (kind_ == Kind::uniform) {
    mass_ = upper - lower;
  } else {
    tail_mass_ = normal_cdf(lower);
    // 1 - 2 Phi(-s) written to keep precision for wide truncations.
    mass_ = std::erf(upper / std::numbers::sqrt2) * 0.5 - std::erf(lower / std::numbers::sqrt2) * 0.5;
  }
}

ReferenceDensity1D ReferenceDensity1D::uniform(double lower, double upper) {
  return ReferenceDensity1D(Kind::uniform, lower, upper);
}

ReferenceDensity1D ReferenceDensity1D::truncated_normal(double half_width) {
  if (!(half_width > 0.0)) throw DomainError("truncated normal needs a positive half width");
  return ReferenceDensity1D(Kind::truncated_normal, -half_width, half_width);
}

double ReferenceDensity1D::pdf(double x) const {
  if (x < lower_ || x > upper_) return 0.0;
  if (kind_ == Kind::uniform) return 1.0 / mass_;
  return std::exp(-0.5 * x * x) / (std::sqrt(2.0 * std::numbers::pi) * mass_);
}

double ReferenceDensity1D::log_pdf(double x) const {
  if (x < lower_ || x > upper_) return -std::numeric_limits<double>::infinity();
  if (kind_ == Kind::uniform) return -std::log(mass_);
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(mass_);
}

double ReferenceDensity1D::cdf(double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  if (kind_ == Kind::uniform) return (x - lower_) / mass_;
  // Evaluate on the side of the nearer tail to avoid cancellation.
  if (x <= 0.0) return (normal_cdf(x) - tail_mass_) / mass_;
  const double upper_tail = normal_cdf(-upper_);
  return 1.0 - (normal_cdf(-x) - upper_tail) / mass_;
}

double ReferenceDensity1D::inverse_cdf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("inverse_cdf: probability outside [0, 1]");
  if (u == 0.0) return lower_;
  if (u == 1.0) return upper_;
  if (kind_ == Kind::uniform) return lower_ + u * mass_;
  double x;
  if (u <= 0.5) {
    x = normal_quantile(tail_mass_ + u * mass_);
  } else {
    x = -normal_quantile(normal_cdf(-upper_) + (1.0 - u) * mass_);
  }
  x = std::clamp(x, lower_, upper_);
  // One Newton polish removes the residual from the tail-probability offset.
  const double density = pdf(x);
  if (density > 0.0) x = std::clamp(x - (cdf(x) - u) / density, lower_, upper_);
  return x;
}

UnivariateBasis::UnivariateBasis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("a hat basis needs at least two nodes");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i] < nodes_[i + 1])) throw DomainError("hat basis nodes must be strictly increasing");
  }
}

UnivariateBasis UnivariateBasis::uniform(double lower, double upper, std::size_t n) {
  if (n < 2) throw DomainError("a hat basis needs at least two nodes");
  std::vector<double> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  nodes.back() = upper;
  return UnivariateBasis(std::move(nodes));
}

UnivariateBasis::Location UnivariateBasis::locate(double x) const {
  const double slack = kLocateSlack * (upper() - lower());
  if (!(x >= lower() - slack && x <= upper() + slack)) {
    std::ostringstream os;
    os << "coordinate " << x << " outside basis domain [" << lower() << ", " << upper() << "]";
    throw DomainError(os.str());
  }
  x = std::clamp(x, lower(), upper());
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  std::size_t cell = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
  cell = std::min(cell, cell_count() - 1);
  const double t = (x - nodes_[cell]) / cell_width(cell);
  return {cell, std::clamp(t, 0.0, 1.0)};
}

Eigen::VectorXd UnivariateBasis::eval(double x) const {
  const auto [cell, t] = locate(x);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  values[static_cast<Eigen::Index>(cell)] = 1.0 - t;
  values[static_cast<Eigen::Index>(cell + 1)] += t;
  return values;
}

Eigen::MatrixXd UnivariateBasis::mass_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c < cell_count(); ++c) {
    const double h = cell_width(c);
    const auto i = static_cast<Eigen::Index>(c);
    mass(i, i) += h / 3.0;
    mass(i + 1, i + 1) += h / 3.0;
    mass(i, i + 1) += h / 6.0;
    mass(i + 1, i) += h / 6.0;
  }
  return mass;
}

Eigen::MatrixXd UnivariateBasis::weighted_mass_matrix(const ReferenceDensity1D& weight) const {
  const double slack = kLocateSlack * (upper() - lower());
  if (weight.lower() > lower() + slack || weight.upper() < upper() - slack) {
    throw DomainError("weight domain does not contain the basis domain");
  }
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c < cell_count(); ++c) {
    const double h = cell_width(c);
    // The weight is not polynomial; wide cells are split so the rule stays exact
    // to rounding for the truncated normal.
    const auto pieces = static_cast<std::size_t>(std::ceil(h / kWeightedPieceWidth));
    const double hp = h / static_cast<double>(std::max<std::size_t>(pieces, 1));
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (std::size_t p = 0; p < std::max<std::size_t>(pieces, 1); ++p) {
      for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
        const double t = (static_cast<double>(p) + 0.5 * (kGaussNodes[q] + 1.0)) * hp / h;
        const double w = 0.5 * hp * kGaussWeights[q] * weight.pdf(nodes_[c] + t * h);
        m00 += w * (1.0 - t) * (1.0 - t);
        m01 += w * (1.0 - t) * t;
        m11 += w * t * t;
      }
    }
    const auto i = static_cast<Eigen::Index>(c);
    mass(i, i) += m00;
    mass(i + 1, i + 1) += m11;
    mass(i, i + 1) += m01;
    mass(i + 1, i) += m01;
  }
  return mass;
}

ProductReference::ProductReference(std::vector<ReferenceDensity1D> factors) : factors_(std::move(factors)) {}

ProductReference::ProductReference(std::size_t dimension, const ReferenceDensity1D& factor)
    : factors_(dimension, factor) {}

double ProductReference::log_pdf(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t k = 0; k < factors_.size(); ++k) total += factors_[k].log_pdf(x[k]);
  return total;
}

void ProductReference::cdf(std::span<const double> u, std::span<double> xi) const {
  for (std::size_t k = 0; k < factors_.size(); ++k) xi[k] = factors_[k].cdf(u[k]);
}

void ProductReference::inverse_cdf(std::span<const double> xi, std::span<double> u) const {
  for (std::size_t k = 0; k < factors_.size(); ++k) u[k] = factors_[k].inverse_cdf(xi[k]);
}

std::vector<UnivariateBasis> ProductReference::uniform_bases(std::size_t n) const {
  std::vector<UnivariateBasis> bases;
  bases.reserve(factors_.size());
  for (const auto& f : factors_) bases.push_back(UnivariateBasis::uniform(f.lower(), f.upper(), n));
  return bases;
}

}  // namespace ttdis
