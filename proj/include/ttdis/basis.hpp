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

#ifndef TTDIS_BASIS_HPP
#define TTDIS_BASIS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

/**
 * \file
 * \brief Univariate discretization: piecewise-linear hat bases and product
 * reference densities with exact one-dimensional CDFs.
 */

namespace ttdis {

/// One-dimensional reference density: uniform on [a, b] or a standard normal
/// truncated to [-s, s] and renormalized.
class ReferenceDensity1D {
 public:
  enum class Kind { uniform, truncated_normal };

  static ReferenceDensity1D uniform(double lower, double upper);
  static ReferenceDensity1D truncated_normal(double half_width = 3.0);

  Kind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  double pdf(double x) const;
  double log_pdf(double x) const;

  /// Distribution function; clamps to 0 below the domain and 1 above it.
  double cdf(double x) const;

  /// Inverse distribution function. Throws DomainError unless u is in [0, 1].
  double inverse_cdf(double u) const;

  friend bool operator==(const ReferenceDensity1D&, const ReferenceDensity1D&) = default;

 private:
  ReferenceDensity1D(Kind kind, double lower, double upper);

  Kind kind_;
  double lower_;
  double upper_;
  double mass_;       // normalization of the untruncated density over the domain
  double tail_mass_;  // Phi(lower) for the truncated normal
};

/// Piecewise-linear hat functions on an ordered grid. Hat i equals one at
/// node i and zero at every other node, so the family is a partition of unity.
class UnivariateBasis {
 public:
  /// Position of a coordinate inside the grid: x = (1 - t) node[cell] + t node[cell + 1].
  struct Location {
    std::size_t cell;
    double t;
  };

  explicit UnivariateBasis(std::vector<double> nodes);

  /// n equispaced nodes on [lower, upper].
  static UnivariateBasis uniform(double lower, double upper, std::size_t n);

  std::size_t size() const { return nodes_.size(); }
  std::size_t cell_count() const { return nodes_.size() - 1; }
  double lower() const { return nodes_.front(); }
  double upper() const { return nodes_.back(); }
  std::span<const double> nodes() const { return nodes_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double cell_width(std::size_t cell) const { return nodes_[cell + 1] - nodes_[cell]; }

  /// Locates x in the grid. Throws DomainError outside [lower, upper].
  Location locate(double x) const;

  /// Values of all n hat functions at x; at most two entries are nonzero.
  Eigen::VectorXd eval(double x) const;

  /// Exact Gram matrix of the hats under Lebesgue measure (tridiagonal).
  Eigen::MatrixXd mass_matrix() const;

  /// Gram matrix of the hats weighted by a reference density, by 7-point
  /// Gauss-Legendre quadrature on every cell. The weight's domain must contain
  /// the grid.
  Eigen::MatrixXd weighted_mass_matrix(const ReferenceDensity1D& weight) const;

  friend bool operator==(const UnivariateBasis&, const UnivariateBasis&) = default;

 private:
  std::vector<double> nodes_;
};

/// Product of one-dimensional reference densities.
class ProductReference {
 public:
  ProductReference() = default;
  explicit ProductReference(std::vector<ReferenceDensity1D> factors);
  ProductReference(std::size_t dimension, const ReferenceDensity1D& factor);

  std::size_t dimension() const { return factors_.size(); }
  const ReferenceDensity1D& operator[](std::size_t k) const { return factors_[k]; }
  std::span<const ReferenceDensity1D> factors() const { return factors_; }

  double log_pdf(std::span<const double> x) const;

  /// Coordinate-wise CDF map R(u) into [0,1]^d.
  void cdf(std::span<const double> u, std::span<double> xi) const;
  void inverse_cdf(std::span<const double> xi, std::span<double> u) const;

  /// A hat basis with n nodes on every coordinate's domain.
  std::vector<UnivariateBasis> uniform_bases(std::size_t n) const;

  friend bool operator==(const ProductReference&, const ProductReference&) = default;

 private:
  std::vector<ReferenceDensity1D> factors_;
};

/// Standard normal CDF and quantile with full double accuracy in both tails.
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace ttdis

#endif  // TTDIS_BASIS_HPP
