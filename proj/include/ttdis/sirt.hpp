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

#ifndef TTDIS_SIRT_HPP
#define TTDIS_SIRT_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ttdis/basis.hpp"
#include "ttdis/ftt.hpp"

namespace ttdis {

/// Squared inverse Rosenblatt transport for rho(x) = g(x)^2 + tau * lambda(x),
/// where g is a functional tensor train and lambda the product reference.
/// Marginals of rho are integrated exactly through mass-matrix recursions, so
/// the conditional CDFs are available in closed form cell by cell.
///
/// Coordinates are 1-based in the marginal and conditional functions to match
/// the usual x_{<k} notation: k = 1 is the first coordinate.
class SIRT {
 public:
  SIRT() = default;

  /// Runs the backward marginalization recursion. The bases of `tt` must span
  /// the reference domain of every coordinate.
  SIRT(FunctionalTT tt, double tau, ProductReference reference);

  /// Reassembles a SIRT from stored parts without recomputing the factors.
  static SIRT from_parts(FunctionalTT tt, double tau, ProductReference reference,
                         std::vector<Eigen::MatrixXd> factors, double zeta);

  std::size_t dimension() const { return tt_.dimension(); }
  const FunctionalTT& tt() const { return tt_; }
  double tau() const { return tau_; }
  const ProductReference& reference() const { return reference_; }
  double zeta() const { return zeta_; }

  /// Factor L with L L^T = integral of G_{>k} G_{>k}^T, size r_k x r_k (k = 0..d).
  const Eigen::MatrixXd& factor(std::size_t k) const { return factors_[k]; }
  const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }

  /// rho(x) and its logarithm.
  double unnormalized_density(std::span<const double> x) const;
  double density(std::span<const double> x) const;
  double log_density(std::span<const double> x) const;

  /// rho_{<=k}(x_1..x_k); `prefix` holds exactly k coordinates.
  double unnormalized_marginal(std::size_t k, std::span<const double> prefix) const;

  /// F_{k|<k}(xk | prefix) with `prefix` holding the first k-1 coordinates.
  double conditional_cdf(std::size_t k, std::span<const double> prefix, double xk) const;

  /// Solves F_{k|<k}(x | prefix) = u for x.
  double invert_conditional_cdf(std::size_t k, std::span<const double> prefix, double u) const;

  /// x = F^{-1}(R(u)) coordinate by coordinate. Returns log p(x).
  double irt(std::span<const double> u, std::span<double> x) const;

  /// u = R^{-1}(F(x)). Returns log p(x).
  double rt(std::span<const double> x, std::span<double> u) const;

  friend bool operator==(const SIRT&, const SIRT&) = default;

 private:
  // Conditional density of coordinate k on its grid, given the prefix.
  struct Slice {
    const UnivariateBasis* basis = nullptr;
    const ReferenceDensity1D* ref = nullptr;
    const std::vector<double>* ref_mass = nullptr;  // reference mass of every cell
    Eigen::MatrixXd c;              // n x r_k, row i is the prefix contraction at node i
    std::vector<double> cumulative;  // cumulative mass at the nodes, cumulative[0] = 0
    double tau_weight = 0.0;        // tau * lambda_{<k}(prefix)
    double total = 0.0;

    double partial(std::size_t cell, double s) const;
    double pdf(std::size_t cell, double s) const;
    double cdf(double x) const;
    double invert(double u) const;
    double unnormalized_pdf(double x) const;
  };

  Slice make_slice(std::size_t k, const Eigen::RowVectorXd& prefix_row, double tau_weight) const;
  void cache_reference_masses();

  FunctionalTT tt_;
  double tau_ = 0.0;
  ProductReference reference_;
  std::vector<Eigen::MatrixXd> factors_;
  double zeta_ = 0.0;
  // Derived from the grids and the reference; not serialized.
  std::vector<std::vector<double>> ref_cell_mass_;
};

/// Factor L with L L^T = m for a symmetric positive semidefinite matrix.
/// Uses Cholesky and falls back to an eigenvalue split with tiny negative
/// eigenvalues clipped to zero. Throws NumericalError when the smallest
/// eigenvalue is below -1e-12 * trace.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m);

}  // namespace ttdis

#endif  // TTDIS_SIRT_HPP
