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

#ifndef TTDIS_FTT_HPP
#define TTDIS_FTT_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ttdis/basis.hpp"

namespace ttdis {

/// Core k of a tensor train, a r_{k-1} x n_k x r_k array stored row-major as
/// a (r_{k-1} n_k) x r_k matrix: entry (a, i, b) sits at row a * n_k + i.
using CoreMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Functional tensor train g(x) = G_1(x_1) ... G_d(x_d) where every G_k(x_k)
/// interpolates the core slices at the grid nodes with hat functions.
class FunctionalTT {
 public:
  FunctionalTT() = default;
  FunctionalTT(std::vector<UnivariateBasis> bases, std::vector<CoreMatrix> cores);

  /// Rank-one train with value `value` everywhere.
  static FunctionalTT constant(std::vector<UnivariateBasis> bases, double value);

  /// Rank-one train holding the product of univariate factors, each sampled
  /// at its grid nodes.
  static FunctionalTT separable(std::vector<UnivariateBasis> bases,
                                const std::vector<std::function<double(double)>>& factors);

  std::size_t dimension() const { return bases_.size(); }
  /// Rank r_k for k = 0..d (r_0 = r_d = 1).
  std::size_t rank(std::size_t k) const;
  std::vector<std::size_t> ranks() const;
  std::size_t max_rank() const;

  const UnivariateBasis& basis(std::size_t k) const { return bases_[k]; }
  const std::vector<UnivariateBasis>& bases() const { return bases_; }
  const CoreMatrix& core(std::size_t k) const { return cores_[k]; }
  const std::vector<CoreMatrix>& cores() const { return cores_; }

  /// Interpolated matrix G_k(x_k), size r_{k-1} x r_k.
  Eigen::MatrixXd core_at(std::size_t k, double x) const;

  /// Accumulates row = row * G_k(x_k) in place.
  void apply_core(std::size_t k, double x, Eigen::RowVectorXd& row) const;

  /// Row vector G_1(x_1) ... G_m(x_m) of length r_m for the first m coordinates.
  Eigen::RowVectorXd left_product(std::span<const double> x, std::size_t m) const;

  double eval(std::span<const double> x) const;

  /// Copy representing factor * g (the first core is scaled).
  FunctionalTT scaled(double factor) const;

  friend bool operator==(const FunctionalTT&, const FunctionalTT&) = default;

 private:
  std::vector<UnivariateBasis> bases_;
  std::vector<CoreMatrix> cores_;
};

/// Options for the alternating cross approximation.
struct CrossOptions {
  std::size_t max_rank = 10;
  std::size_t rank_increment = 2;
  std::size_t sweeps = 5;
  /// Stop once the held-out relative max error falls below this value.
  double tolerance = 1e-10;
  std::size_t initial_rank = 1;
  /// Initial random index sets have ceil(initial_rank * oversampling) entries.
  double oversampling = 1.0;
  /// Held-out uniform points used for the residual estimate. With zero the
  /// residual is measured on every cached fiber evaluation instead.
  std::size_t residual_samples = 1000;
  /// Relative singular value cut applied to every unfolding.
  double truncation_tolerance = 1e-12;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the options are inconsistent.
  void validate() const;
};

/// Evaluates f at `values.size()` points packed row-major in `points`
/// (values.size() x d). Must be safe to call concurrently.
using BatchFunction = std::function<void(std::span<const double> points, std::span<double> values)>;

struct CrossResult {
  FunctionalTT tt;
  /// Relative max error max|tt - f| / max|f| on the held-out sample.
  double residual = 0.0;
  /// Number of distinct calls made to f (fiber points plus held-out points).
  std::size_t evaluations = 0;
  std::size_t sweeps = 0;
  /// Set when the rank cap was hit while the residual was still above tolerance.
  bool rank_capped = false;
};

/// Greedy alternating cross approximation with maxvol pivoting. Each sweep
/// evaluates f on the fibers defined by the current left/right pivot sets,
/// builds interpolating cores, and re-pivots on the unfoldings. When the
/// held-out residual exceeds the tolerance the next sweep enriches the pivot
/// sets by `rank_increment` random indices so the ranks can grow.
CrossResult cross_approximate(const BatchFunction& f, std::vector<UnivariateBasis> bases,
                              const CrossOptions& options);

/// Row indices of a (locally) maximum-volume r x r submatrix of a tall m x r
/// matrix of full column rank.
std::vector<Eigen::Index> maxvol(const Eigen::MatrixXd& tall, double tolerance = 1.05,
                                 int max_iterations = 200);

}  // namespace ttdis

#endif  // TTDIS_FTT_HPP
