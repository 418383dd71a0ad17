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

#include "ttdis/ftt.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ttdis/error.hpp"
#include "ttdis/random.hpp"

namespace ttdis {

FunctionalTT::FunctionalTT(std::vector<UnivariateBasis> bases, std::vector<CoreMatrix> cores)
    : bases_(std::move(bases)), cores_(std::move(cores)) {
  if (bases_.empty()) throw DomainError("a tensor train needs at least one dimension");
  if (cores_.size() != bases_.size()) throw DomainError("tensor train needs one core per dimension");
  std::size_t left = 1;
  for (std::size_t k = 0; k < cores_.size(); ++k) {
    const auto n = bases_[k].size();
    const auto rows = static_cast<std::size_t>(cores_[k].rows());
    if (rows != left * n) {
      std::ostringstream os;
      os << "core " << k << " has " << rows << " rows, expected " << left * n;
      throw DomainError(os.str());
    }
    left = static_cast<std::size_t>(cores_[k].cols());
    if (left == 0) throw DomainError("tensor train ranks must be positive");
  }
  if (left != 1) throw DomainError("the last tensor train rank must be one");
}

FunctionalTT FunctionalTT::constant(std::vector<UnivariateBasis> bases, double value) {
  std::vector<CoreMatrix> cores;
  cores.reserve(bases.size());
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const double fill = k == 0 ? value : 1.0;
    cores.emplace_back(CoreMatrix::Constant(static_cast<Eigen::Index>(bases[k].size()), 1, fill));
  }
  return FunctionalTT(std::move(bases), std::move(cores));
}

FunctionalTT FunctionalTT::separable(std::vector<UnivariateBasis> bases,
                                     const std::vector<std::function<double(double)>>& factors) {
  if (factors.size() != bases.size()) throw DomainError("separable: one factor per dimension required");
  std::vector<CoreMatrix> cores;
  cores.reserve(bases.size());
  for (std::size_t k = 0; k < bases.size(); ++k) {
    CoreMatrix core(static_cast<Eigen::Index>(bases[k].size()), 1);
    for (std::size_t i = 0; i < bases[k].size(); ++i) core(static_cast<Eigen::Index>(i), 0) = factors[k](bases[k].node(i));
    cores.push_back(std::move(core));
  }
  return FunctionalTT(std::move(bases), std::move(cores));
}

std::size_t FunctionalTT::rank(std::size_t k) const {
  if (k == 0 || k >= cores_.size()) return 1;
  return static_cast<std::size_t>(cores_[k - 1].cols());
}

std::vector<std::size_t> FunctionalTT::ranks() const {
  std::vector<std::size_t> r(dimension() + 1);
  for (std::size_t k = 0; k <= dimension(); ++k) r[k] = rank(k);
  return r;
}

std::size_t FunctionalTT::max_rank() const {
  const auto r = ranks();
  return *std::max_element(r.begin(), r.end());
}

Eigen::MatrixXd FunctionalTT::core_at(std::size_t k, double x) const {
  const auto [cell, t] = bases_[k].locate(x);
  const auto n = static_cast<Eigen::Index>(bases_[k].size());
  const auto left = static_cast<Eigen::Index>(rank(k));
  const auto& core = cores_[k];
  Eigen::MatrixXd slice(left, core.cols());
  const auto c = static_cast<Eigen::Index>(cell);
  for (Eigen::Index a = 0; a < left; ++a) {
    slice.row(a) = (1.0 - t) * core.row(a * n + c) + t * core.row(a * n + c + 1);
  }
  return slice;
}

void FunctionalTT::apply_core(std::size_t k, double x, Eigen::RowVectorXd& row) const {
  const auto [cell, t] = bases_[k].locate(x);
  const auto n = static_cast<Eigen::Index>(bases_[k].size());
  const auto& core = cores_[k];
  const auto c = static_cast<Eigen::Index>(cell);
  Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(core.cols());
  for (Eigen::Index a = 0; a < row.size(); ++a) {
    const double wa = row[a];
    if (wa == 0.0) continue;
    next.noalias() += (wa * (1.0 - t)) * core.row(a * n + c);
    if (t != 0.0) next.noalias() += (wa * t) * core.row(a * n + c + 1);
  }
  row = std::move(next);
}

Eigen::RowVectorXd FunctionalTT::left_product(std::span<const double> x, std::size_t m) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  for (std::size_t k = 0; k < m; ++k) apply_core(k, x[k], row);
  return row;
}

double FunctionalTT::eval(std::span<const double> x) const {
  if (x.size() != dimension()) throw DomainError("eval: point dimension does not match the tensor train");
  return left_product(x, dimension())[0];
}

FunctionalTT FunctionalTT::scaled(double factor) const {
  FunctionalTT copy = *this;
  copy.cores_.front() *= factor;
  return copy;
}

void CrossOptions::validate() const {
  if (initial_rank < 1) throw ConfigError("cross: initial rank must be at least 1");
  if (max_rank < initial_rank) throw ConfigError("cross: max rank must be at least the initial rank");
  if (sweeps < 1) throw ConfigError("cross: at least one sweep is required");
  if (!(oversampling >= 1.0)) throw ConfigError("cross: oversampling factor must be >= 1");
  if (!(tolerance >= 0.0)) throw ConfigError("cross: tolerance must be nonnegative");
  if (!(truncation_tolerance >= 0.0 && truncation_tolerance < 1.0)) {
    throw ConfigError("cross: truncation tolerance must lie in [0, 1)");
  }
}

std::vector<Eigen::Index> maxvol(const Eigen::MatrixXd& tall, double tolerance, int max_iterations) {
  const Eigen::Index m = tall.rows();
  const Eigen::Index r = tall.cols();
  if (r > m) throw DomainError("maxvol: matrix must have at least as many rows as columns");
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(r));

  // Initial guess from Gaussian elimination with complete pivoting.
  Eigen::MatrixXd work = tall;
  std::vector<bool> row_used(static_cast<std::size_t>(m), false), col_used(static_cast<std::size_t>(r), false);
  for (Eigen::Index step = 0; step < r; ++step) {
    double best = -1.0;
    Eigen::Index bi = 0, bj = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < r; ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        if (std::abs(work(i, j)) > best) {
          best = std::abs(work(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    rows.push_back(bi);
    row_used[static_cast<std::size_t>(bi)] = true;
    col_used[static_cast<std::size_t>(bj)] = true;
    if (best > 0.0) {
      const Eigen::VectorXd pivot_col = work.col(bj) / work(bi, bj);
      const Eigen::RowVectorXd pivot_row = work.row(bi);
      work.noalias() -= pivot_col * pivot_row;
    }
  }

  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::MatrixXd square(r, r);
    for (Eigen::Index j = 0; j < r; ++j) square.row(j) = tall.row(rows[static_cast<std::size_t>(j)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(square.transpose());
    const Eigen::MatrixXd coeffs = lu.solve(tall.transpose()).transpose();  // m x r
    Eigen::Index bi, bj;
    const double largest = coeffs.cwiseAbs().maxCoeff(&bi, &bj);
    if (!(largest > tolerance)) break;
    rows[static_cast<std::size_t>(bj)] = bi;
  }
  return rows;
}

namespace {

using MultiIndex = std::vector<std::uint32_t>;

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& idx) const {
    std::size_t h = 1469598103934665603ull;
    for (auto v : idx) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

class CrossEngine {
 public:
  CrossEngine(const BatchFunction& f, std::vector<UnivariateBasis> bases, const CrossOptions& options)
      : f_(f), bases_(std::move(bases)), options_(options),
        pivots_(make_stream(options.seed, StreamPurpose::cross_pivots)),
        d_(bases_.size()), left_(d_ + 1), right_(d_ + 1), cores_(d_) {}

  CrossResult run() {
    initialize();
    CrossResult result;
    bool enrich = false;
    bool left_to_right = true;
    for (std::size_t sweep = 0; sweep < options_.sweeps; ++sweep) {
      if (left_to_right) {
        sweep_left_to_right(enrich);
      } else {
        sweep_right_to_left(enrich);
      }
      left_to_right = !left_to_right;
      result.sweeps = sweep + 1;
      FunctionalTT tt(bases_, cores_);
      result.residual = residual(tt);
      result.tt = std::move(tt);
      if (result.residual <= options_.tolerance) break;
      enrich = options_.rank_increment > 0;
    }
    result.evaluations = evaluations_;
    result.rank_capped = result.residual > options_.tolerance && result.tt.max_rank() >= options_.max_rank;
    return result;
  }

 private:
  std::size_t grid_size(std::size_t k) const { return bases_[k].size(); }

  // Draws `count` distinct random multi-indices over coordinates [first, last)
  // that are not already present in `existing`.
  void add_random_indices(std::vector<MultiIndex>& existing, std::size_t first, std::size_t last,
                          std::size_t count) {
    double capacity = 1.0;
    for (std::size_t k = first; k < last; ++k) capacity *= static_cast<double>(grid_size(k));
    std::set<MultiIndex> seen(existing.begin(), existing.end());
    const auto target = static_cast<std::size_t>(
        std::min<double>(capacity, static_cast<double>(existing.size() + count)));
    while (existing.size() < target) {
      MultiIndex idx(last - first);
      for (std::size_t k = first; k < last; ++k) {
        idx[k - first] = static_cast<std::uint32_t>(pivots_.below(grid_size(k)));
      }
      if (seen.insert(idx).second) existing.push_back(std::move(idx));
    }
  }

  void initialize() {
    left_[0] = {MultiIndex{}};
    right_[d_] = {MultiIndex{}};
    const auto initial = static_cast<std::size_t>(
        std::ceil(static_cast<double>(options_.initial_rank) * options_.oversampling - 1e-12));
    for (std::size_t k = d_ - 1; k >= 1; --k) {
      right_[k].clear();
      add_random_indices(right_[k], k, d_, initial);
    }
  }

  // Fiber values f(left[a], x_k[i], right[b]) laid out row-major as (a, i, b).
  Eigen::MatrixXd fiber(std::size_t k, const std::vector<MultiIndex>& lefts,
                        const std::vector<MultiIndex>& rights) {
    const std::size_t n = grid_size(k);
    const std::size_t total = lefts.size() * n * rights.size();
    std::vector<MultiIndex> keys;
    keys.reserve(total);
    for (const auto& l : lefts) {
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& r : rights) {
          MultiIndex idx;
          idx.reserve(d_);
          idx.insert(idx.end(), l.begin(), l.end());
          idx.push_back(static_cast<std::uint32_t>(i));
          idx.insert(idx.end(), r.begin(), r.end());
          keys.push_back(std::move(idx));
        }
      }
    }
    evaluate_missing(keys);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(lefts.size() * n), static_cast<Eigen::Index>(rights.size()));
    std::size_t pos = 0;
    for (Eigen::Index row = 0; row < values.rows(); ++row) {
      for (Eigen::Index col = 0; col < values.cols(); ++col) values(row, col) = cache_.at(keys[pos++]);
    }
    return values;
  }

  void evaluate_missing(const std::vector<MultiIndex>& keys) {
    std::vector<const MultiIndex*> missing;
    std::unordered_map<MultiIndex, char, MultiIndexHash> queued;
    for (const auto& key : keys) {
      if (cache_.contains(key) || queued.contains(key)) continue;
      queued.emplace(key, 0);
      missing.push_back(&key);
    }
    if (missing.empty()) return;
    std::vector<double> points(missing.size() * d_);
    for (std::size_t p = 0; p < missing.size(); ++p) {
      for (std::size_t k = 0; k < d_; ++k) points[p * d_ + k] = bases_[k].node((*missing[p])[k]);
    }
    std::vector<double> values(missing.size());
    f_(points, values);
    evaluations_ += missing.size();
    for (std::size_t p = 0; p < missing.size(); ++p) {
      if (!std::isfinite(values[p])) {
        throw NumericalError("cross: non-finite function value at " +
                             format_point(std::span<const double>(points).subspan(p * d_, d_)));
      }
      cache_.emplace(*missing[p], values[p]);
    }
  }

  // Thin left singular vectors of `a` truncated by the relative cut and the rank cap.
  Eigen::MatrixXd truncated_basis(const Eigen::MatrixXd& a) const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    const auto& sigma = svd.singularValues();
    Eigen::Index keep = 1;
    if (sigma.size() > 0 && sigma[0] > 0.0) {
      keep = 0;
      for (Eigen::Index j = 0; j < sigma.size(); ++j) {
        if (sigma[j] > options_.truncation_tolerance * sigma[0]) ++keep;
      }
    }
    keep = std::min<Eigen::Index>({keep, static_cast<Eigen::Index>(options_.max_rank), svd.matrixU().cols()});
    keep = std::max<Eigen::Index>(keep, 1);
    return svd.matrixU().leftCols(keep);
  }

  static Eigen::MatrixXd interpolating_factor(const Eigen::MatrixXd& basis, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd square(basis.cols(), basis.cols());
    for (std::size_t j = 0; j < rows.size(); ++j) square.row(static_cast<Eigen::Index>(j)) = basis.row(rows[j]);
    // basis * square^{-1}
    return square.transpose().partialPivLu().solve(basis.transpose()).transpose();
  }

  void sweep_left_to_right(bool enrich) {
    for (std::size_t k = 0; k + 1 < d_; ++k) {
      const std::size_t n = grid_size(k);
      if (enrich) add_random_indices(right_[k + 1], k + 1, d_, options_.rank_increment);
      const Eigen::MatrixXd a = fiber(k, left_[k], right_[k + 1]);
      const Eigen::MatrixXd u = truncated_basis(a);
      const auto rows = maxvol(u);
      cores_[k] = interpolating_factor(u, rows);
      std::vector<MultiIndex> next;
      next.reserve(rows.size());
      for (auto row : rows) {
        const auto alpha = static_cast<std::size_t>(row) / n;
        const auto i = static_cast<std::uint32_t>(static_cast<std::size_t>(row) % n);
        MultiIndex idx = left_[k][alpha];
        idx.push_back(i);
        next.push_back(std::move(idx));
      }
      left_[k + 1] = std::move(next);
    }
    const Eigen::MatrixXd last = fiber(d_ - 1, left_[d_ - 1], right_[d_]);
    cores_[d_ - 1] = last;
  }

  void sweep_right_to_left(bool enrich) {
    for (std::size_t k = d_ - 1; k >= 1; --k) {
      const std::size_t n = grid_size(k);
      if (enrich) add_random_indices(left_[k], 0, k, options_.rank_increment);
      const Eigen::MatrixXd a = fiber(k, left_[k], right_[k + 1]);
      const auto right_rank = static_cast<Eigen::Index>(right_[k + 1].size());
      // Reinterpret (a, i, b) as a matrix with rows a and columns (i, b).
      const CoreMatrix a_rows = a;
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> unfolding(
          a_rows.data(), static_cast<Eigen::Index>(left_[k].size()), static_cast<Eigen::Index>(n) * right_rank);
      const Eigen::MatrixXd v = truncated_basis(Eigen::MatrixXd(unfolding).transpose());
      const auto cols = maxvol(v);
      const Eigen::MatrixXd factor = interpolating_factor(v, cols).transpose();  // r' x (n r_right)
      CoreMatrix core(factor.rows() * static_cast<Eigen::Index>(n), right_rank);
      for (Eigen::Index alpha = 0; alpha < factor.rows(); ++alpha) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
          for (Eigen::Index b = 0; b < right_rank; ++b) {
            core(alpha * static_cast<Eigen::Index>(n) + i, b) = factor(alpha, i * right_rank + b);
          }
        }
      }
      cores_[k] = std::move(core);
      std::vector<MultiIndex> next;
      next.reserve(cols.size());
      for (auto col : cols) {
        const auto i = static_cast<std::uint32_t>(col / right_rank);
        const auto b = static_cast<std::size_t>(col % right_rank);
        MultiIndex idx{i};
        idx.insert(idx.end(), right_[k + 1][b].begin(), right_[k + 1][b].end());
        next.push_back(std::move(idx));
      }
      right_[k] = std::move(next);
    }
    cores_[0] = fiber(0, left_[0], right_[1]);
  }

  double residual(const FunctionalTT& tt) {
    double worst = 0.0, scale = 0.0;
    if (options_.residual_samples == 0) {
      std::vector<double> x(d_);
      for (const auto& [idx, value] : cache_) {
        for (std::size_t k = 0; k < d_; ++k) x[k] = bases_[k].node(idx[k]);
        worst = std::max(worst, std::abs(tt.eval(x) - value));
        scale = std::max(scale, std::abs(value));
      }
    } else {
      if (holdout_points_.empty()) sample_holdout();
      for (std::size_t p = 0; p < holdout_values_.size(); ++p) {
        const std::span<const double> x(holdout_points_.data() + p * d_, d_);
        worst = std::max(worst, std::abs(tt.eval(x) - holdout_values_[p]));
        scale = std::max(scale, std::abs(holdout_values_[p]));
      }
    }
    return scale > 0.0 ? worst / scale : worst;
  }

  void sample_holdout() {
    auto stream = make_stream(options_.seed, StreamPurpose::cross_residual);
    const std::size_t count = options_.residual_samples;
    holdout_points_.resize(count * d_);
    for (std::size_t p = 0; p < count; ++p) {
      for (std::size_t k = 0; k < d_; ++k) {
        holdout_points_[p * d_ + k] = bases_[k].lower() + stream.uniform() * (bases_[k].upper() - bases_[k].lower());
      }
    }
    holdout_values_.resize(count);
    f_(holdout_points_, holdout_values_);
    evaluations_ += count;
    for (std::size_t p = 0; p < count; ++p) {
      if (!std::isfinite(holdout_values_[p])) {
        throw NumericalError("cross: non-finite function value at " +
                             format_point(std::span<const double>(holdout_points_).subspan(p * d_, d_)));
      }
    }
  }

  const BatchFunction& f_;
  std::vector<UnivariateBasis> bases_;
  CrossOptions options_;
  RandomStream pivots_;
  std::size_t d_;
  std::vector<std::vector<MultiIndex>> left_;
  std::vector<std::vector<MultiIndex>> right_;
  std::vector<CoreMatrix> cores_;
  std::unordered_map<MultiIndex, double, MultiIndexHash> cache_;
  std::vector<double> holdout_points_;
  std::vector<double> holdout_values_;
  std::size_t evaluations_ = 0;
};

}  // namespace

CrossResult cross_approximate(const BatchFunction& f, std::vector<UnivariateBasis> bases,
                              const CrossOptions& options) {
  options.validate();
  if (bases.empty()) throw DomainError("cross: at least one dimension is required");
  if (bases.size() == 1) {
    // A single core is just the function sampled on the grid.
    const auto& basis = bases.front();
    std::vector<double> points(basis.nodes().begin(), basis.nodes().end());
    std::vector<double> values(points.size());
    f(points, values);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw NumericalError("cross: non-finite function value at " + format_point({&points[i], 1}));
      }
    }
    CoreMatrix core = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    CrossResult result;
    result.tt = FunctionalTT(bases, {core});
    result.evaluations = values.size();
    result.sweeps = 1;
    result.residual = 0.0;
    if (options.residual_samples > 0) {
      auto stream = make_stream(options.seed, StreamPurpose::cross_residual);
      std::vector<double> xs(options.residual_samples), fx(options.residual_samples);
      for (auto& x : xs) x = basis.lower() + stream.uniform() * (basis.upper() - basis.lower());
      f(xs, fx);
      result.evaluations += xs.size();
      double worst = 0.0, scale = 0.0;
      for (std::size_t p = 0; p < xs.size(); ++p) {
        if (!std::isfinite(fx[p])) throw NumericalError("cross: non-finite function value at " + format_point({&xs[p], 1}));
        worst = std::max(worst, std::abs(result.tt.eval({&xs[p], 1}) - fx[p]));
        scale = std::max(scale, std::abs(fx[p]));
      }
      result.residual = scale > 0.0 ? worst / scale : worst;
    }
    return result;
  }
  return CrossEngine(f, std::move(bases), options).run();
}

}  // namespace ttdis
