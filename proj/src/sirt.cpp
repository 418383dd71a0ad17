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

#include "ttdis/sirt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttdis/error.hpp"

namespace ttdis {

namespace {

constexpr double kInversionTolerance = 1e-15;
constexpr int kInversionIterations = 100;

}  // namespace

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const double trace = sym.trace();
  const double smallest = eig.eigenvalues().minCoeff();
  if (smallest < -1e-12 * std::abs(trace)) {
    std::ostringstream os;
    os << "mass matrix is indefinite: smallest eigenvalue " << smallest << " with trace " << trace;
    throw NumericalError(os.str());
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

SIRT::SIRT(FunctionalTT tt, double tau, ProductReference reference)
    : tt_(std::move(tt)), tau_(tau), reference_(std::move(reference)) {
  const std::size_t d = tt_.dimension();
  if (reference_.dimension() != d) throw DomainError("SIRT: reference dimension does not match the tensor train");
  if (!(tau_ >= 0.0) || !std::isfinite(tau_)) throw DomainError("SIRT: tau must be finite and nonnegative");
  for (std::size_t k = 0; k < d; ++k) {
    const auto& basis = tt_.basis(k);
    const auto& ref = reference_[k];
    const double slack = 1e-12 * (ref.upper() - ref.lower());
    if (std::abs(basis.lower() - ref.lower()) > slack || std::abs(basis.upper() - ref.upper()) > slack) {
      throw DomainError("SIRT: basis grid must span the reference domain");
    }
  }

  factors_.assign(d + 1, Eigen::MatrixXd());
  factors_[d] = Eigen::MatrixXd::Identity(1, 1);
  for (std::size_t k = d; k >= 1; --k) {
    const auto& core = tt_.core(k - 1);
    const auto& basis = tt_.basis(k - 1);
    const auto n = static_cast<Eigen::Index>(basis.size());
    const auto left = static_cast<Eigen::Index>(tt_.rank(k - 1));
    const Eigen::MatrixXd mass_root = Eigen::LLT<Eigen::MatrixXd>(basis.mass_matrix()).matrixL();
    // B = core * L_{>k}, stored as (left * n) x r rows.
    const Eigen::MatrixXd b = core * factors_[k];
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(left, left);
    Eigen::MatrixXd slice(left, n);
    for (Eigen::Index beta = 0; beta < b.cols(); ++beta) {
      for (Eigen::Index a = 0; a < left; ++a) {
        for (Eigen::Index i = 0; i < n; ++i) slice(a, i) = b(a * n + i, beta);
      }
      const Eigen::MatrixXd p = slice * mass_root;
      m.noalias() += p * p.transpose();
    }
    factors_[k - 1] = psd_factor(m);
  }
  zeta_ = factors_[0](0, 0) * factors_[0](0, 0) + tau_;
  if (!(zeta_ > 0.0)) throw NumericalError("SIRT: normalizing constant is not positive");
  cache_reference_masses();
}

void SIRT::cache_reference_masses() {
  ref_cell_mass_.assign(dimension(), {});
  for (std::size_t k = 0; k < dimension(); ++k) {
    const auto& basis = tt_.basis(k);
    auto& mass = ref_cell_mass_[k];
    mass.resize(basis.cell_count());
    double prev = reference_[k].cdf(basis.node(0));
    for (std::size_t cell = 0; cell < mass.size(); ++cell) {
      const double next = reference_[k].cdf(basis.node(cell + 1));
      mass[cell] = next - prev;
      prev = next;
    }
  }
}

SIRT SIRT::from_parts(FunctionalTT tt, double tau, ProductReference reference,
                      std::vector<Eigen::MatrixXd> factors, double zeta) {
  if (factors.size() != tt.dimension() + 1) throw DomainError("SIRT: wrong number of stored factors");
  for (std::size_t k = 0; k <= tt.dimension(); ++k) {
    const auto r = static_cast<Eigen::Index>(tt.rank(k));
    if (factors[k].rows() != r) throw DomainError("SIRT: stored factor has the wrong size");
  }
  if (reference.dimension() != tt.dimension()) throw DomainError("SIRT: reference dimension does not match the tensor train");
  SIRT s;
  s.tt_ = std::move(tt);
  s.tau_ = tau;
  s.reference_ = std::move(reference);
  s.factors_ = std::move(factors);
  s.zeta_ = zeta;
  s.cache_reference_masses();
  return s;
}

double SIRT::unnormalized_density(std::span<const double> x) const {
  const double g = tt_.eval(x);
  double value = g * g;
  if (tau_ > 0.0) value += tau_ * std::exp(reference_.log_pdf(x));
  return value;
}

double SIRT::density(std::span<const double> x) const { return unnormalized_density(x) / zeta_; }

double SIRT::log_density(std::span<const double> x) const {
  const double g = tt_.eval(x);
  const double log_sq = g == 0.0 ? -INFINITY : 2.0 * std::log(std::abs(g));
  if (tau_ <= 0.0) return log_sq - std::log(zeta_);
  const double log_reg = std::log(tau_) + reference_.log_pdf(x);
  const double hi = std::max(log_sq, log_reg);
  const double lo = std::min(log_sq, log_reg);
  return hi + std::log1p(std::exp(lo - hi)) - std::log(zeta_);
}

double SIRT::unnormalized_marginal(std::size_t k, std::span<const double> prefix) const {
  if (k < 1 || k > dimension()) throw DomainError("SIRT: marginal index out of range");
  if (prefix.size() != k) throw DomainError("SIRT: marginal needs exactly k coordinates");
  const Eigen::RowVectorXd row = tt_.left_product(prefix, k) * factors_[k];
  double value = row.squaredNorm();
  if (tau_ > 0.0) {
    double log_ref = 0.0;
    for (std::size_t j = 0; j < k; ++j) log_ref += reference_[j].log_pdf(prefix[j]);
    value += tau_ * std::exp(log_ref);
  }
  return value;
}

SIRT::Slice SIRT::make_slice(std::size_t k, const Eigen::RowVectorXd& prefix_row, double tau_weight) const {
  Slice s;
  s.basis = &tt_.basis(k - 1);
  s.ref = &reference_[k - 1];
  s.ref_mass = &ref_cell_mass_[k - 1];
  s.tau_weight = tau_weight;
  const auto& core = tt_.core(k - 1);
  const auto n = static_cast<Eigen::Index>(s.basis->size());
  Eigen::MatrixXd contracted = Eigen::MatrixXd::Zero(n, core.cols());
  for (Eigen::Index a = 0; a < prefix_row.size(); ++a) {
    if (prefix_row[a] == 0.0) continue;
    contracted.noalias() += prefix_row[a] * core.middleRows(a * n, n);
  }
  s.c = contracted * factors_[k];
  s.cumulative.assign(static_cast<std::size_t>(n), 0.0);
  for (std::size_t cell = 0; cell + 1 < static_cast<std::size_t>(n); ++cell) {
    s.cumulative[cell + 1] = s.cumulative[cell] + s.partial(cell, 1.0);
  }
  s.total = s.cumulative.back();
  if (!(s.total > 0.0)) {
    throw NumericalError("SIRT: conditional density has zero mass; a positive tau is required");
  }
  return s;
}

// Mass of the cell's left fraction s in [0, 1].
double SIRT::Slice::partial(std::size_t cell, double s) const {
  const auto i = static_cast<Eigen::Index>(cell);
  const double a = c.row(i).squaredNorm();
  const double b = c.row(i).dot(c.row(i + 1));
  const double cc = c.row(i + 1).squaredNorm();
  const double s2 = s * s, s3 = s2 * s;
  const double h = basis->cell_width(cell);
  double value = h * (a * (s - s2 + s3 / 3.0) + b * (s2 - 2.0 * s3 / 3.0) + cc * s3 / 3.0);
  if (tau_weight > 0.0) {
    const double x0 = basis->node(cell);
    value += tau_weight * (s == 1.0 ? (*ref_mass)[cell] : ref->cdf(x0 + s * h) - ref->cdf(x0));
  }
  return value;
}

// Derivative of partial() with respect to s.
double SIRT::Slice::pdf(std::size_t cell, double s) const {
  const auto i = static_cast<Eigen::Index>(cell);
  const Eigen::RowVectorXd v = (1.0 - s) * c.row(i) + s * c.row(i + 1);
  const double h = basis->cell_width(cell);
  double value = h * v.squaredNorm();
  if (tau_weight > 0.0) value += tau_weight * h * ref->pdf(basis->node(cell) + s * h);
  return value;
}

double SIRT::Slice::unnormalized_pdf(double x) const {
  const auto [cell, t] = basis->locate(x);
  return pdf(cell, t) / basis->cell_width(cell);
}

double SIRT::Slice::cdf(double x) const {
  const auto [cell, t] = basis->locate(x);
  const double value = (cumulative[cell] + partial(cell, t)) / total;
  return std::clamp(value, 0.0, 1.0);
}

double SIRT::Slice::invert(double u) const {
  if (u <= 0.0) return basis->lower();
  if (u >= 1.0) return basis->upper();
  const double target = u * total;
  // Last node with cumulative mass <= target.
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  std::size_t cell = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
  cell = std::clamp<std::size_t>(cell, 1, cumulative.size() - 1) - 1;
  const double want = target - cumulative[cell];
  double lo = 0.0, hi = 1.0;
  const double cell_mass = cumulative[cell + 1] - cumulative[cell];
  double s = cell_mass > 0.0 ? std::clamp(want / cell_mass, 0.0, 1.0) : 0.5;
  for (int iter = 0; iter < kInversionIterations; ++iter) {
    const double residual = partial(cell, s) - want;
    if (std::abs(residual) <= kInversionTolerance * total) break;
    if (residual > 0.0) {
      hi = s;
    } else {
      lo = s;
    }
    const double slope = pdf(cell, s);
    double next = slope > 0.0 ? s - residual / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-16) break;
    const bool settled = std::abs(next - s) <= 1e-15;
    s = next;
    if (settled) break;
  }
  return basis->node(cell) + s * basis->cell_width(cell);
}

double SIRT::conditional_cdf(std::size_t k, std::span<const double> prefix, double xk) const {
  if (k < 1 || k > dimension()) throw DomainError("SIRT: conditional index out of range");
  if (prefix.size() != k - 1) throw DomainError("SIRT: conditional needs k-1 prefix coordinates");
  double tau_weight = 0.0;
  if (tau_ > 0.0) {
    double log_ref = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) log_ref += reference_[j].log_pdf(prefix[j]);
    tau_weight = tau_ * std::exp(log_ref);
  }
  return make_slice(k, tt_.left_product(prefix, k - 1), tau_weight).cdf(xk);
}

double SIRT::invert_conditional_cdf(std::size_t k, std::span<const double> prefix, double u) const {
  if (k < 1 || k > dimension()) throw DomainError("SIRT: conditional index out of range");
  if (prefix.size() != k - 1) throw DomainError("SIRT: conditional needs k-1 prefix coordinates");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("SIRT: CDF level must lie in [0, 1]");
  double tau_weight = 0.0;
  if (tau_ > 0.0) {
    double log_ref = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) log_ref += reference_[j].log_pdf(prefix[j]);
    tau_weight = tau_ * std::exp(log_ref);
  }
  return make_slice(k, tt_.left_product(prefix, k - 1), tau_weight).invert(u);
}

double SIRT::irt(std::span<const double> u, std::span<double> x) const {
  const std::size_t d = dimension();
  if (u.size() != d || x.size() != d) throw DomainError("SIRT: irt dimension mismatch");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  double log_ref = 0.0;
  double log_p = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    const double tau_weight = tau_ > 0.0 ? tau_ * std::exp(log_ref) : 0.0;
    const Slice slice = make_slice(k, row, tau_weight);
    const double xi = reference_[k - 1].cdf(u[k - 1]);
    x[k - 1] = slice.invert(xi);
    log_p += std::log(slice.unnormalized_pdf(x[k - 1])) - std::log(slice.total);
    tt_.apply_core(k - 1, x[k - 1], row);
    if (tau_ > 0.0) log_ref += reference_[k - 1].log_pdf(x[k - 1]);
  }
  return log_p;
}

double SIRT::rt(std::span<const double> x, std::span<double> u) const {
  const std::size_t d = dimension();
  if (u.size() != d || x.size() != d) throw DomainError("SIRT: rt dimension mismatch");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  double log_ref = 0.0;
  double log_p = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    const double tau_weight = tau_ > 0.0 ? tau_ * std::exp(log_ref) : 0.0;
    const Slice slice = make_slice(k, row, tau_weight);
    u[k - 1] = reference_[k - 1].inverse_cdf(slice.cdf(x[k - 1]));
    log_p += std::log(slice.unnormalized_pdf(x[k - 1])) - std::log(slice.total);
    tt_.apply_core(k - 1, x[k - 1], row);
    if (tau_ > 0.0) log_ref += reference_[k - 1].log_pdf(x[k - 1]);
  }
  return log_p;
}

}  // namespace ttdis
