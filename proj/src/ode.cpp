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

#include "ttdis/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttdis/error.hpp"

namespace ttdis {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// Step-size controller constants.
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kMinFactor = 0.2;  // largest growth is 1 / kMinFactor
constexpr double kMaxFactor = 10.0;  // largest shrink

}  // namespace

void OdeOptions::validate() const {
  if (!(abs_tol > 0.0 && rel_tol > 0.0)) throw ConfigError("ODE tolerances must be positive");
  if (max_steps == 0) throw ConfigError("ODE step budget must be positive");
}

void DenseStep::eval(double theta, std::span<double> y) const {
  const std::size_t n = y.size();
  const double theta1 = 1.0 - theta;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = coeffs[i] +
           theta * (coeffs[n + i] +
                    theta1 * (coeffs[2 * n + i] + theta * (coeffs[3 * n + i] + theta1 * coeffs[4 * n + i])));
  }
}

double DenseStep::component(std::size_t i, double theta) const {
  const std::size_t n = coeffs.size() / 5;
  const double theta1 = 1.0 - theta;
  return coeffs[i] +
         theta * (coeffs[n + i] +
                  theta1 * (coeffs[2 * n + i] + theta * (coeffs[3 * n + i] + theta1 * coeffs[4 * n + i])));
}

std::vector<double> OdeSolution::value(double t) const {
  if (steps_.empty()) throw DomainError("ODE solution has no steps");
  const double lo = steps_.front().t0;
  const double hi = steps_.back().t0 + steps_.back().h;
  if (t < lo - 1e-12 * std::abs(hi - lo) || t > hi + 1e-12 * std::abs(hi - lo)) {
    throw DomainError("dense output requested outside the integration interval");
  }
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double value, const DenseStep& s) { return value < s.t0; });
  const DenseStep& step = it == steps_.begin() ? *it : *std::prev(it);
  std::vector<double> y(dimension_);
  step.eval(std::clamp((t - step.t0) / step.h, 0.0, 1.0), y);
  return y;
}

OdeSolution integrate_dopri5(const OdeRhs& rhs, std::span<const double> y0, double t0, double t1,
                             std::span<const double> stops, const OdeOptions& options) {
  options.validate();
  if (!(t1 > t0)) throw DomainError("ODE interval must have t1 > t0");
  const std::size_t n = y0.size();
  OdeSolution sol;
  sol.dimension_ = n;

  std::vector<double> y(y0.begin(), y0.end()), ynew(n), ytmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  auto scale = [&](double a, double b) {
    return options.abs_tol + options.rel_tol * std::max(std::abs(a), std::abs(b));
  };

  rhs(t0, y, k1);
  // Initial step from the usual two-derivative heuristic.
  double h;
  {
    double dn0 = 0.0, dn1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = scale(y[i], y[i]);
      dn0 += (y[i] / sk) * (y[i] / sk);
      dn1 += (k1[i] / sk) * (k1[i] / sk);
    }
    dn0 = std::sqrt(dn0 / static_cast<double>(n));
    dn1 = std::sqrt(dn1 / static_cast<double>(n));
    double h0 = (dn0 < 1e-10 || dn1 < 1e-10) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, t1 - t0);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h0 * k1[i];
    rhs(t0 + h0, ytmp, k2);
    double dn2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = scale(y[i], y[i]);
      dn2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
    }
    dn2 = std::sqrt(dn2 / static_cast<double>(n)) / h0;
    const double dmax = std::max(dn1, dn2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, t1 - t0});
  }

  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= t0) ++next_stop;
  double t = t0;
  double fac_old = 1e-4;
  bool last_rejected = false;
  std::size_t count = 0;
  sol.steps_.reserve(64);

  while (t < t1) {
    if (++count > options.max_steps) {
      std::ostringstream os;
      os << "ODE step budget of " << options.max_steps << " exhausted at t = " << t;
      throw NumericalError(os.str());
    }
    const double target = next_stop < stops.size() ? std::min(stops[next_stop], t1) : t1;
    const double h_free = h;
    bool landing = false;
    if (t + h >= target - 1e-12 * std::abs(target)) {
      h = target - t;
      landing = true;
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i) {
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    rhs(t + h, ynew, k7);

    double err_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sk = scale(y[i], ynew[i]);
      err_norm += (e / sk) * (e / sk);
    }
    err_norm = std::sqrt(err_norm / static_cast<double>(n));
    if (!std::isfinite(err_norm)) {
      std::ostringstream os;
      os << "ODE state became non-finite at t = " << t;
      throw NumericalError(os.str());
    }

    const double fac11 = std::pow(err_norm, 0.2 - kBeta * 0.75);
    if (err_norm <= 1.0) {
      DenseStep step;
      step.t0 = t;
      step.h = h;
      step.coeffs.resize(5 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double dy = ynew[i] - y[i];
        const double bspl = h * k1[i] - dy;
        step.coeffs[i] = y[i];
        step.coeffs[n + i] = dy;
        step.coeffs[2 * n + i] = bspl;
        step.coeffs[3 * n + i] = dy - h * k7[i] - bspl;
        step.coeffs[4 * n + i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      sol.steps_.push_back(std::move(step));

      double fac = fac11 / std::pow(fac_old, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxFactor, 1.0 / kMinFactor);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      fac_old = std::max(err_norm, 1e-4);
      last_rejected = false;

      t = landing ? target : t + h;
      y.swap(ynew);
      std::swap(k1, k7);
      if (landing && next_stop < stops.size() && target == std::min(stops[next_stop], t1)) {
        sol.stop_values_.push_back(y);
        ++next_stop;
        while (next_stop < stops.size() && stops[next_stop] <= t) ++next_stop;
      }
      // A clipped step does not reflect the controller's choice.
      h = landing ? std::max(h_new, h_free) : h_new;
    } else {
      h /= std::min(1.0 / kMinFactor, fac11 / kSafety);
      last_rejected = true;
      ++sol.rejected_;
    }
  }
  sol.final_ = y;
  return sol;
}

}  // namespace ttdis
