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

#ifndef TTDIS_ODE_HPP
#define TTDIS_ODE_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ttdis {

struct OdeOptions {
  double abs_tol = 1e-6;
  double rel_tol = 1e-6;
  std::size_t max_steps = 100000;

  void validate() const;
};

/// dy = f(t, y).
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

/// Accepted step of the Dormand-Prince pair with its continuous extension.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  /// Five coefficient vectors of the fourth-order interpolant, concatenated.
  std::vector<double> coeffs;

  /// State at t0 + theta * h for theta in [0, 1].
  void eval(double theta, std::span<double> y) const;
  /// Single component of the interpolant.
  double component(std::size_t i, double theta) const;
};

class OdeSolution {
 public:
  std::size_t dimension() const { return dimension_; }
  const std::vector<DenseStep>& steps() const { return steps_; }
  std::size_t rejected() const { return rejected_; }

  /// State at the requested stop times, landed on exactly.
  const std::vector<std::vector<double>>& stops() const { return stop_values_; }
  const std::vector<double>& final_state() const { return final_; }

  /// Dense output anywhere in [t0, t1].
  std::vector<double> value(double t) const;

 private:
  friend OdeSolution integrate_dopri5(const OdeRhs&, std::span<const double>, double, double, std::span<const double>,
                                      const OdeOptions&);
  std::size_t dimension_ = 0;
  std::vector<DenseStep> steps_;
  std::vector<std::vector<double>> stop_values_;
  std::vector<double> final_;
  std::size_t rejected_ = 0;
};

/// Dormand-Prince 5(4) with PI step-size control on the mixed error
/// |e_i| / (abs_tol + rel_tol * |y_i|). Steps are shortened to land on every
/// time in `stops` (sorted, inside (t0, t1]). Throws NumericalError when the
/// step budget runs out or the state turns non-finite.
OdeSolution integrate_dopri5(const OdeRhs& rhs, std::span<const double> y0, double t0, double t1,
                             std::span<const double> stops, const OdeOptions& options);

}  // namespace ttdis

#endif  // TTDIS_ODE_HPP
