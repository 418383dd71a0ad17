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

#ifndef TTDIS_ERROR_HPP
#define TTDIS_ERROR_HPP

#include <span>
#include <stdexcept>
#include <string>

namespace ttdis {

/// A coordinate or argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not produce a usable result (non-finite
/// values, indefinite mass matrices, exhausted step budgets, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Formats a point as "(x1, x2, ...)" for error messages.
std::string format_point(std::span<const double> x);

}  // namespace ttdis

#endif  // TTDIS_ERROR_HPP
