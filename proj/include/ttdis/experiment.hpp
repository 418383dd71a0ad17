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

#ifndef TTDIS_EXPERIMENT_HPP
#define TTDIS_EXPERIMENT_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttdis/dirt.hpp"
#include "ttdis/estimators.hpp"
#include "ttdis/problems.hpp"
#include "ttdis/rare_event.hpp"

namespace ttdis {

const char* library_version();
/// Progress notes on stderr.
void set_verbose(bool verbose);

struct AnnulusConfig {
  std::array<double, 2> center{0.4, 0.4};
  double inner_radius = 0.0;
  double outer_radius = 0.01;
  friend bool operator==(const AnnulusConfig&, const AnnulusConfig&) = default;
};

struct ToyConfig {
  double half_width = 8.0;
  double observation = 1.0;
  double noise_std = 0.5;
  double threshold = 2.0;
  friend bool operator==(const ToyConfig&, const ToyConfig&) = default;
};

struct SirConfig {
  std::size_t compartments = 1;
  /// Adjacency file; empty selects the periodic lattice.
  std::string adjacency_file;
  /// Empty selects 5j/6, j = 1..6.
  std::vector<double> observation_times;
  double horizon = 5.0;
  double noise_std = 1.0;
  double threshold = 80.0;
  /// 1-based; 0 selects the last compartment.
  std::size_t monitored = 0;
  double prior_upper = 2.0;
  double reference_half_width = 3.0;
  /// Empty selects (0.1, 1) repeated per compartment.
  std::vector<double> x_true;
  std::uint64_t data_seed = 0;
  /// Data CSV; empty generates synthetic data from x_true and data_seed.
  std::string data_file;
  double abs_tol = 1e-6;
  double rel_tol = 1e-6;
  std::size_t max_steps = 100000;
  friend bool operator==(const SirConfig&, const SirConfig&) = default;
};

/// Ladders are geometric and end exactly at 1. For prior problems the
/// smoothing widths are beta_l * gamma_star; for posterior problems the
/// numerator uses (beta_l, beta_l * gamma_star) and the denominator alpha_l.
struct ScheduleConfig {
  double gamma_star = 1e5;
  double beta_start = 1e-3;
  double beta_ratio = 3.1622776601683795;
  double alpha_start = 1e-4;
  double alpha_ratio = 2.154434690031884;
  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct CrossConfig {
  std::size_t n = 17;
  std::size_t max_rank = 2;
  std::size_t initial_rank = 2;
  std::size_t rank_increment = 0;
  std::size_t sweeps = 2;
  double tolerance = 1e-10;
  std::size_t residual_samples = 100;
  double oversampling = 1.0;
  double truncation_tolerance = 1e-12;
  std::optional<double> tau;
  friend bool operator==(const CrossConfig&, const CrossConfig&) = default;
};

struct EstimatorConfig {
  std::size_t samples = 65536;
  std::size_t replicates = 10;
  double coupling = 1.0;
  bool hellinger = true;
  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

struct CrossEntropyConfig {
  bool enabled = false;
  std::size_t components = 1;
  std::size_t samples_per_iteration = 100000;
  std::size_t final_samples = 0;
  double elite_fraction = 0.1;
  std::size_t max_iterations = 50;
  std::size_t replicates = 10;
  friend bool operator==(const CrossEntropyConfig&, const CrossEntropyConfig&) = default;
};

struct ScalingConfig {
  /// gamma_star | n | max_rank | samples | compartments
  std::string variable = "gamma_star";
  std::vector<double> values;
  friend bool operator==(const ScalingConfig&, const ScalingConfig&) = default;
};

struct ExperimentConfig {
  /// annulus | sir | toy
  std::string problem = "annulus";
  AnnulusConfig annulus;
  ToyConfig toy;
  SirConfig sir;
  ScheduleConfig schedule;
  CrossConfig cross;
  EstimatorConfig estimator;
  CrossEntropyConfig cross_entropy;
  ScalingConfig scaling;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output = "out";

  /// Throws ConfigError on unknown problems, invalid ladders or counts.
  void validate() const;
  bool posterior() const { return problem != "annulus"; }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Reads the JSON config format; unknown keys are errors, missing keys take
/// their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON text with every key present.
std::string serialize_config(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical text without threads and output, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
nlohmann::json provenance(const ExperimentConfig& config);

/// Everything the estimators need from a problem.
struct ProblemSetup {
  ProductReference reference;
  Model model;
  FailureEvent event;
  bool posterior = false;
  std::optional<double> truth;
  /// log rho* for prior problems, log of the numerator integrand otherwise.
  LogDensity log_target;
  /// log of the evidence integrand; empty for prior problems.
  LogDensity log_evidence;
};
ProblemSetup make_problem(const ExperimentConfig& config);
SirProblem make_sir_problem(const SirConfig& config);

/// One DIRT for prior problems ("prior"), two for posterior problems
/// ("numerator", "denominator").
struct BuildResult {
  std::vector<std::string> names;
  std::vector<DIRT> dirts;
  nlohmann::json log;
  std::size_t evaluations() const;
};
BuildResult build(const ExperimentConfig& config, const ProblemSetup& setup);

struct EstimateResult {
  std::vector<EstimatorReport> replicates;
  ReplicateSummary summary;
  /// Mean and spread of |estimate - truth| / truth over replicates.
  double rel_error_mean = 0.0;
  double rel_error_std = 0.0;
  double d_hell_mean = 0.0;
  double d_hell_std = 0.0;
  /// Hellinger distance of the denominator DIRT to the posterior.
  std::optional<double> d_hell_denominator;
  std::size_t n_tt = 0;
};
EstimateResult estimate(const ExperimentConfig& config, const ProblemSetup& setup, const BuildResult& built);

struct CrossEntropySummary {
  std::vector<EstimatorReport> replicates;
  ReplicateSummary summary;
  double n_evals_mean = 0.0;
};
CrossEntropySummary cross_entropy_baseline(const ExperimentConfig& config, const ProblemSetup& setup);

/// File-writing entry points used by the command line tool. Each writes
/// provenance.json into the output directory.
BuildResult run_build(const ExperimentConfig& config);
EstimateResult run_estimate(const ExperimentConfig& config, const std::vector<std::string>& dirt_paths);
EstimateResult run_experiment(const ExperimentConfig& config);
/// Writes scaling.csv, one row per swept value.
std::vector<EstimateResult> run_scaling(const ExperimentConfig& config);
/// Hellinger distance and ESS of stored DIRTs against the configured problem.
nlohmann::json diagnose(const ExperimentConfig& config, const std::vector<std::string>& dirt_paths);

/// Field names of the per-replicate JSONL records.
nlohmann::json report_to_json(const EstimatorReport& report);
std::string summary_csv_header();
std::string summary_csv_row(const ExperimentConfig& config, const EstimateResult& result,
                            const CrossEntropySummary* ce = nullptr);

}  // namespace ttdis

#endif  // TTDIS_EXPERIMENT_HPP
