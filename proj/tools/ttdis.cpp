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

// Command line front end: build, estimate, experiment, scaling, diagnose.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ttdis/error.hpp"
#include "ttdis/experiment.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "JSON experiment config")->required();
  cmd->add_option("--seed", common.seed, "Overrides the config seed");
  cmd->add_option("--out", common.out, "Output directory");
  cmd->add_option("--threads", common.threads, "Worker threads");
  cmd->add_flag("--verbose", common.verbose, "Progress notes on stderr");
}

ttdis::ExperimentConfig resolve(const Common& common) {
  auto config = ttdis::load_config(common.config_path);
  if (common.seed) config.seed = *common.seed;
  if (common.out) config.output = *common.out;
  if (common.threads) config.threads = *common.threads;
  config.validate();
  ttdis::set_verbose(common.verbose);
  return config;
}

void print_estimate(const ttdis::EstimateResult& r) {
  std::cout << "estimate " << r.summary.mean << " +- " << r.summary.std << " (rel std " << r.summary.rel_std
            << ", " << r.summary.replicates << " replicates)\n";
  std::cout << "d_hell " << r.d_hell_mean << " +- " << r.d_hell_std << "\n";
  if (r.summary.truth) {
    std::cout << "truth " << *r.summary.truth << ", relative error " << r.rel_error_mean << " +- "
              << r.rel_error_std << "\n";
  }
  std::cout << "build evaluations " << r.n_tt << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep importance sampling with squared tensor-train transports"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ttdis::library_version());

  Common build_opts, estimate_opts, experiment_opts, scaling_opts, diagnose_opts;
  std::vector<std::string> estimate_maps, diagnose_maps;
  std::string variable;
  std::vector<double> values;

  auto* build = app.add_subcommand("build", "Build the transport maps and write them with a build log");
  add_common(build, build_opts);
  auto* est = app.add_subcommand("estimate", "Replicate estimates from stored maps");
  add_common(est, estimate_opts);
  est->add_option("--dirt", estimate_maps, "Map files (numerator then denominator for posterior problems)");
  auto* exp = app.add_subcommand("experiment", "Build, estimate and summarize");
  add_common(exp, experiment_opts);
  auto* scale = app.add_subcommand("scaling", "Sweep one variable and tabulate the metrics");
  add_common(scale, scaling_opts);
  scale->add_option("--variable", variable, "gamma_star, n, max_rank, samples or compartments");
  scale->add_option("--values", values, "Values of the swept variable")->delimiter(',');
  auto* diag = app.add_subcommand("diagnose", "Hellinger distance and ESS of stored maps");
  add_common(diag, diagnose_opts);
  diag->add_option("--dirt", diagnose_maps, "Map files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) {
      const auto config = resolve(build_opts);
      const auto built = ttdis::run_build(config);
      std::cout << "build evaluations " << built.evaluations() << ", maps written to " << config.output << "\n";
    } else if (est->parsed()) {
      print_estimate(ttdis::run_estimate(resolve(estimate_opts), estimate_maps));
    } else if (exp->parsed()) {
      print_estimate(ttdis::run_experiment(resolve(experiment_opts)));
    } else if (scale->parsed()) {
      auto config = resolve(scaling_opts);
      if (!variable.empty()) config.scaling.variable = variable;
      if (!values.empty()) config.scaling.values = values;
      config.validate();
      const auto rows = ttdis::run_scaling(config);
      std::cout << rows.size() << " rows written to " << config.output << "/scaling.csv\n";
    } else if (diag->parsed()) {
      const auto doc = ttdis::diagnose(resolve(diagnose_opts), diagnose_maps);
      std::cout << doc.at("maps").dump(2) << "\n";
    }
  } catch (const ttdis::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ttdis::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ttdis::DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
