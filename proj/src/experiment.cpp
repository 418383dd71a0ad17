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

#include "ttdis/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "ttdis/cross_entropy.hpp"
#include "ttdis/error.hpp"
#include "ttdis/parallel.hpp"
#include "ttdis/serialization.hpp"

#ifndef TTDIS_VERSION
#define TTDIS_VERSION "unknown"
#endif

namespace ttdis {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::ostream* g_log = nullptr;

void note(const std::string& message) {
  if (g_log) *g_log << "[ttdis] " << message << '\n' << std::flush;
}

// ---------------------------------------------------------------------------
// Config reading

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::optional<double>>) {
      out = it->is_null() ? std::nullopt : std::optional<double>(it->template get<double>());
    } else if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) throw ConfigError(where + "." + key + " must be a non-negative integer");
      out = it->template get<T>();
    } else {
      out = it->template get<T>();
    }
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  const auto it = j.find(key);
  return it == j.end() ? empty : *it;
}

std::string fixed(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Sample standard deviation; zero for a single value.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

json layer_json(const LayerInfo& info) {
  return {{"beta", info.beta},         {"gamma", info.gamma},         {"ranks", info.ranks},
          {"residual", info.residual}, {"evaluations", info.evaluations}, {"sweeps", info.sweeps},
          {"rank_capped", info.rank_capped}, {"tau", info.tau},      {"zeta", info.zeta}};
}

json dirt_log(const std::string& name, const DIRT& dirt) {
  json layers = json::array();
  for (const auto& info : dirt.info()) layers.push_back(layer_json(info));
  return {{"name", name}, {"evaluations", dirt.evaluations()}, {"layers", layers}};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << text;
}

std::string csv_preamble(const ExperimentConfig& config) {
  return "# ttdis " + std::string(library_version()) + " config_hash=" + config_hash(config) +
         " seed=" + std::to_string(config.seed) + "\n";
}

void write_provenance(const ExperimentConfig& config) {
  ensure_dir(config.output);
  write_text(fs::path(config.output) / "provenance.json", provenance(config).dump(2) + "\n");
}

std::string replicate_lines(const std::vector<EstimatorReport>& reports) {
  std::string text;
  for (const auto& r : reports) text += report_to_json(r).dump() + "\n";
  return text;
}

std::vector<std::string> dirt_names(const ExperimentConfig& config) {
  if (config.posterior()) return {"numerator", "denominator"};
  return {"prior"};
}

// Replicates run in parallel with serial estimators inside, or serially with
// parallel estimators when there are fewer replicates than workers. Both give
// the same numbers because every estimator is worker-count invariant.
template <class Body>
void over_replicates(std::size_t replicates, std::size_t threads, Body&& body) {
  if (replicates >= threads) {
    parallel_for(replicates, threads, [&](std::size_t r) { body(r, std::size_t{1}); });
  } else {
    for (std::size_t r = 0; r < replicates; ++r) body(r, threads);
  }
}

}  // namespace

const char* library_version() { return TTDIS_VERSION; }

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (problem != "annulus" && problem != "sir" && problem != "toy") {
    throw ConfigError("problem must be one of annulus, sir, toy; got '" + problem + "'");
  }
  if (problem == "annulus") {
    AnnulusProblem p{annulus.center, annulus.inner_radius, annulus.outer_radius};
    p.validate();
  }
  if (problem == "toy" && !(toy.half_width > 0.0 && toy.noise_std > 0.0)) {
    throw ConfigError("toy: half_width and noise_std must be positive");
  }
  if (problem == "sir") {
    if (sir.compartments == 0) throw ConfigError("sir: compartments must be positive");
    if (!sir.x_true.empty() && sir.x_true.size() != 2 * sir.compartments) {
      throw ConfigError("sir: x_true needs two rates per compartment");
    }
    if (sir.monitored > sir.compartments) throw ConfigError("sir: monitored compartment out of range");
    OdeOptions{sir.abs_tol, sir.rel_tol, sir.max_steps}.validate();
  }
  auto check_ladder = [](double start, double ratio, const char* name) {
    if (!(start > 0.0 && start <= 1.0)) throw ConfigError(std::string(name) + "_start must lie in (0, 1]");
    if (!(ratio > 1.0)) throw ConfigError(std::string(name) + "_ratio must exceed 1");
  };
  if (!(schedule.gamma_star > 0.0)) throw ConfigError("gamma_star must be positive");
  check_ladder(schedule.beta_start, schedule.beta_ratio, "beta");
  if (posterior()) check_ladder(schedule.alpha_start, schedule.alpha_ratio, "alpha");
  if (cross.n < 2) throw ConfigError("cross.n must be at least 2");
  if (cross.tau && !(*cross.tau > 0.0)) throw ConfigError("cross.tau must be positive");
  CrossOptions{cross.max_rank,          cross.rank_increment, cross.sweeps, cross.tolerance, cross.initial_rank,
               cross.oversampling,      cross.residual_samples, cross.truncation_tolerance, seed}
      .validate();
  if (estimator.samples < 2) throw ConfigError("estimator.samples must be at least 2");
  if (estimator.replicates < 1) throw ConfigError("estimator.replicates must be at least 1");
  CouplingSpec{estimator.coupling}.validate();
  if (cross_entropy.enabled) {
    if (!(cross_entropy.elite_fraction > 0.0 && cross_entropy.elite_fraction < 1.0)) {
      throw ConfigError("cross_entropy.elite_fraction must lie in (0, 1)");
    }
    if (cross_entropy.components < 1 || cross_entropy.samples_per_iteration < 10 || cross_entropy.replicates < 1) {
      throw ConfigError("cross_entropy needs components >= 1, samples_per_iteration >= 10, replicates >= 1");
    }
  }
  static const std::set<std::string> variables{"gamma_star", "n", "max_rank", "samples", "compartments"};
  if (!variables.count(scaling.variable)) throw ConfigError("unknown scaling variable '" + scaling.variable + "'");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (output.empty()) throw ConfigError("output directory must be set");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  check_keys(j,
             {"problem", "annulus", "toy", "sir", "schedule", "cross", "estimator", "cross_entropy", "scaling", "seed",
              "threads", "output"},
             "config");
  read(j, "problem", c.problem, "config");
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  read(j, "output", c.output, "config");

  const auto& a = section(j, "annulus");
  check_keys(a, {"center", "inner_radius", "outer_radius"}, "annulus");
  read(a, "center", c.annulus.center, "annulus");
  read(a, "inner_radius", c.annulus.inner_radius, "annulus");
  read(a, "outer_radius", c.annulus.outer_radius, "annulus");

  const auto& t = section(j, "toy");
  check_keys(t, {"half_width", "observation", "noise_std", "threshold"}, "toy");
  read(t, "half_width", c.toy.half_width, "toy");
  read(t, "observation", c.toy.observation, "toy");
  read(t, "noise_std", c.toy.noise_std, "toy");
  read(t, "threshold", c.toy.threshold, "toy");

  const auto& s = section(j, "sir");
  check_keys(s,
             {"compartments", "adjacency_file", "observation_times", "horizon", "noise_std", "threshold", "monitored",
              "prior_upper", "reference_half_width", "x_true", "data_seed", "data_file", "abs_tol", "rel_tol",
              "max_steps"},
             "sir");
  read(s, "compartments", c.sir.compartments, "sir");
  read(s, "adjacency_file", c.sir.adjacency_file, "sir");
  read(s, "observation_times", c.sir.observation_times, "sir");
  read(s, "horizon", c.sir.horizon, "sir");
  read(s, "noise_std", c.sir.noise_std, "sir");
  read(s, "threshold", c.sir.threshold, "sir");
  read(s, "monitored", c.sir.monitored, "sir");
  read(s, "prior_upper", c.sir.prior_upper, "sir");
  read(s, "reference_half_width", c.sir.reference_half_width, "sir");
  read(s, "x_true", c.sir.x_true, "sir");
  read(s, "data_seed", c.sir.data_seed, "sir");
  read(s, "data_file", c.sir.data_file, "sir");
  read(s, "abs_tol", c.sir.abs_tol, "sir");
  read(s, "rel_tol", c.sir.rel_tol, "sir");
  read(s, "max_steps", c.sir.max_steps, "sir");

  const auto& sc = section(j, "schedule");
  check_keys(sc, {"gamma_star", "beta_start", "beta_ratio", "alpha_start", "alpha_ratio"}, "schedule");
  read(sc, "gamma_star", c.schedule.gamma_star, "schedule");
  read(sc, "beta_start", c.schedule.beta_start, "schedule");
  read(sc, "beta_ratio", c.schedule.beta_ratio, "schedule");
  read(sc, "alpha_start", c.schedule.alpha_start, "schedule");
  read(sc, "alpha_ratio", c.schedule.alpha_ratio, "schedule");

  const auto& cr = section(j, "cross");
  check_keys(cr,
             {"n", "max_rank", "initial_rank", "rank_increment", "sweeps", "tolerance", "residual_samples",
              "oversampling", "truncation_tolerance", "tau"},
             "cross");
  read(cr, "n", c.cross.n, "cross");
  read(cr, "max_rank", c.cross.max_rank, "cross");
  read(cr, "initial_rank", c.cross.initial_rank, "cross");
  read(cr, "rank_increment", c.cross.rank_increment, "cross");
  read(cr, "sweeps", c.cross.sweeps, "cross");
  read(cr, "tolerance", c.cross.tolerance, "cross");
  read(cr, "residual_samples", c.cross.residual_samples, "cross");
  read(cr, "oversampling", c.cross.oversampling, "cross");
  read(cr, "truncation_tolerance", c.cross.truncation_tolerance, "cross");
  read(cr, "tau", c.cross.tau, "cross");

  const auto& e = section(j, "estimator");
  check_keys(e, {"samples", "replicates", "coupling", "hellinger"}, "estimator");
  read(e, "samples", c.estimator.samples, "estimator");
  read(e, "replicates", c.estimator.replicates, "estimator");
  read(e, "coupling", c.estimator.coupling, "estimator");
  read(e, "hellinger", c.estimator.hellinger, "estimator");

  const auto& ce = section(j, "cross_entropy");
  check_keys(ce,
             {"enabled", "components", "samples_per_iteration", "final_samples", "elite_fraction", "max_iterations",
              "replicates"},
             "cross_entropy");
  read(ce, "enabled", c.cross_entropy.enabled, "cross_entropy");
  read(ce, "components", c.cross_entropy.components, "cross_entropy");
  read(ce, "samples_per_iteration", c.cross_entropy.samples_per_iteration, "cross_entropy");
  read(ce, "final_samples", c.cross_entropy.final_samples, "cross_entropy");
  read(ce, "elite_fraction", c.cross_entropy.elite_fraction, "cross_entropy");
  read(ce, "max_iterations", c.cross_entropy.max_iterations, "cross_entropy");
  read(ce, "replicates", c.cross_entropy.replicates, "cross_entropy");

  const auto& sg = section(j, "scaling");
  check_keys(sg, {"variable", "values"}, "scaling");
  read(sg, "variable", c.scaling.variable, "scaling");
  read(sg, "values", c.scaling.values, "scaling");

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output"] = c.output;
  j["annulus"] = {{"center", c.annulus.center},
                  {"inner_radius", c.annulus.inner_radius},
                  {"outer_radius", c.annulus.outer_radius}};
  j["toy"] = {{"half_width", c.toy.half_width},
              {"observation", c.toy.observation},
              {"noise_std", c.toy.noise_std},
              {"threshold", c.toy.threshold}};
  j["sir"] = {{"compartments", c.sir.compartments},
              {"adjacency_file", c.sir.adjacency_file},
              {"observation_times", c.sir.observation_times},
              {"horizon", c.sir.horizon},
              {"noise_std", c.sir.noise_std},
              {"threshold", c.sir.threshold},
              {"monitored", c.sir.monitored},
              {"prior_upper", c.sir.prior_upper},
              {"reference_half_width", c.sir.reference_half_width},
              {"x_true", c.sir.x_true},
              {"data_seed", c.sir.data_seed},
              {"data_file", c.sir.data_file},
              {"abs_tol", c.sir.abs_tol},
              {"rel_tol", c.sir.rel_tol},
              {"max_steps", c.sir.max_steps}};
  j["schedule"] = {{"gamma_star", c.schedule.gamma_star},
                   {"beta_start", c.schedule.beta_start},
                   {"beta_ratio", c.schedule.beta_ratio},
                   {"alpha_start", c.schedule.alpha_start},
                   {"alpha_ratio", c.schedule.alpha_ratio}};
  j["cross"] = {{"n", c.cross.n},
                {"max_rank", c.cross.max_rank},
                {"initial_rank", c.cross.initial_rank},
                {"rank_increment", c.cross.rank_increment},
                {"sweeps", c.cross.sweeps},
                {"tolerance", c.cross.tolerance},
                {"residual_samples", c.cross.residual_samples},
                {"oversampling", c.cross.oversampling},
                {"truncation_tolerance", c.cross.truncation_tolerance},
                {"tau", c.cross.tau ? json(*c.cross.tau) : json(nullptr)}};
  j["estimator"] = {{"samples", c.estimator.samples},
                    {"replicates", c.estimator.replicates},
                    {"coupling", c.estimator.coupling},
                    {"hellinger", c.estimator.hellinger}};
  j["cross_entropy"] = {{"enabled", c.cross_entropy.enabled},
                        {"components", c.cross_entropy.components},
                        {"samples_per_iteration", c.cross_entropy.samples_per_iteration},
                        {"final_samples", c.cross_entropy.final_samples},
                        {"elite_fraction", c.cross_entropy.elite_fraction},
                        {"max_iterations", c.cross_entropy.max_iterations},
                        {"replicates", c.cross_entropy.replicates}};
  j["scaling"] = {{"variable", c.scaling.variable}, {"values", c.scaling.values}};
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  // Worker count and output directory do not change any result.
  json j = json::parse(serialize_config(config));
  j.erase("threads");
  j.erase("output");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json provenance(const ExperimentConfig& config) {
  return {{"version", library_version()},
          {"config_hash", config_hash(config)},
          {"seed", config.seed},
          {"config", json::parse(serialize_config(config))}};
}

// ---------------------------------------------------------------------------
// Problems

SirProblem make_sir_problem(const SirConfig& c) {
  SirProblem p = SirProblem::lattice(c.compartments);
  if (!c.adjacency_file.empty()) {
    p.adjacency = load_adjacency(c.adjacency_file);
    if (p.adjacency.size() != c.compartments) {
      throw ConfigError("adjacency file " + c.adjacency_file + " declares " + std::to_string(p.adjacency.size()) +
                        " compartments, config has " + std::to_string(c.compartments));
    }
  }
  if (!c.observation_times.empty()) p.observation_times = c.observation_times;
  p.horizon = c.horizon;
  p.noise_std = c.noise_std;
  p.threshold = c.threshold;
  if (c.monitored > 0) p.monitored = c.monitored - 1;
  p.prior_upper = c.prior_upper;
  p.reference_half_width = c.reference_half_width;
  p.ode = OdeOptions{c.abs_tol, c.rel_tol, c.max_steps};
  p.validate();
  if (!c.data_file.empty()) {
    std::ifstream in(c.data_file);
    if (!in) throw ConfigError("cannot open data file " + c.data_file);
    p.data = read_data_csv(in, c.compartments, p.observation_times.size());
  } else {
    std::vector<double> x_true = c.x_true;
    if (x_true.empty()) {
      for (std::size_t k = 0; k < c.compartments; ++k) {
        x_true.push_back(0.1);
        x_true.push_back(1.0);
      }
    }
    p.data = p.generate_data(x_true, c.data_seed);
  }
  return p;
}

ProblemSetup make_problem(const ExperimentConfig& config) {
  config.validate();
  ProblemSetup setup;
  if (config.problem == "annulus") {
    const AnnulusProblem p{config.annulus.center, config.annulus.inner_radius, config.annulus.outer_radius};
    setup.reference = p.reference();
    setup.model = p.model();
    setup.event = p.event();
    setup.truth = p.exact_probability();
  } else if (config.problem == "toy") {
    const ToyGaussianProblem p{config.toy.half_width, config.toy.observation, config.toy.noise_std,
                               config.toy.threshold};
    setup.reference = p.reference();
    setup.model = p.model();
    setup.event = p.event();
    setup.posterior = true;
    setup.truth = p.exact_ratio();
  } else {
    const SirProblem p = make_sir_problem(config.sir);
    setup.reference = p.reference();
    setup.model = p.model();
    setup.event = FailureEvent::above(p.threshold);
    setup.posterior = true;
  }
  const Model model = setup.model;
  const FailureEvent event = setup.event;
  const bool posterior = setup.posterior;
  setup.log_target = [model, event, posterior](std::span<const double> x) {
    const ModelPoint m = model(x);
    if (event.indicator(m.response) == 0.0) return kNegInf;
    return posterior ? m.log_prior + m.log_likelihood : m.log_prior;
  };
  if (posterior) {
    setup.log_evidence = [model](std::span<const double> x) {
      const ModelPoint m = model(x);
      return m.log_prior + m.log_likelihood;
    };
  }
  return setup;
}

// ---------------------------------------------------------------------------
// Build and estimate

std::size_t BuildResult::evaluations() const {
  std::size_t total = 0;
  for (const auto& d : dirts) total += d.evaluations();
  return total;
}

BuildResult build(const ExperimentConfig& config, const ProblemSetup& setup) {
  DirtOptions options;
  options.bases = setup.reference.uniform_bases(config.cross.n);
  const auto& c = config.cross;
  options.cross = CrossOptions{c.max_rank,     c.rank_increment,   c.sweeps,
                               c.tolerance,    c.initial_rank,     c.oversampling,
                               c.residual_samples, c.truncation_tolerance, config.seed};
  options.tau = c.tau;
  options.threads = config.threads;

  const auto betas = geometric_ladder(config.schedule.beta_start, config.schedule.beta_ratio);
  BuildResult result;
  if (!setup.posterior) {
    std::vector<double> gammas;
    for (double b : betas) gammas.push_back(b * config.schedule.gamma_star);
    note("building prior map with " + std::to_string(gammas.size()) + " layers");
    result.names = {"prior"};
    result.dirts.push_back(build_dirt(prior_bridging(setup.model, setup.event, gammas), setup.reference, options));
  } else {
    const auto alphas = geometric_ladder(config.schedule.alpha_start, config.schedule.alpha_ratio);
    note("building numerator map with " + std::to_string(betas.size()) + " layers");
    result.names = {"numerator", "denominator"};
    result.dirts.push_back(build_dirt(
        posterior_numerator_bridging(setup.model, setup.event, betas, config.schedule.gamma_star), setup.reference,
        options));
    note("building denominator map with " + std::to_string(alphas.size()) + " layers");
    options.cross.seed = config.seed + 1;
    result.dirts.push_back(
        build_dirt(posterior_denominator_bridging(setup.model, alphas), setup.reference, options));
  }
  json maps = json::array();
  for (std::size_t i = 0; i < result.dirts.size(); ++i) maps.push_back(dirt_log(result.names[i], result.dirts[i]));
  result.log = {{"maps", maps}, {"evaluations", result.evaluations()}};
  note("build used " + std::to_string(result.evaluations()) + " evaluations");
  return result;
}

EstimateResult estimate(const ExperimentConfig& config, const ProblemSetup& setup, const BuildResult& built) {
  const std::size_t expected = setup.posterior ? 2 : 1;
  if (built.dirts.size() != expected) {
    throw ConfigError("expected " + std::to_string(expected) + " maps for problem " + config.problem);
  }
  for (const auto& d : built.dirts) {
    if (!(d.reference() == setup.reference)) throw ConfigError("stored map does not match the problem reference");
  }
  const std::size_t m = config.estimator.replicates;
  EstimateResult result;
  result.replicates.resize(m);
  std::vector<std::optional<double>> den_hell(m);
  note("estimating with " + std::to_string(m) + " replicates of " + std::to_string(config.estimator.samples) +
       " samples");
  over_replicates(m, config.threads, [&](std::size_t r, std::size_t threads) {
    SampleOptions so;
    so.n = config.estimator.samples;
    so.seed = config.seed;
    so.replicate = r;
    so.threads = threads;
    so.hellinger = config.estimator.hellinger;
    if (!setup.posterior) {
      result.replicates[r] = dis_estimate(built.dirts[0], setup.log_target, so);
    } else {
      const auto rr = ratio_estimate(built.dirts[0], setup.log_target, built.dirts[1], setup.log_evidence,
                                     CouplingSpec{config.estimator.coupling}, so);
      result.replicates[r] = rr.ratio;
      result.replicates[r].d_hell = rr.numerator.d_hell;
      result.replicates[r].d_hell_se = rr.numerator.d_hell_se;
      den_hell[r] = rr.denominator.d_hell;
    }
  });

  result.n_tt = built.evaluations();
  std::vector<double> estimates, hell, den, errors;
  for (std::size_t r = 0; r < m; ++r) {
    auto& rep = result.replicates[r];
    rep.n_evals += result.n_tt;
    estimates.push_back(rep.estimate);
    if (rep.d_hell) hell.push_back(*rep.d_hell);
    if (den_hell[r]) den.push_back(*den_hell[r]);
    if (setup.truth) errors.push_back(std::abs(rep.estimate - *setup.truth) / *setup.truth);
  }
  result.summary = summarize_replicates(estimates, setup.truth);
  result.d_hell_mean = mean_of(hell);
  result.d_hell_std = std_of(hell);
  if (!den.empty()) result.d_hell_denominator = mean_of(den);
  result.rel_error_mean = mean_of(errors);
  result.rel_error_std = std_of(errors);
  return result;
}

CrossEntropySummary cross_entropy_baseline(const ExperimentConfig& config, const ProblemSetup& setup) {
  const auto& c = config.cross_entropy;
  CrossEntropySummary out;
  out.replicates.resize(c.replicates);
  note("cross entropy baseline with " + std::to_string(c.replicates) + " replicates");
  over_replicates(c.replicates, config.threads, [&](std::size_t r, std::size_t threads) {
    CrossEntropyOptions o;
    o.components = c.components;
    o.samples_per_iteration = c.samples_per_iteration;
    o.final_samples = c.final_samples;
    o.elite_fraction = c.elite_fraction;
    o.max_iterations = c.max_iterations;
    o.seed = config.seed;
    o.replicate = r;
    o.threads = threads;
    if (setup.posterior) {
      out.replicates[r] = cross_entropy_posterior_probability(setup.model, setup.reference, setup.event, o).ratio;
    } else {
      out.replicates[r] = cross_entropy_event(setup.model, setup.reference, setup.event, false, o).report;
    }
  });
  std::vector<double> estimates, evals;
  for (const auto& r : out.replicates) {
    estimates.push_back(r.estimate);
    evals.push_back(static_cast<double>(r.n_evals));
  }
  out.summary = summarize_replicates(estimates, setup.truth);
  out.n_evals_mean = mean_of(evals);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

json report_to_json(const EstimatorReport& r) {
  return {{"replicate", r.replicate},
          {"seed", r.seed},
          {"estimate", r.estimate},
          {"n", r.n},
          {"std_error", r.std_error},
          {"rel_std", r.rel_std},
          {"ess", r.ess},
          {"weight_rel_var", r.weight_rel_var},
          {"d_hell", r.d_hell ? json(*r.d_hell) : json(nullptr)},
          {"d_hell_se", r.d_hell ? json(r.d_hell_se) : json(nullptr)},
          {"n_evals", r.n_evals},
          {"degenerate", r.degenerate}};
}

std::string summary_csv_header() {
  return "problem,dimension,gamma_star,n,max_rank,samples,replicates,n_tt,d_hell_mean,d_hell_std,"
         "estimate_mean,estimate_std,rel_std,truth,rel_bias,rel_error_mean,rel_error_std,"
         "ce_estimate_mean,ce_estimate_std,ce_rel_std,ce_n_evals\n";
}

std::string summary_csv_row(const ExperimentConfig& config, const EstimateResult& r, const CrossEntropySummary* ce) {
  const std::size_t dim = config.problem == "annulus" ? 2 : config.problem == "toy" ? 1 : 2 * config.sir.compartments;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream os;
  os << config.problem << ',' << dim << ',' << fixed(config.schedule.gamma_star) << ',' << config.cross.n << ','
     << config.cross.max_rank << ',' << config.estimator.samples << ',' << config.estimator.replicates << ','
     << r.n_tt << ',' << fixed(r.d_hell_mean) << ',' << fixed(r.d_hell_std) << ',' << fixed(r.summary.mean) << ','
     << fixed(r.summary.std) << ',' << fixed(r.summary.rel_std) << ',' << fixed(r.summary.truth.value_or(nan))
     << ',' << fixed(r.summary.truth ? r.summary.rel_bias : nan) << ','
     << fixed(r.summary.truth ? r.rel_error_mean : nan) << ',' << fixed(r.summary.truth ? r.rel_error_std : nan)
     << ',' << fixed(ce ? ce->summary.mean : nan) << ',' << fixed(ce ? ce->summary.std : nan) << ','
     << fixed(ce ? ce->summary.rel_std : nan) << ',' << fixed(ce ? ce->n_evals_mean : nan) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Entry points

BuildResult run_build(const ExperimentConfig& config) {
  const auto setup = make_problem(config);
  write_provenance(config);
  BuildResult built = build(config, setup);
  const json meta = {{"config_hash", config_hash(config)}, {"version", library_version()}};
  for (std::size_t i = 0; i < built.dirts.size(); ++i) {
    save_dirt((fs::path(config.output) / ("dirt_" + built.names[i] + ".bin")).string(), built.dirts[i], meta.dump());
  }
  json log = built.log;
  log["provenance"] = provenance(config);
  write_text(fs::path(config.output) / "build_log.json", log.dump(2) + "\n");
  return built;
}

namespace {

BuildResult load_built(const ExperimentConfig& config, const std::vector<std::string>& paths) {
  BuildResult built;
  built.names = dirt_names(config);
  std::vector<std::string> files = paths;
  if (files.empty()) {
    for (const auto& name : built.names) files.push_back((fs::path(config.output) / ("dirt_" + name + ".bin")).string());
  }
  if (files.size() != built.names.size()) {
    throw ConfigError("problem " + config.problem + " needs " + std::to_string(built.names.size()) + " map files");
  }
  json maps = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    built.dirts.push_back(load_dirt(files[i]));
    maps.push_back(dirt_log(built.names[i], built.dirts.back()));
  }
  built.log = {{"maps", maps}, {"evaluations", built.evaluations()}};
  return built;
}

void write_estimate_outputs(const ExperimentConfig& config, const EstimateResult& result,
                            const CrossEntropySummary* ce) {
  const fs::path out(config.output);
  write_text(out / "replicates.jsonl", replicate_lines(result.replicates));
  if (ce) write_text(out / "ce_replicates.jsonl", replicate_lines(ce->replicates));
  write_text(out / "summary.csv", csv_preamble(config) + summary_csv_header() + summary_csv_row(config, result, ce));
}

}  // namespace

EstimateResult run_estimate(const ExperimentConfig& config, const std::vector<std::string>& dirt_paths) {
  const auto setup = make_problem(config);
  const auto built = load_built(config, dirt_paths);
  write_provenance(config);
  const auto result = estimate(config, setup, built);
  write_estimate_outputs(config, result, nullptr);
  return result;
}

EstimateResult run_experiment(const ExperimentConfig& config) {
  const auto setup = make_problem(config);
  const BuildResult built = run_build(config);
  const auto result = estimate(config, setup, built);
  std::optional<CrossEntropySummary> ce;
  if (config.cross_entropy.enabled) ce = cross_entropy_baseline(config, setup);
  write_estimate_outputs(config, result, ce ? &*ce : nullptr);
  return result;
}

std::vector<EstimateResult> run_scaling(const ExperimentConfig& config) {
  config.validate();
  if (config.scaling.values.empty()) throw ConfigError("scaling.values is empty");
  write_provenance(config);
  const std::string& var = config.scaling.variable;
  std::string text = csv_preamble(config) + "variable,value," + summary_csv_header();
  std::vector<EstimateResult> results;
  for (double value : config.scaling.values) {
    ExperimentConfig c = config;
    const bool integral = var != "gamma_star";
    if (integral && !(value >= 1.0 && value == std::floor(value))) {
      throw ConfigError("scaling value for " + var + " must be a positive integer");
    }
    const auto count = static_cast<std::size_t>(value);
    if (var == "gamma_star") c.schedule.gamma_star = value;
    if (var == "n") c.cross.n = count;
    if (var == "max_rank") {
      c.cross.max_rank = count;
      c.cross.initial_rank = std::min(c.cross.initial_rank, count);
    }
    if (var == "samples") c.estimator.samples = count;
    if (var == "compartments") {
      if (config.problem != "sir") throw ConfigError("compartments can only be swept for the sir problem");
      c.sir.compartments = count;
      c.sir.x_true.clear();
    }
    note("scaling " + var + " = " + fixed(value));
    const auto setup = make_problem(c);
    const auto built = build(c, setup);
    results.push_back(estimate(c, setup, built));
    text += var + "," + fixed(value) + "," + summary_csv_row(c, results.back(), nullptr);
  }
  write_text(fs::path(config.output) / "scaling.csv", text);
  return results;
}

json diagnose(const ExperimentConfig& config, const std::vector<std::string>& dirt_paths) {
  const auto setup = make_problem(config);
  const auto built = load_built(config, dirt_paths);
  write_provenance(config);
  json maps = json::array();
  for (std::size_t i = 0; i < built.dirts.size(); ++i) {
    SampleOptions so;
    so.n = config.estimator.samples;
    so.seed = config.seed;
    so.threads = config.threads;
    const LogDensity& target = i == 0 ? setup.log_target : setup.log_evidence;
    const auto r = dis_estimate(built.dirts[i], target, so);
    maps.push_back({{"name", built.names[i]},
                    {"layers", built.dirts[i].layer_count()},
                    {"build_evaluations", built.dirts[i].evaluations()},
                    {"integral", r.estimate},
                    {"rel_std", r.rel_std},
                    {"ess", r.ess},
                    {"ess_fraction", r.ess / static_cast<double>(so.n)},
                    {"d_hell", r.d_hell ? json(*r.d_hell) : json(nullptr)},
                    {"d_hell_se", r.d_hell ? json(r.d_hell_se) : json(nullptr)}});
  }
  json doc = {{"provenance", provenance(config)}, {"maps", maps}};
  write_text(fs::path(config.output) / "diagnose.json", doc.dump(2) + "\n");
  return doc;
}

void set_verbose(bool verbose) { g_log = verbose ? &std::cerr : nullptr; }

}  // namespace ttdis
