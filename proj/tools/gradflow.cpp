// Copyright 2026 The gradflow Authors
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

// Command-line front end: run, sweep, oracle, check.
//
// Exit codes: 0 success, 1 acceptance failure, 2 configuration error,
// 3 numerical failure.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "gradflow/acceptance.hpp"
#include "gradflow/errors.hpp"
#include "gradflow/oracle.hpp"
#include "gradflow/runner.hpp"

namespace {

using namespace gradflow;

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

struct CommonOptions {
  std::string config;
  std::string preset;
  std::string experiment;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  std::optional<int> grid_n;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key=value config file with optional [experiment NAME] sections");
  cmd->add_option("--preset", o.preset, "fig-gaussian, fig-logconcave or fig-rosenbrock");
  cmd->add_option("--set", o.sets, "override one key, e.g. --set lambda=0.1 (repeatable)");
  cmd->add_option("--seed", o.seed, "RNG seed for particles and cosine draws");
  cmd->add_option("--threads", o.threads, "OpenMP threads (0 keeps the runtime default)");
  cmd->add_option("--grid-lo", o.grid_lo, "lower end of the 1D density grid");
  cmd->add_option("--grid-hi", o.grid_hi, "upper end of the 1D density grid");
  cmd->add_option("--grid-n", o.grid_n, "number of 1D grid nodes");
}

std::vector<ExperimentConfig> collect_configs(const CommonOptions& o) {
  std::vector<ExperimentConfig> configs;
  if (!o.config.empty() && !o.preset.empty()) {
    throw ConfigError("--preset cannot be combined with --config; put preset=NAME in the config file");
  }
  if (!o.config.empty()) {
    configs = load_config(o.config);
  } else {
    ExperimentConfig cfg;
    if (!o.preset.empty()) cfg.name = o.preset;
    configs.push_back(cfg);
  }
  std::vector<ExperimentConfig> out;
  for (ExperimentConfig cfg : configs) {
    if (!o.experiment.empty() && cfg.name != o.experiment) continue;
    if (!o.preset.empty()) apply_preset(o.preset, cfg);
    for (const auto& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.grid_lo) cfg.grid_lo = *o.grid_lo;
    if (o.grid_hi) cfg.grid_hi = *o.grid_hi;
    if (o.grid_n) cfg.grid_n = *o.grid_n;
    out.push_back(cfg);
  }
  if (out.empty()) throw ConfigError("no experiment named '" + o.experiment + "' in " + o.config);
  return out;
}

void apply_threads(int threads) {
  if (threads < 0) throw ConfigError("--threads must be nonnegative");
  if (threads > 0) omp_set_num_threads(threads);
}

int cmd_run(const CommonOptions& o) {
  apply_threads(o.threads);
  const auto configs = collect_configs(o);
  if (configs.size() > 1) {
    throw ConfigError("config defines " + std::to_string(configs.size()) +
                      " experiments; pick one with --experiment or use sweep");
  }
  ExperimentConfig cfg = configs.front();
  std::string out = o.out.empty() ? cfg.out : o.out;
  if (out.empty()) out = cfg.name + ".csv";
  const int code = run_to_files(cfg, out);
  std::cerr << cfg.name << ": " << (code == 0 ? "ok" : "numerical failure") << ", wrote " << out << " and " << out
            << ".meta\n";
  return code;
}

int cmd_sweep(const CommonOptions& o) {
  apply_threads(o.threads);
  const auto configs = collect_configs(o);
  const std::string dir = o.out.empty() ? "sweep_out" : o.out;
  std::vector<SweepEntry> entries;
  const int code = sweep(configs, dir, &entries);
  for (const auto& e : entries) std::cerr << e.name << ": " << e.status << " -> " << e.csv.string() << "\n";
  return code;
}

struct OracleOptions {
  std::string target = "rosenbrock";
  double lambda = 1.0;
  std::uint64_t seed = 0;
  long points = 10'000'000;
  long mc = 0;
  std::string cache;
  std::string out;
  int threads = 0;
};

int cmd_oracle(const OracleOptions& o) {
  apply_threads(o.threads);
  SemianalyticOptions opts;
  opts.points = o.points;
  std::optional<OracleCache> cache;
  if (!o.cache.empty()) cache.emplace(o.cache);
  const ReferenceStats stats = reference_stats(o.target, o.lambda, o.seed, opts, cache ? &*cache : nullptr);
  std::ostringstream body;
  write_reference_stats(stats, body);
  if (o.mc > 0) {
    const McEstimate est = mc_oracle(o.target, o.lambda, o.mc, o.seed, draw_cos_directions(2, o.seed));
    std::fprintf(stderr, "monte carlo (n=%ld): mean %.6g %.6g (se %.2g %.2g), acceptance %.3f\n", o.mc,
                 est.stats.mean[0], est.stats.mean[1], est.mean_se[0], est.mean_se[1], est.acceptance_rate);
  }
  if (o.out.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + o.out);
    f << body.str();
  }
  return 0;
}

int cmd_check(const std::vector<int>& only) {
  const auto results = acceptance::run_all(std::cout, std::set<int>(only.begin(), only.end()));
  int passed = 0;
  for (const auto& r : results) passed += r.pass ? 1 : 0;
  std::cout << passed << "/" << results.size() << " criteria passed\n";
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian and particle gradient-flow experiments"};
  app.set_version_flag("--version", std::string(GRADFLOW_VERSION));
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run one experiment and write CSV plus a .meta sidecar");
  add_common(run, run_opts);
  run->add_option("--experiment", run_opts.experiment, "section name to run");
  run->add_option("--out", run_opts.out, "output CSV path");

  CommonOptions sweep_opts;
  auto* sw = app.add_subcommand("sweep", "run every experiment in a config, skipping up-to-date outputs");
  add_common(sw, sweep_opts);
  sw->add_option("--out", sweep_opts.out, "output directory");

  OracleOptions oracle_opts;
  auto* orc = app.add_subcommand("oracle", "reference moments of a non-Gaussian target");
  orc->add_option("--target", oracle_opts.target, "gaussian, logconcave or rosenbrock");
  orc->add_option("--lambda", oracle_opts.lambda, "target parameter");
  orc->add_option("--seed", oracle_opts.seed, "seed for the cosine test directions");
  orc->add_option("--points", oracle_opts.points, "quadrature points per axis");
  orc->add_option("--mc", oracle_opts.mc, "also report a Monte Carlo estimate with this many samples");
  orc->add_option("--cache", oracle_opts.cache, "cache directory");
  orc->add_option("--out", oracle_opts.out, "output CSV path (stdout when omitted)");
  orc->add_option("--threads", oracle_opts.threads, "OpenMP threads");

  std::vector<int> only;
  auto* chk = app.add_subcommand("check", "run the acceptance criteria");
  chk->add_option("--criterion", only, "run only these criterion ids (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*sw) return cmd_sweep(sweep_opts);
    if (*orc) return cmd_oracle(oracle_opts);
    if (*chk) return cmd_check(only);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalExit;
  }
  return 0;
}
