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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gradflow/core_types.hpp"
#include "gradflow/metrics.hpp"

namespace gradflow {

/// One experiment. Unset numeric fields (NaN) take flow-family defaults at resolve time.
struct ExperimentConfig {
  std::string name = "default";
  std::string preset;
  std::string target = "gaussian";
  double lambda = 1.0;
  std::string flow = "fisher-rao";
  std::vector<double> m0;
  /// Either d entries (diagonal) or d*d entries (row-major).
  std::vector<double> C0;
  /// Row-major observation operator, noise covariance and data for "linear-gaussian".
  std::vector<double> obs_H;
  std::vector<double> obs_R;
  std::vector<double> obs_y;
  int J = 100;
  double dt = std::numeric_limits<double>::quiet_NaN();
  double t_end = 15.0;
  long record_every = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  int grid_n = 2048;
  double ut_kappa = std::numeric_limits<double>::quiet_NaN();
  long oracle_points = 10'000'000;
  std::string oracle_cache;

  /// Canonical key=value text of every field that influences the output
  /// (everything except `name` and `out`).
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Named defaults: "fig-gaussian", "fig-logconcave", "fig-rosenbrock".
const std::vector<std::string>& preset_names();
void apply_preset(const std::string& name, ExperimentConfig& cfg);

/// Set one field from its config-file spelling. Throws ConfigError for an
/// unknown key or a malformed value.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parse flat `key = value` text with optional `[experiment name]` sections.
/// Keys before the first section are defaults for every experiment; a `preset`
/// key applies first, then the remaining keys in file order. Without sections
/// the file describes one experiment named "default". `#` starts a comment.
std::vector<ExperimentConfig> parse_config(const std::string& text);
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);

/// Family of the flow id.
enum class FlowFamily { kGaussian, kParticle, kGrid };
FlowFamily flow_family(const std::string& flow_id);

/// Checks every id, dimension and step parameter without computing anything.
/// Fills defaults (m0, C0, dt, record_every). Throws ConfigError.
ExperimentConfig resolve_config(const ExperimentConfig& cfg);

struct TrajectoryRow {
  long step = 0;
  double t = 0.0;
  ErrorTriple errors;
  /// Mean and row-major covariance; Gaussian flows only.
  std::vector<double> moments;
};

struct RunResult {
  ExperimentConfig config;  // resolved
  std::vector<TrajectoryRow> rows;
  bool failed = false;
  long failure_step = 0;
  std::string failure;
  std::string integrator;
  int exit_code() const { return failed ? 3 : 0; }
};

/// Run one resolved-or-raw experiment in memory. Numerical failures are
/// captured in the result; configuration errors throw ConfigError.
RunResult run_experiment(const ExperimentConfig& cfg);

/// RFC-4180 CSV with LF line endings: t, mean_err, cov_err, cos_err, then
/// m_i and C_ij for Gaussian flows, then status. A failure adds one row whose
/// status carries the message.
void write_csv(const RunResult& result, std::ostream& out);

/// `key=value` lines: config_hash, seed, version, integrator, dt and the
/// resolved configuration.
void write_metadata(const RunResult& result, std::ostream& out);

/// Run, then write `<out>` and `<out>.meta`. Returns the exit code (0 or 3).
int run_to_files(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Quote a CSV field when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

struct SweepEntry {
  std::string name;
  std::string hash;
  std::filesystem::path csv;
  std::string status;  // "ok", "failed", "cached"
  int exit_code = 0;
};

/// Run each config into `<dir>/<name>.csv` and write `<dir>/index.csv`.
/// Outputs whose sidecar records the same config hash and status ok are kept.
/// Returns the largest exit code.
int sweep(const std::vector<ExperimentConfig>& configs, const std::filesystem::path& dir,
          std::vector<SweepEntry>* entries = nullptr);

}  // namespace gradflow
