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
#include <optional>
#include <string>
#include <vector>

#include "gradflow/targets.hpp"

namespace gradflow {

/// Outer-grid settings for the semi-analytic reference integrals.
struct SemianalyticOptions {
  long points = 10'000'000;
  /// Window is the outer marginal's center +- half_widths * its standard deviation.
  double half_widths = 12.0;
  /// Largest tolerated fraction of mass in the outer 10% of the window on either side.
  double tail_tolerance = 1e-12;
};

/// Mean, covariance and cosine moments of the logconcave or rosenbrock
/// posterior. Both factor as an outer 1D marginal times a Gaussian
/// conditional; the conditional moments are closed-form and the outer
/// integral uses trapezoid weights. The "gaussian" target uses its closed form.
/// Throws MethodError when the window cuts off more than `tail_tolerance` mass.
ReferenceStats reference_stats_semianalytic(const std::string& target_id, double lambda,
                                            const std::vector<CosDirection>& draws,
                                            const SemianalyticOptions& options = {});

/// Monte Carlo estimate and its standard errors (same layout as ReferenceStats).
struct McEstimate {
  ReferenceStats stats;
  Vector mean_se;
  Matrix cov_se;
  std::vector<double> cos_se;
  double acceptance_rate = 1.0;
};

/// Exact sampling: gaussian directly, rosenbrock through its conditional
/// structure, logconcave by rejection for the outer marginal followed by the
/// Gaussian conditional. Throws ConfigError for n < 1e5 and MethodError for
/// an acceptance rate below 1e-4.
McEstimate mc_oracle(const std::string& target_id, double lambda, long n, std::uint64_t seed,
                     const std::vector<CosDirection>& draws);

/// Rejection sampler for the density proportional to exp(-x^4 / 20); exposed
/// for tests. `proposal_sd` scales the Gaussian proposal.
std::vector<double> sample_quartic_marginal(long n, std::uint64_t seed, double proposal_sd, double* acceptance_rate);

/// Reference statistics of a 1D target by trapezoid quadrature on a window
/// fitted to the target (closed form for Gaussian targets).
ReferenceStats reference_stats_1d(const TargetDensity& rho, const std::vector<CosDirection>& draws,
                                  long points = 200001);

/// Cache key for a semi-analytic table.
/// CSV `quantity,i,j,value` with rows version, mean, cov, cos_omega,
/// cos_phase and cos_value; the format read back by OracleCache::load.
void write_reference_stats(const ReferenceStats& stats, std::ostream& out);

struct OracleKey {
  std::string target;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  double half_widths = 12.0;
  long points = 0;

  std::string file_name() const;
};

/// On-disk cache of reference tables. One CSV file per key with header
/// `quantity,i,j,value`; quantities are `version`, `mean`, `cov`,
/// `cos_omega`, `cos_phase`, `cos_value`.
class OracleCache {
 public:
  static constexpr int kVersion = 1;

  explicit OracleCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<ReferenceStats> load(const OracleKey& key) const;
  void store(const OracleKey& key, const ReferenceStats& stats) const;
  std::filesystem::path path(const OracleKey& key) const { return dir_ / key.file_name(); }

 private:
  std::filesystem::path dir_;
};

/// Reference statistics for any 2D benchmark target with `draws` derived from
/// `seed`; uses the cache when given.
ReferenceStats reference_stats(const std::string& target_id, double lambda, std::uint64_t seed,
                               const SemianalyticOptions& options = {}, const OracleCache* cache = nullptr);

}  // namespace gradflow
