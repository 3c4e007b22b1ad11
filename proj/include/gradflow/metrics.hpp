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

#include <vector>

#include "gradflow/core_types.hpp"
#include "gradflow/density_grid.hpp"
#include "gradflow/particle_flows.hpp"
#include "gradflow/targets.hpp"

namespace gradflow {

/// Distance of an approximation to the reference statistics:
/// mean_err = |E[theta] - E_ref[theta]|_2, cov_err = |Cov - Cov_ref|_F / |Cov_ref|_F,
/// cos_err = average over the test directions of the squared cosine-moment error.
struct ErrorTriple {
  double mean_err = 0.0;
  double cov_err = 0.0;
  double cos_err = 0.0;
  /// Squared error per cosine direction, in reference order.
  std::vector<double> cos_per_draw;
};

/// Cosine moments use the Gaussian closed form.
ErrorTriple error_triple(const GaussianState& g, const ReferenceStats& ref);

/// Empirical expectations with the 1/J covariance.
ErrorTriple error_triple(const Ensemble& e, const ReferenceStats& ref);

/// Trapezoid expectations for 1D grid densities.
ErrorTriple error_triple(const GridDensity& d, const ReferenceStats& ref);

/// KL[N(p) || N(q)] in closed form.
double gaussian_kl(const GaussianState& p, const GaussianState& q);

enum class SlopeMode {
  /// Slope of log(value) against t.
  kLogLinear,
  /// Slope of log(value) against log(t).
  kLogLog,
};

/// Least-squares slope over the points with t in [t_lo, t_hi]. Throws
/// MethodError with fewer than five points in the window or a nonpositive value.
double slope_fit(const std::vector<double>& t, const std::vector<double>& values, double t_lo, double t_hi,
                 SlopeMode mode = SlopeMode::kLogLinear);

}  // namespace gradflow
