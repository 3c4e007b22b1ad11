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

#include "gradflow/core_types.hpp"

namespace gradflow {

/// Uniform 1D grid with n nodes on [lo, hi].
struct Grid1D {
  double lo = -1.0;
  double hi = 1.0;
  int n = 2048;

  Grid1D() = default;
  /// Throws ConfigError unless hi > lo and n >= 3.
  Grid1D(double lo, double hi, int n);

  /// [center - half_widths * sigma, center + half_widths * sigma].
  static Grid1D around(double center, double sigma, int n = 2048, double half_widths = 10.0);

  double dx() const { return (hi - lo) / (n - 1); }
  double node(int i) const { return lo + dx() * i; }
  Vector nodes() const;
};

/// Trapezoid integral of `values` on `grid`, summed in ascending order.
double trapezoid(const Grid1D& grid, const Vector& values);

/// Probability density sampled on a grid, stored as log values normalized to
/// unit trapezoid mass. Zero density is stored as -inf.
class GridDensity {
 public:
  /// Normalizes; throws NonFiniteError for +inf/nan entries or zero mass.
  static GridDensity from_log(const Grid1D& grid, Vector log_values);
  /// Throws ConfigError for negative entries.
  static GridDensity from_values(const Grid1D& grid, const Vector& values);
  /// Restriction of exp(rho.log_density) to the grid (1D targets only).
  static GridDensity from_target(const Grid1D& grid, const TargetDensity& rho);

  const Grid1D& grid() const { return grid_; }
  const Vector& log_values() const { return log_values_; }
  Vector values() const { return log_values_.array().exp().matrix(); }
  double mass() const { return trapezoid(grid_, values()); }
  double mean() const;
  double variance() const;

 private:
  GridDensity(const Grid1D& grid, Vector log_values) : grid_(grid), log_values_(std::move(log_values)) {}

  Grid1D grid_;
  Vector log_values_;
};

/// log rho_post at the grid nodes relative to its value at the first node,
/// accumulated cell by cell from grad_log and hess_log with the endpoint-
/// corrected trapezoid rule (local error O(dx^5)). Reading only derivatives
/// makes the result independent of the additive constant in log_density.
Vector log_target_on_grid(const Grid1D& grid, const TargetDensity& rho);

enum class FrScheme { kEuler, kHeun };

/// One step of d rho = rho (r - E_rho[r]), r = log rho_post - log rho, then
/// renormalization. Euler multiplies by 1 + dt r; Heun averages the slopes at
/// rho and at the Euler predictor. Throws StepSizeError when a node would turn
/// nonpositive and NonFiniteError when d has zero-density nodes.
GridDensity fr_flow_step(const GridDensity& d, const Vector& log_post, double dt, FrScheme scheme = FrScheme::kHeun);

/// Normalized rho_0^{e^{-t}} rho_post^{1 - e^{-t}}.
GridDensity fr_closed_form(const GridDensity& rho0, const Vector& log_post, double t);

/// Trapezoid integral of p log(p / q). Returns +inf (and warns on stderr)
/// when q vanishes where p does not.
double grid_kl(const GridDensity& p, const GridDensity& q);

/// Explicit conservative update for d rho = d/dx (rho d/dx (log rho - log rho_post))
/// with zero-flux boundaries. Returns the unnormalized node values; the
/// cell-sum dx * sum_i rho_i is conserved exactly in exact arithmetic.
Vector wasserstein_fp_update(const GridDensity& d, const Vector& log_post, double dt);

/// wasserstein_fp_update followed by renormalization. Throws StepSizeError for
/// dt > dx^2 / 2 or a negative node value.
GridDensity wasserstein_fp_step(const GridDensity& d, const Vector& log_post, double dt);

}  // namespace gradflow
