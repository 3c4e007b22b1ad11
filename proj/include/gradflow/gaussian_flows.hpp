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

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gradflow/core_types.hpp"

namespace gradflow {

/// Preconditioner P_t and bilinear kernel (theta - m)^T A_t (theta' - m) + b_t,
/// each a function of the current Gaussian.
struct SteinBilinearRule {
  std::string name;
  std::function<Matrix(const GaussianState&)> preconditioner;
  std::function<Matrix(const GaussianState&)> kernel_matrix;
  std::function<double(const GaussianState&)> kernel_offset;
};

/// Named presets: "wasserstein-equiv" (P=I, A=C^-1, b=1), "fisher-rao-equiv"
/// (P=C, A=C^-1/2, b=1) and "galy-flexible" (P=I, A=I, b=1).
SteinBilinearRule stein_bilinear_preset(const std::string& name);
const std::vector<std::string>& stein_bilinear_presets();

enum class GaussianFlowId { kPlainGd, kFisherRao, kWasserstein, kAiWasserstein, kSteinBilinear, kKalmanBucy };

struct GaussianFlowKind {
  GaussianFlowId id = GaussianFlowId::kFisherRao;
  /// Set iff id == kSteinBilinear.
  std::optional<SteinBilinearRule> stein;

  static GaussianFlowKind plain_gd() { return {GaussianFlowId::kPlainGd, std::nullopt}; }
  static GaussianFlowKind fisher_rao() { return {GaussianFlowId::kFisherRao, std::nullopt}; }
  static GaussianFlowKind wasserstein() { return {GaussianFlowId::kWasserstein, std::nullopt}; }
  static GaussianFlowKind ai_wasserstein() { return {GaussianFlowId::kAiWasserstein, std::nullopt}; }
  static GaussianFlowKind kalman_bucy() { return {GaussianFlowId::kKalmanBucy, std::nullopt}; }
  static GaussianFlowKind stein_bilinear(SteinBilinearRule rule) {
    return {GaussianFlowId::kSteinBilinear, std::move(rule)};
  }

  /// "plain-gd", "fisher-rao", "wasserstein", "ai-wasserstein", "kalman-bucy",
  /// "stein-bilinear:<preset>".
  static GaussianFlowKind parse(const std::string& id);
  std::string name() const;
};

/// Quadrature used for the Gaussian expectations in the moment equations.
struct MomentQuadrature {
  /// Unscented-transform spread; NaN selects default_ut_kappa.
  double kappa = std::numeric_limits<double>::quiet_NaN();
};

/// Time derivative of (m, C).
struct MomentRate {
  Vector dm;
  Matrix dC;
};

MomentRate rhs(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
               const MomentQuadrature& quad = {});

/// Closed-form Fisher-Rao moment trajectory for a Gaussian posterior N(m_star, C_star).
GaussianState analytic_fr_solution(const GaussianState& g0, const Vector& m_star, const Matrix& C_star, double t);

/// Coefficients of d theta / dt = A (theta - m) + b whose law follows the moment flow.
struct AffineDrift {
  Matrix A;
  Vector b;
};

/// Throws UnsupportedError for plain_gd and kalman_bucy.
AffineDrift affine_drift(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
                         const MomentQuadrature& quad = {});

/// Tempered density exp(t * log_likelihood) * prior for t in [0, 1].
TargetDensity homotopy_target(const GaussianState& prior, const TargetDensity& log_likelihood, double t);

/// Fixed-step classical RK4 for the moment ODE.
struct MomentIntegrator {
  double dt = 1e-3;
  /// Retries with dt/2, dt/4, ... when a step leaves the SPD cone.
  int max_halvings = 20;
  MomentQuadrature quad{};
};

/// Advance one step of size `integrator.dt` (possibly as 2^k substeps).
GaussianState rk4_step(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
                       const MomentIntegrator& integrator);

/// Integrate to `steps * dt`, calling `observe(step_index, state)` at step 0 and
/// every `record_every` steps. Time is step_index * dt.
void integrate_moments(const GaussianFlowKind& kind, GaussianState g, const TargetDensity& rho,
                       const MomentIntegrator& integrator, long steps, long record_every,
                       const std::function<void(long, const GaussianState&)>& observe);

}  // namespace gradflow
