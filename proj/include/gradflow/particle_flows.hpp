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
#include <optional>
#include <string>

#include "gradflow/core_types.hpp"
#include "gradflow/gaussian_flows.hpp"
#include "gradflow/noise.hpp"

namespace gradflow {

/// J particles in R^d, one per row.
struct Ensemble {
  ParticleMatrix particles;

  int size() const { return static_cast<int>(particles.rows()); }
  int dim() const { return static_cast<int>(particles.cols()); }
  Vector particle(int j) const { return particles.row(j).transpose(); }
};

/// J draws from g using the kInitial stream of `noise`.
Ensemble sample_ensemble(const GaussianState& g, int J, const NoiseStream& noise);

/// Apply phi to every particle.
Ensemble pushforward_ensemble(const AffineMap& phi, const Ensemble& e);

/// Empirical mean and biased (1/J) covariance. May be singular; call
/// to_gaussian() to validate.
struct EmpiricalMoments {
  Vector mean;
  Matrix cov;

  GaussianState to_gaussian() const { return GaussianState(mean, cov); }
};

/// Throws ConfigError for J < 2.
EmpiricalMoments empirical_moments(const Ensemble& e);

enum class KernelKind { kRbfMedian, kAiMahalanobis, kBilinear };

/// Kernel family for Stein flows, with its scaling-constant rule.
///
///  - rbf_median: s exp(-|x - y|^2 / h), h = med^2 / log(J + 1), s = (1 + 4 log(J + 1) / d)^{d/2}
///  - ai_mahalanobis: s exp(-(x - y)^T C^{-1} (x - y) / (2 d)), s = (1 + 2 / d)^{d/2}
///  - bilinear: (x - m)^T A (y - m) + b with (A, b) from the ensemble moments
struct KernelSpec {
  KernelKind kind = KernelKind::kRbfMedian;
  std::optional<SteinBilinearRule> bilinear;

  static KernelSpec rbf_median() { return {KernelKind::kRbfMedian, std::nullopt}; }
  static KernelSpec ai_mahalanobis() { return {KernelKind::kAiMahalanobis, std::nullopt}; }
  static KernelSpec bilinear_rule(SteinBilinearRule rule) { return {KernelKind::kBilinear, std::move(rule)}; }
};

/// A KernelSpec with its ensemble-dependent parameters fixed.
struct BoundKernel {
  KernelKind kind = KernelKind::kRbfMedian;
  double scale = 1.0;
  double bandwidth = 0.0;  // rbf_median
  Matrix precision;        // ai_mahalanobis: C^{-1}
  Vector center;           // bilinear: m
  Matrix bilinear_matrix;  // bilinear: A
  double offset = 0.0;     // bilinear: b

  double value(const Vector& x, const Vector& y) const;
};

BoundKernel bind_kernel(const KernelSpec& spec, const Ensemble& e);

double rbf_median_scale(int J, int dim);
double ai_kernel_scale(int dim);

/// theta_j += grad log rho(theta_j) dt + sqrt(2 dt) xi_j, xi from (noise, step, j).
Ensemble langevin_step(const Ensemble& e, const TargetDensity& rho, double dt, const NoiseStream& noise,
                       std::uint64_t step, bool inject_noise = true);

struct AiLangevinOptions {
  /// Replace the empirical covariance in drift and noise (tests only).
  std::optional<Matrix> covariance_override;
  /// Replace the noise factor L (L L^T = C) by a caller-supplied one.
  std::optional<Matrix> noise_factor;
  bool inject_noise = true;
};

/// theta_j += C grad log rho(theta_j) dt + sqrt(2 dt) L xi_j with C the
/// empirical covariance of the pre-step ensemble and L = spd_factor(C).
Ensemble ai_langevin_step(const Ensemble& e, const TargetDensity& rho, double dt, const NoiseStream& noise,
                          std::uint64_t step, const AiLangevinOptions& options = {});

/// Forward-Euler step of Stein variational gradient descent with the rbf_median kernel.
Ensemble svgd_step(const Ensemble& e, const TargetDensity& rho, const KernelSpec& k, double dt);

/// Forward-Euler step of affine-invariant SVGD (P = C, Mahalanobis kernel).
Ensemble ai_svgd_step(const Ensemble& e, const TargetDensity& rho, double dt);

/// theta_j += (A (theta_j - m) + b) dt.
Ensemble affine_meanfield_step(const Ensemble& e, const AffineDrift& drift, const Vector& m, double dt);

}  // namespace gradflow
