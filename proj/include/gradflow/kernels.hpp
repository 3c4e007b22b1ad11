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

// Data-parallel inner loops of the particle samplers and reference integrator.
//
// Every kernel in namespace `kernels` runs its outer loop under OpenMP and has
// a plain serial twin in `kernels::serial` that the tests compare against.
// Reductions inside one output element run in ascending index order, so the
// OpenMP kernels are bit-identical for any thread count.

#include <functional>
#include <vector>

#include "gradflow/core_types.hpp"

namespace gradflow::kernels {

/// Row j = grad_log(row j of X). Throws NonFiniteError naming the first bad particle.
ParticleMatrix grad_log_rows(const TargetDensity& rho, const ParticleMatrix& X);

/// Squared median of pairwise Euclidean distances (i < j). Requires >= 2 rows.
double median_squared_distance(const ParticleMatrix& X);

/// RBF Stein drift:
///   drift_i = (1/J) sum_j k_ij (G_j + 2 (x_i - x_j) / h),  k_ij = scale * exp(-|x_i - x_j|^2 / h).
/// With h == 0 only coincident pairs interact (k = scale, zero repulsion).
ParticleMatrix svgd_drift(const ParticleMatrix& X, const ParticleMatrix& G, double scale, double bandwidth);

/// Affine-invariant Stein drift with Mahalanobis kernel:
///   drift_i = (1/J) sum_j k_ij (CG_j + (x_i - x_j) / d),
///   k_ij = scale * exp(-(x_i - x_j)^T Cinv (x_i - x_j) / (2 d)),
/// where CG_j = C grad log rho(x_j).
ParticleMatrix ai_svgd_drift(const ParticleMatrix& X, const ParticleMatrix& CG, const Matrix& Cinv, double scale);

/// sum_i w(x_i) f(x_i) over a uniform 1D grid [lo, hi] with `n` nodes and
/// trapezoid weights; `f` returns `width` values per node. Chunked so the
/// result does not depend on the thread count.
std::vector<double> trapezoid_sum(double lo, double hi, long n, int width,
                                  const std::function<void(double, double*)>& f);

namespace serial {

ParticleMatrix svgd_drift(const ParticleMatrix& X, const ParticleMatrix& G, double scale, double bandwidth);
ParticleMatrix ai_svgd_drift(const ParticleMatrix& X, const ParticleMatrix& CG, const Matrix& Cinv, double scale);
std::vector<double> trapezoid_sum(double lo, double hi, long n, int width,
                                  const std::function<void(double, double*)>& f);

}  // namespace serial

}  // namespace gradflow::kernels
