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
#include <string>
#include <vector>

#include "gradflow/core_types.hpp"

namespace gradflow {

/// One test function cos(omega^T theta + phase) and its expectation.
struct CosMoment {
  Vector omega;
  double phase = 0.0;
  double value = 0.0;
};

/// Summary statistics of a posterior: mean, covariance, cosine moments.
struct ReferenceStats {
  Vector mean;
  Matrix cov;
  std::vector<CosMoment> cos_moments;
};

/// A cosine test direction without its expectation.
struct CosDirection {
  Vector omega;
  double phase = 0.0;
};

/// `count` draws omega ~ N(0, I), phase ~ Uniform(0, 2 pi) from a named seed.
std::vector<CosDirection> draw_cos_directions(int dim, std::uint64_t seed, int count = 20);

/// Phi_R = theta^T diag(1, lambda) theta / 2; posterior N(0, diag(1, 1/lambda)).
TargetDensity gaussian_target(double lambda);

/// Phi_R = (sqrt(lambda) theta1 - theta2)^2 / 20 + theta2^4 / 20.
TargetDensity logconcave_target(double lambda);

/// Phi_R = lambda (theta2 - theta1^2)^2 / 20 + (1 - theta1)^2 / 20.
TargetDensity rosenbrock_target(double lambda);

/// Even polynomial Phi_R = sum_k a_{2k} theta^{2k} on R whose Gaussian moment
/// closure converges to C = 1 only algebraically.
struct PolySlowCoefficients {
  int K = 1;
  /// a[k] multiplies theta^{2k}, k = 0..2K+1 (a[0] = 0).
  std::vector<double> a;

  /// f(C) with E_{N(0,C)}[d^2/dtheta^2 log rho] = -f(C).
  double f(double C) const;
};

PolySlowCoefficients polynomial_slow_coefficients(int K);
TargetDensity polynomial_slow_target(int K);

/// Posterior of a linear-Gaussian model. `gaussian` holds the conjugate
/// posterior and `linear_model` the inputs.
TargetDensity linear_gaussian_target(const Matrix& H, const Matrix& R, const Vector& y,
                                     const GaussianState& prior);

/// 1D N(mean, var); used by grid flows.
TargetDensity normal_1d_target(double mean, double var);

/// 1D equal-weight mixture of N(-sep/2, var) and N(+sep/2, var).
TargetDensity bimodal_1d_target(double separation, double var);

/// Resolve a CLI target id ("gaussian", "logconcave", "rosenbrock", "poly-slow",
/// "normal-1d", "bimodal-1d"). For poly-slow the parameter is K.
/// "linear-gaussian" needs matrices and is built by the runner.
TargetDensity make_target(const std::string& id, double parameter);

/// Ids accepted by make_target plus "linear-gaussian".
const std::vector<std::string>& target_ids();

/// Closed-form E[cos(omega^T theta + phase)] under N(m, C).
double gaussian_cos_moment(const Vector& m, const Matrix& C, const Vector& omega, double phase);

/// Reference statistics of a Gaussian with the given directions.
ReferenceStats gaussian_reference(const GaussianState& g, const std::vector<CosDirection>& draws);

}  // namespace gradflow
