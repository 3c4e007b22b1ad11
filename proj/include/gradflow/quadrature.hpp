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

#include "gradflow/core_types.hpp"

namespace gradflow {

/// Weighted point set approximating expectations under a Gaussian.
struct SigmaPointSet {
  ParticleMatrix points;
  Vector weights;

  int size() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// Spread parameter making dim + kappa = 3 for dim <= 2, else 0.
double default_ut_kappa(int dim);

/// Symmetric 2d+1 point rule: m and m +- sqrt(d + kappa) * column_i(spd_factor(C)),
/// weights kappa / (d + kappa) and 1 / (2 (d + kappa)).
SigmaPointSet unscented_points(const GaussianState& g, double kappa);
inline SigmaPointSet unscented_points(const GaussianState& g) {
  return unscented_points(g, default_ut_kappa(g.dim()));
}

/// Tensorized Gauss-Hermite rule with `nodes_per_axis`^d points.
/// Exact for polynomials of degree <= 2 * nodes_per_axis - 1 in each variable.
SigmaPointSet gauss_hermite_points(const GaussianState& g, int nodes_per_axis);

/// Sum_i w_i f(x_i), accumulated in ascending index order.
double expect(const SigmaPointSet& q, const std::function<double(const Vector&)>& f);
Vector expect_vector(const SigmaPointSet& q, const std::function<Vector(const Vector&)>& f);
Matrix expect_matrix(const SigmaPointSet& q, const std::function<Matrix(const Vector&)>& f);

/// E[grad log rho]. Throws NonFiniteError naming the offending point.
Vector expected_grad_log(const TargetDensity& rho, const SigmaPointSet& q);

/// E[hess log rho], symmetrized.
Matrix expected_hess_log(const TargetDensity& rho, const SigmaPointSet& q);

/// Scalar field with analytic first and second derivatives.
struct ScalarField {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
};

ScalarField as_scalar_field(const TargetDensity& rho);

/// Both sides of E[grad grad f] = Cov[grad f, theta] C^{-1} under the rule q
/// built for the Gaussian g.
struct SteinIdentitySides {
  Matrix lhs;
  Matrix rhs;
};

SteinIdentitySides stein_identity_check(const ScalarField& f, const GaussianState& g, const SigmaPointSet& q);

}  // namespace gradflow
