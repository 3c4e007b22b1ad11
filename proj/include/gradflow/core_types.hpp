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

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>

#include "gradflow/errors.hpp"

namespace gradflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One particle per row.
using ParticleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Mean and symmetric positive definite covariance of a Gaussian.
///
/// Construction validates the covariance: it must be square, match the mean,
/// be symmetric to 1e-12 relative and have strictly positive eigenvalues.
/// The stored covariance is the exactly symmetrized input.
class GaussianState {
 public:
  GaussianState(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  int dim() const { return static_cast<int>(mean_.size()); }

 private:
  Vector mean_;
  Matrix cov_;
};

/// Linear-Gaussian observation model y = H theta + noise(R) with Gaussian prior.
struct LinearGaussianModel {
  Matrix H;
  Matrix R;
  Vector y;
  Vector prior_mean;
  Matrix prior_cov;
};

/// Unnormalized log-density with analytic gradient and Hessian.
///
/// `log_density` is only defined up to an additive constant. Flows read
/// `grad_log`/`hess_log` exclusively, so shifting the constant never changes
/// a flow step.
struct TargetDensity {
  using LogFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;
  using HessFn = std::function<Matrix(const Vector&)>;

  std::string name;
  int dim = 0;
  LogFn log_density;
  GradFn grad_log;
  HessFn hess_log;

  /// Exact (m*, C*) when the target itself is Gaussian.
  std::optional<GaussianState> gaussian;
  /// Present only for targets built by linear_gaussian_target.
  std::optional<LinearGaussianModel> linear_model;

  /// Same target with `offset` added to the log-density.
  TargetDensity shifted(double offset) const;
};

class SingularMapError : public Error {
 public:
  using Error::Error;
};

/// Invertible affine map theta -> A theta + b.
class AffineMap {
 public:
  /// Throws DimensionError on shape mismatch and SingularMapError on singular A.
  AffineMap(Matrix A, Vector b);

  static AffineMap identity(int dim);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  const Matrix& A_inverse() const { return A_inv_; }
  int dim() const { return static_cast<int>(b_.size()); }
  double log_abs_det() const { return log_abs_det_; }

  Vector apply(const Vector& theta) const { return A_ * theta + b_; }
  Vector apply_inverse(const Vector& theta) const { return A_inv_ * (theta - b_); }

  AffineMap inverse() const;
  /// (this o inner)(theta) = this(inner(theta)).
  AffineMap compose(const AffineMap& inner) const;

 private:
  Matrix A_;
  Vector b_;
  Matrix A_inv_;
  double log_abs_det_ = 0.0;
};

/// Density of phi(theta) when theta ~ rho. Gradients and Hessians follow the chain rule.
TargetDensity pushforward_target(const AffineMap& phi, const TargetDensity& rho);

/// (A m + b, A C A^T).
GaussianState pushforward_gaussian(const AffineMap& phi, const GaussianState& g);

/// Symmetric square root L (L L^T = C) from the eigendecomposition of C.
/// Throws SpdError when the smallest eigenvalue is not positive.
Matrix spd_factor(const Matrix& C);

/// Lower Cholesky factor; interchangeable with spd_factor wherever only L L^T matters.
Matrix spd_cholesky(const Matrix& C);

/// C^{-1} through the eigendecomposition.
Matrix spd_inverse(const Matrix& C);

/// log det C for SPD C.
double spd_logdet(const Matrix& C);

/// (C + C^T) / 2.
inline Matrix symmetrize(const Matrix& C) { return 0.5 * (C + C.transpose()); }

}  // namespace gradflow
