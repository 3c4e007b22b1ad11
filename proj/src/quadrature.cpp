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

#include "gradflow/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace gradflow {

double default_ut_kappa(int dim) { return dim <= 2 ? 3.0 - dim : 0.0; }

SigmaPointSet unscented_points(const GaussianState& g, double kappa) {
  const int d = g.dim();
  const double spread = d + kappa;
  if (!(spread > 0.0)) {
    std::ostringstream os;
    os << "unscented_points: dim + kappa must be positive, got " << spread;
    throw ConfigError(os.str());
  }
  const Matrix L = spd_factor(g.cov());
  const double scale = std::sqrt(spread);
  SigmaPointSet q;
  q.points.resize(2 * d + 1, d);
  q.weights.resize(2 * d + 1);
  q.points.row(0) = g.mean().transpose();
  q.weights[0] = kappa / spread;
  for (int i = 0; i < d; ++i) {
    const Vector offset = scale * L.col(i);
    q.points.row(1 + i) = (g.mean() + offset).transpose();
    q.points.row(1 + d + i) = (g.mean() - offset).transpose();
    q.weights[1 + i] = 0.5 / spread;
    q.weights[1 + d + i] = 0.5 / spread;
  }
  return q;
}

SigmaPointSet gauss_hermite_points(const GaussianState& g, int nodes_per_axis) {
  if (nodes_per_axis < 1) throw ConfigError("gauss_hermite_points: need at least one node per axis");
  const int n = nodes_per_axis;
  // Golub-Welsch for the probabilists' Hermite weight exp(-x^2 / 2).
  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  const Vector nodes = es.eigenvalues();
  Vector w1 = es.eigenvectors().row(0).transpose().array().square();
  w1 /= w1.sum();

  const int d = g.dim();
  long total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  const Matrix L = spd_factor(g.cov());
  SigmaPointSet q;
  q.points.resize(total, d);
  q.weights.resize(total);
  Vector z(d);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    double w = 1.0;
    for (int axis = 0; axis < d; ++axis) {
      const int k = static_cast<int>(rem % n);
      rem /= n;
      z[axis] = nodes[k];
      w *= w1[k];
    }
    q.points.row(idx) = (g.mean() + L * z).transpose();
    q.weights[idx] = w;
  }
  return q;
}

double expect(const SigmaPointSet& q, const std::function<double(const Vector&)>& f) {
  double acc = 0.0;
  for (int i = 0; i < q.size(); ++i) acc += q.weights[i] * f(q.points.row(i).transpose());
  return acc;
}

Vector expect_vector(const SigmaPointSet& q, const std::function<Vector(const Vector&)>& f) {
  Vector acc;
  for (int i = 0; i < q.size(); ++i) {
    Vector v = q.weights[i] * f(q.points.row(i).transpose());
    if (i == 0) acc = std::move(v);
    else acc += v;
  }
  return acc;
}

Matrix expect_matrix(const SigmaPointSet& q, const std::function<Matrix(const Vector&)>& f) {
  Matrix acc;
  for (int i = 0; i < q.size(); ++i) {
    Matrix v = q.weights[i] * f(q.points.row(i).transpose());
    if (i == 0) acc = std::move(v);
    else acc += v;
  }
  return acc;
}

namespace {

[[noreturn]] void throw_non_finite(const char* what, const Vector& point) {
  std::ostringstream os;
  os << what << ": non-finite value at sigma point [";
  for (int k = 0; k < point.size(); ++k) os << (k ? ", " : "") << point[k];
  os << "]";
  throw NonFiniteError(os.str());
}

}  // namespace

Vector expected_grad_log(const TargetDensity& rho, const SigmaPointSet& q) {
  if (q.dim() != rho.dim) throw DimensionError("expected_grad_log: rule and target dimensions differ");
  return expect_vector(q, [&](const Vector& x) -> Vector {
    Vector g = rho.grad_log(x);
    if (!g.allFinite()) throw_non_finite("expected_grad_log", x);
    return g;
  });
}

Matrix expected_hess_log(const TargetDensity& rho, const SigmaPointSet& q) {
  if (q.dim() != rho.dim) throw DimensionError("expected_hess_log: rule and target dimensions differ");
  return symmetrize(expect_matrix(q, [&](const Vector& x) -> Matrix {
    Matrix h = rho.hess_log(x);
    if (!h.allFinite()) throw_non_finite("expected_hess_log", x);
    return h;
  }));
}

ScalarField as_scalar_field(const TargetDensity& rho) {
  return ScalarField{rho.log_density, rho.grad_log, rho.hess_log};
}

SteinIdentitySides stein_identity_check(const ScalarField& f, const GaussianState& g, const SigmaPointSet& q) {
  SteinIdentitySides out;
  out.lhs = expect_matrix(q, f.hess);
  const Vector mean_grad = expect_vector(q, f.grad);
  const Vector mean_theta = expect_vector(q, [](const Vector& x) -> Vector { return x; });
  const Matrix cross = expect_matrix(q, [&](const Vector& x) -> Matrix {
    return (f.grad(x) - mean_grad) * (x - mean_theta).transpose();
  });
  out.rhs = cross * spd_inverse(g.cov());
  return out;
}

}  // namespace gradflow
