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

#include "gradflow/core_types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace gradflow {

namespace {

void require_square(const Matrix& C, const char* what) {
  if (C.rows() != C.cols()) {
    std::ostringstream os;
    os << what << ": expected a square matrix, got " << C.rows() << "x" << C.cols();
    throw DimensionError(os.str());
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> spd_eigen(const Matrix& C, const char* what) {
  require_square(C, what);
  if (!C.allFinite()) {
    throw SpdError(std::string(what) + ": matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(C));
  if (es.info() != Eigen::Success) {
    throw SpdError(std::string(what) + ": eigendecomposition failed");
  }
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << what << ": matrix is not SPD (smallest eigenvalue " << lmin << ")";
    throw SpdError(os.str());
  }
  return es;
}

}  // namespace

GaussianState::GaussianState(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  require_square(cov_, "GaussianState");
  if (cov_.rows() != mean_.size()) {
    std::ostringstream os;
    os << "GaussianState: mean has " << mean_.size() << " entries but covariance is " << cov_.rows()
       << "x" << cov_.cols();
    throw DimensionError(os.str());
  }
  if (!mean_.allFinite()) throw NonFiniteError("GaussianState: mean has non-finite entries");
  const double scale = cov_.norm();
  const double asym = (cov_ - cov_.transpose()).norm();
  if (!(asym <= 1e-12 * scale)) {
    std::ostringstream os;
    os << "GaussianState: covariance asymmetry " << asym << " exceeds 1e-12 relative";
    throw SpdError(os.str());
  }
  cov_ = symmetrize(cov_);
  spd_eigen(cov_, "GaussianState");
}

TargetDensity TargetDensity::shifted(double offset) const {
  TargetDensity out = *this;
  auto base = log_density;
  out.log_density = [base, offset](const Vector& theta) { return base(theta) + offset; };
  return out;
}

AffineMap::AffineMap(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  require_square(A_, "AffineMap");
  if (A_.rows() != b_.size()) {
    throw DimensionError("AffineMap: A and b dimensions differ");
  }
  Eigen::FullPivLU<Matrix> lu(A_);
  if (!lu.isInvertible() || lu.determinant() == 0.0 || !std::isfinite(lu.determinant())) {
    throw SingularMapError("AffineMap: A is singular; pushforward is undefined");
  }
  A_inv_ = lu.inverse();
  log_abs_det_ = std::log(std::abs(lu.determinant()));
}

AffineMap AffineMap::identity(int dim) { return AffineMap(Matrix::Identity(dim, dim), Vector::Zero(dim)); }

AffineMap AffineMap::inverse() const { return AffineMap(A_inv_, -A_inv_ * b_); }

AffineMap AffineMap::compose(const AffineMap& inner) const {
  return AffineMap(A_ * inner.A(), A_ * inner.b() + b_);
}

TargetDensity pushforward_target(const AffineMap& phi, const TargetDensity& rho) {
  if (phi.dim() != rho.dim) {
    throw DimensionError("pushforward_target: map and target dimensions differ");
  }
  TargetDensity out;
  out.name = rho.name + "#affine";
  out.dim = rho.dim;
  const Matrix Ainv = phi.A_inverse();
  const Vector b = phi.b();
  const double logdet_inv = -phi.log_abs_det();
  auto log_fn = rho.log_density;
  auto grad_fn = rho.grad_log;
  auto hess_fn = rho.hess_log;
  out.log_density = [=](const Vector& x) { return log_fn(Ainv * (x - b)) + logdet_inv; };
  out.grad_log = [=](const Vector& x) -> Vector { return Ainv.transpose() * grad_fn(Ainv * (x - b)); };
  out.hess_log = [=](const Vector& x) -> Matrix {
    return symmetrize(Ainv.transpose() * hess_fn(Ainv * (x - b)) * Ainv);
  };
  if (rho.gaussian) out.gaussian = pushforward_gaussian(phi, *rho.gaussian);
  return out;
}

GaussianState pushforward_gaussian(const AffineMap& phi, const GaussianState& g) {
  if (phi.dim() != g.dim()) {
    throw DimensionError("pushforward_gaussian: map and state dimensions differ");
  }
  return GaussianState(phi.apply(g.mean()), symmetrize(phi.A() * g.cov() * phi.A().transpose()));
}

Matrix spd_factor(const Matrix& C) {
  auto es = spd_eigen(C, "spd_factor");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Matrix spd_cholesky(const Matrix& C) {
  require_square(C, "spd_cholesky");
  Eigen::LLT<Matrix> llt(symmetrize(C));
  if (llt.info() != Eigen::Success) throw SpdError("spd_cholesky: matrix is not SPD");
  return llt.matrixL();
}

Matrix spd_inverse(const Matrix& C) {
  auto es = spd_eigen(C, "spd_inverse");
  return symmetrize(es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose());
}

double spd_logdet(const Matrix& C) {
  auto es = spd_eigen(C, "spd_logdet");
  return es.eigenvalues().array().log().sum();
}

}  // namespace gradflow
