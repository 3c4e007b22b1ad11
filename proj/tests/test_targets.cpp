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

#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <vector>

#include "gradflow/quadrature.hpp"
#include "gradflow/targets.hpp"

using namespace gradflow;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Central differences of log_density and grad_log against the analytic derivatives.
void check_derivatives(const TargetDensity& rho, const Vector& x) {
  const double h = 1e-5;
  const Vector g = rho.grad_log(x);
  const Matrix H = rho.hess_log(x);
  for (int i = 0; i < rho.dim; ++i) {
    Vector e = Vector::Zero(rho.dim);
    e[i] = h;
    const double fd = (rho.log_density(x + e) - rho.log_density(x - e)) / (2 * h);
    CHECK(fd == doctest::Approx(g[i]).epsilon(1e-6).scale(1.0));
    const Vector fd_col = (rho.grad_log(x + e) - rho.grad_log(x - e)) / (2 * h);
    for (int j = 0; j < rho.dim; ++j) CHECK(fd_col[j] == doctest::Approx(H(j, i)).epsilon(1e-6).scale(1.0));
  }
  CHECK((H - H.transpose()).norm() == 0.0);
}

}  // namespace

TEST_CASE("analytic derivatives match finite differences") {
  const std::vector<Vector> points = {vec2(0.3, -0.8), vec2(1.5, 2.0), vec2(-2.0, 0.1)};
  for (double lambda : {0.01, 0.1, 1.0}) {
    for (const auto& x : points) {
      check_derivatives(gaussian_target(lambda), x);
      check_derivatives(logconcave_target(lambda), x);
      check_derivatives(rosenbrock_target(lambda), x);
    }
  }
  for (double x : {-1.7, 0.2, 2.4}) {
    const Vector v = Vector::Constant(1, x);
    check_derivatives(polynomial_slow_target(1), v);
    check_derivatives(polynomial_slow_target(2), v);
    check_derivatives(normal_1d_target(0.5, 2.0), v);
    check_derivatives(bimodal_1d_target(4.0, 1.0), v);
  }
}

TEST_CASE("gaussian target posterior is N(0, diag(1, 1/lambda))") {
  const TargetDensity rho = gaussian_target(0.1);
  REQUIRE(rho.gaussian.has_value());
  CHECK(rho.gaussian->mean().norm() == 0.0);
  CHECK(rho.gaussian->cov()(0, 0) == doctest::Approx(1.0));
  CHECK(rho.gaussian->cov()(1, 1) == doctest::Approx(10.0));
  CHECK(rho.gaussian->cov()(0, 1) == 0.0);
}

TEST_CASE("linear-Gaussian posterior agrees with the information form") {
  Matrix H(1, 2);
  H << 1.0, 0.5;
  const Matrix R = Matrix::Constant(1, 1, 0.5);
  const Vector y = Vector::Constant(1, 2.0);
  Matrix C0(2, 2);
  C0 << 2.0, 0.3, 0.3, 1.0;
  const GaussianState prior(vec2(1.0, -1.0), C0);
  const TargetDensity rho = linear_gaussian_target(H, R, y, prior);
  REQUIRE(rho.gaussian.has_value());
  const Matrix P = C0.inverse() + H.transpose() * R.inverse() * H;
  const Matrix C = P.inverse();
  const Vector m = C * (C0.inverse() * prior.mean() + H.transpose() * R.inverse() * y);
  CHECK((rho.gaussian->cov() - C).norm() < 1e-13);
  CHECK((rho.gaussian->mean() - m).norm() < 1e-13);
  // Gradient vanishes at the posterior mean.
  CHECK(rho.grad_log(m).norm() < 1e-13);
  CHECK_THROWS_AS(linear_gaussian_target(H, R, Vector::Zero(2), prior), DimensionError);
}

TEST_CASE("poly-slow closure f(C) = (1 + (C - 1)^(2K+1)) / C") {
  for (int K : {1, 2, 3}) {
    const PolySlowCoefficients c = polynomial_slow_coefficients(K);
    const TargetDensity rho = polynomial_slow_target(K);
    for (double C : {0.3, 1.0, 1.5, 2.5}) {
      const double want = (1.0 + std::pow(C - 1.0, 2 * K + 1)) / C;
      CHECK(c.f(C) == doctest::Approx(want).epsilon(1e-12));
      // Gauss-Hermite is exact for the polynomial Hessian.
      const GaussianState g(Vector::Zero(1), Matrix::Constant(1, 1, C));
      const double eh = expected_hess_log(rho, gauss_hermite_points(g, 2 * K + 2))(0, 0);
      CHECK(-eh == doctest::Approx(want).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(polynomial_slow_coefficients(0), ConfigError);
}

TEST_CASE("cosine moments") {
  const auto a = draw_cos_directions(2, 7);
  const auto b = draw_cos_directions(2, 7);
  const auto c = draw_cos_directions(2, 8);
  REQUIRE(a.size() == 20);
  CHECK((a[3].omega - b[3].omega).norm() == 0.0);
  CHECK(a[3].phase == b[3].phase);
  CHECK((a[3].omega - c[3].omega).norm() > 0.0);
  for (const auto& d : a) CHECK((d.phase >= 0.0 && d.phase < 2 * M_PI));

  Matrix C(2, 2);
  C << 1.5, 0.4, 0.4, 0.8;
  const GaussianState g(vec2(0.3, -1.0), C);
  const SigmaPointSet q = gauss_hermite_points(g, 40);
  for (const auto& d : a) {
    const double quad = expect(q, [&](const Vector& x) { return std::cos(d.omega.dot(x) + d.phase); });
    CHECK(gaussian_cos_moment(g.mean(), g.cov(), d.omega, d.phase) == doctest::Approx(quad).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("make_target ids") {
  for (const auto& id : target_ids()) {
    if (id == "linear-gaussian") {
      CHECK_THROWS_AS(make_target(id, 1.0), ConfigError);
    } else {
      CHECK(make_target(id, 1.0).name.size() > 0);
    }
  }
  CHECK_THROWS_AS(make_target("poly-slow", 1.5), ConfigError);
  CHECK_THROWS_AS(make_target("nope", 1.0), ConfigError);
}
