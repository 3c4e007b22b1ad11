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

#include "gradflow/targets.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "gradflow/noise.hpp"

namespace gradflow {

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << what << ": parameter must be positive and finite, got " << value;
    throw ConfigError(os.str());
  }
}

double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// E[z^{2j}] for z ~ N(0, 1), i.e. (2j - 1)!!.
double even_normal_moment(int j) {
  double out = 1.0;
  for (int i = 1; i <= j; ++i) out *= 2.0 * i - 1.0;
  return out;
}

}  // namespace

std::vector<CosDirection> draw_cos_directions(int dim, std::uint64_t seed, int count) {
  const NoiseStream stream(seed, NoiseStream::Tag::kCosDraws);
  std::vector<CosDirection> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    CosDirection d;
    d.omega = stream.gaussian(0, static_cast<std::uint32_t>(i), dim);
    d.phase = 2.0 * std::numbers::pi * stream.uniform(1, static_cast<std::uint32_t>(i), 1)[0];
    out.push_back(std::move(d));
  }
  return out;
}

TargetDensity gaussian_target(double lambda) {
  require_positive(lambda, "gaussian_target");
  TargetDensity t;
  t.name = "gaussian";
  t.dim = 2;
  t.log_density = [lambda](const Vector& x) { return -0.5 * (x[0] * x[0] + lambda * x[1] * x[1]); };
  t.grad_log = [lambda](const Vector& x) -> Vector {
    Vector g(2);
    g << -x[0], -lambda * x[1];
    return g;
  };
  t.hess_log = [lambda](const Vector&) -> Matrix {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = -1.0;
    h(1, 1) = -lambda;
    return h;
  };
  Matrix cov = Matrix::Zero(2, 2);
  cov(0, 0) = 1.0;
  cov(1, 1) = 1.0 / lambda;
  t.gaussian = GaussianState(Vector::Zero(2), cov);
  return t;
}

TargetDensity logconcave_target(double lambda) {
  require_positive(lambda, "logconcave_target");
  const double s = std::sqrt(lambda);
  TargetDensity t;
  t.name = "logconcave";
  t.dim = 2;
  t.log_density = [s](const Vector& x) {
    const double u = s * x[0] - x[1];
    const double x2 = x[1] * x[1];
    return -(u * u + x2 * x2) / 20.0;
  };
  t.grad_log = [s](const Vector& x) -> Vector {
    const double u = s * x[0] - x[1];
    Vector g(2);
    g << -s * u / 10.0, u / 10.0 - x[1] * x[1] * x[1] / 5.0;
    return g;
  };
  t.hess_log = [s, lambda](const Vector& x) -> Matrix {
    Matrix h(2, 2);
    h(0, 0) = -lambda / 10.0;
    h(0, 1) = s / 10.0;
    h(1, 0) = s / 10.0;
    h(1, 1) = -0.1 - 0.6 * x[1] * x[1];
    return h;
  };
  return t;
}

TargetDensity rosenbrock_target(double lambda) {
  require_positive(lambda, "rosenbrock_target");
  TargetDensity t;
  t.name = "rosenbrock";
  t.dim = 2;
  t.log_density = [lambda](const Vector& x) {
    const double w = x[1] - x[0] * x[0];
    const double r = 1.0 - x[0];
    return -(lambda * w * w + r * r) / 20.0;
  };
  t.grad_log = [lambda](const Vector& x) -> Vector {
    const double w = x[1] - x[0] * x[0];
    Vector g(2);
    g << lambda * x[0] * w / 5.0 + (1.0 - x[0]) / 10.0, -lambda * w / 10.0;
    return g;
  };
  t.hess_log = [lambda](const Vector& x) -> Matrix {
    const double w = x[1] - x[0] * x[0];
    Matrix h(2, 2);
    h(0, 0) = lambda * w / 5.0 - 0.4 * lambda * x[0] * x[0] - 0.1;
    h(0, 1) = lambda * x[0] / 5.0;
    h(1, 0) = h(0, 1);
    h(1, 1) = -lambda / 10.0;
    return h;
  };
  return t;
}

double PolySlowCoefficients::f(double C) const {
  double out = 0.0;
  double cpow = 1.0;
  for (int k = 1; k < static_cast<int>(a.size()); ++k) {
    out += 2.0 * k * (2.0 * k - 1.0) * a[k] * cpow * even_normal_moment(k - 1);
    cpow *= C;
  }
  return out;
}

PolySlowCoefficients polynomial_slow_coefficients(int K) {
  if (K < 1) throw ConfigError("polynomial_slow_target: K must be >= 1");
  const int n = 2 * K + 1;
  PolySlowCoefficients c;
  c.K = K;
  c.a.assign(n + 1, 0.0);
  for (int k = 1; k <= n; ++k) {
    const double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
    const double lhs_factor = 2.0 * k * (2.0 * k - 1.0) * even_normal_moment(k - 1);
    c.a[k] = binomial(n, k) * sign / lhs_factor;
  }
  return c;
}

TargetDensity polynomial_slow_target(int K) {
  const PolySlowCoefficients c = polynomial_slow_coefficients(K);
  const std::vector<double> a = c.a;
  TargetDensity t;
  t.name = "poly-slow";
  t.dim = 1;
  t.log_density = [a](const Vector& x) {
    const double x2 = x[0] * x[0];
    double phi = 0.0, p = x2;
    for (std::size_t k = 1; k < a.size(); ++k, p *= x2) phi += a[k] * p;
    return -phi;
  };
  t.grad_log = [a](const Vector& x) -> Vector {
    const double x2 = x[0] * x[0];
    double d = 0.0, p = x[0];
    for (std::size_t k = 1; k < a.size(); ++k, p *= x2) d += 2.0 * k * a[k] * p;
    return Vector::Constant(1, -d);
  };
  t.hess_log = [a](const Vector& x) -> Matrix {
    const double x2 = x[0] * x[0];
    double d2 = 0.0, p = 1.0;
    for (std::size_t k = 1; k < a.size(); ++k, p *= x2) d2 += 2.0 * k * (2.0 * k - 1.0) * a[k] * p;
    return Matrix::Constant(1, 1, -d2);
  };
  return t;
}

TargetDensity linear_gaussian_target(const Matrix& H, const Matrix& R, const Vector& y,
                                     const GaussianState& prior) {
  const int d = prior.dim();
  if (H.cols() != d || H.rows() != y.size() || R.rows() != y.size() || R.cols() != y.size()) {
    std::ostringstream os;
    os << "linear_gaussian_target: H is " << H.rows() << "x" << H.cols() << ", R is " << R.rows() << "x"
       << R.cols() << ", y has " << y.size() << " entries, prior dim " << d;
    throw DimensionError(os.str());
  }
  const Matrix Rinv = spd_inverse(R);
  const Matrix C0inv = spd_inverse(prior.cov());
  const Vector m0 = prior.mean();
  const Matrix info = symmetrize(C0inv + H.transpose() * Rinv * H);
  const Matrix post_cov = spd_inverse(info);
  const Vector post_mean = post_cov * (C0inv * m0 + H.transpose() * Rinv * y);

  TargetDensity t;
  t.name = "linear-gaussian";
  t.dim = d;
  t.log_density = [=](const Vector& x) {
    const Vector r = H * x - y;
    const Vector p = x - m0;
    return -0.5 * r.dot(Rinv * r) - 0.5 * p.dot(C0inv * p);
  };
  t.grad_log = [=](const Vector& x) -> Vector {
    return -H.transpose() * (Rinv * (H * x - y)) - C0inv * (x - m0);
  };
  t.hess_log = [info](const Vector&) -> Matrix { return -info; };
  t.gaussian = GaussianState(post_mean, post_cov);
  t.linear_model = LinearGaussianModel{H, R, y, prior.mean(), prior.cov()};
  return t;
}

TargetDensity normal_1d_target(double mean, double var) {
  require_positive(var, "normal_1d_target");
  TargetDensity t;
  t.name = "normal-1d";
  t.dim = 1;
  t.log_density = [=](const Vector& x) { return -0.5 * (x[0] - mean) * (x[0] - mean) / var; };
  t.grad_log = [=](const Vector& x) -> Vector { return Vector::Constant(1, -(x[0] - mean) / var); };
  t.hess_log = [=](const Vector&) -> Matrix { return Matrix::Constant(1, 1, -1.0 / var); };
  t.gaussian = GaussianState(Vector::Constant(1, mean), Matrix::Constant(1, 1, var));
  return t;
}

TargetDensity bimodal_1d_target(double separation, double var) {
  require_positive(var, "bimodal_1d_target");
  const double c = 0.5 * separation;
  // Responsibility of the right component.
  auto weight = [=](double x) { return 1.0 / (1.0 + std::exp(-2.0 * c * x / var)); };
  TargetDensity t;
  t.name = "bimodal-1d";
  t.dim = 1;
  t.log_density = [=](const Vector& x) {
    const double a = -0.5 * (x[0] - c) * (x[0] - c) / var;
    const double b = -0.5 * (x[0] + c) * (x[0] + c) / var;
    const double hi = std::max(a, b);
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  };
  t.grad_log = [=](const Vector& x) -> Vector {
    const double w = weight(x[0]);
    return Vector::Constant(1, -(x[0] - (2.0 * w - 1.0) * c) / var);
  };
  t.hess_log = [=](const Vector& x) -> Matrix {
    const double w = weight(x[0]);
    return Matrix::Constant(1, 1, -1.0 / var + 4.0 * c * c * w * (1.0 - w) / (var * var));
  };
  return t;
}

const std::vector<std::string>& target_ids() {
  static const std::vector<std::string> ids = {"gaussian",  "logconcave", "rosenbrock",     "poly-slow",
                                               "normal-1d", "bimodal-1d", "linear-gaussian"};
  return ids;
}

TargetDensity make_target(const std::string& id, double parameter) {
  if (id == "gaussian") return gaussian_target(parameter);
  if (id == "logconcave") return logconcave_target(parameter);
  if (id == "rosenbrock") return rosenbrock_target(parameter);
  if (id == "poly-slow") {
    const int K = static_cast<int>(std::lround(parameter));
    if (K < 1 || std::abs(parameter - K) > 1e-12) {
      throw ConfigError("poly-slow: parameter K must be a positive integer");
    }
    return polynomial_slow_target(K);
  }
  if (id == "normal-1d") return normal_1d_target(0.0, parameter);
  if (id == "bimodal-1d") return bimodal_1d_target(4.0, parameter);
  if (id == "linear-gaussian") {
    throw ConfigError("linear-gaussian targets need H, R, y and a prior; build with linear_gaussian_target");
  }
  throw ConfigError("unknown target id '" + id + "'");
}

double gaussian_cos_moment(const Vector& m, const Matrix& C, const Vector& omega, double phase) {
  return std::exp(-0.5 * omega.dot(C * omega)) * std::cos(omega.dot(m) + phase);
}

ReferenceStats gaussian_reference(const GaussianState& g, const std::vector<CosDirection>& draws) {
  ReferenceStats r;
  r.mean = g.mean();
  r.cov = g.cov();
  for (const auto& d : draws) {
    r.cos_moments.push_back({d.omega, d.phase, gaussian_cos_moment(g.mean(), g.cov(), d.omega, d.phase)});
  }
  return r;
}

}  // namespace gradflow
