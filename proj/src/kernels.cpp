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

#include "gradflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gradflow::kernels {

namespace {

constexpr long kChunk = 1L << 15;

double trapezoid_weight(long i, long n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

void check_grid(double lo, double hi, long n) {
  if (n < 2 || !(hi > lo)) throw ConfigError("trapezoid_sum: need n >= 2 and hi > lo");
}

}  // namespace

ParticleMatrix grad_log_rows(const TargetDensity& rho, const ParticleMatrix& X) {
  const int J = static_cast<int>(X.rows());
  if (X.cols() != rho.dim) throw DimensionError("grad_log_rows: particle and target dimensions differ");
  ParticleMatrix G(J, X.cols());
  std::vector<char> bad(J, 0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < J; ++j) {
    const Vector g = rho.grad_log(X.row(j).transpose());
    if (!g.allFinite()) bad[j] = 1;
    G.row(j) = g.transpose();
  }
  const auto it = std::find(bad.begin(), bad.end(), 1);
  if (it != bad.end()) {
    std::ostringstream os;
    os << "non-finite drift at particle " << (it - bad.begin());
    throw NonFiniteError(os.str());
  }
  return G;
}

double median_squared_distance(const ParticleMatrix& X) {
  const long J = X.rows();
  if (J < 2) throw MethodError("median_squared_distance: need at least two particles");
  std::vector<double> d2;
  d2.reserve(J * (J - 1) / 2);
  for (long i = 0; i < J; ++i) {
    for (long j = i + 1; j < J; ++j) d2.push_back((X.row(i) - X.row(j)).squaredNorm());
  }
  // Median of distances, squared; distances and squared distances share the ordering.
  const std::size_t n = d2.size();
  const std::size_t mid = n / 2;
  std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
  const double upper = std::sqrt(d2[mid]);
  if (n % 2 == 1) return upper * upper;
  const double lower = std::sqrt(*std::max_element(d2.begin(), d2.begin() + mid));
  const double med = 0.5 * (lower + upper);
  return med * med;
}

ParticleMatrix svgd_drift(const ParticleMatrix& X, const ParticleMatrix& G, double scale, double bandwidth) {
  const int J = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  ParticleMatrix out(J, d);
  const double inv_h = bandwidth > 0.0 ? 1.0 / bandwidth : 0.0;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < J; ++i) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int j = 0; j < J; ++j) {
      const Eigen::RowVectorXd diff = X.row(i) - X.row(j);
      const double r2 = diff.squaredNorm();
      double k;
      if (bandwidth > 0.0) {
        k = scale * std::exp(-r2 * inv_h);
      } else {
        k = (r2 == 0.0) ? scale : 0.0;
      }
      acc += k * (G.row(j) + (2.0 * inv_h) * diff);
    }
    out.row(i) = acc / static_cast<double>(J);
  }
  return out;
}

ParticleMatrix ai_svgd_drift(const ParticleMatrix& X, const ParticleMatrix& CG, const Matrix& Cinv, double scale) {
  const int J = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  ParticleMatrix out(J, d);
  const double inv_2d = 1.0 / (2.0 * d);
  const double inv_d = 1.0 / d;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < J; ++i) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int j = 0; j < J; ++j) {
      const Eigen::RowVectorXd diff = X.row(i) - X.row(j);
      const double q = diff * Cinv * diff.transpose();
      const double k = scale * std::exp(-q * inv_2d);
      acc += k * (CG.row(j) + inv_d * diff);
    }
    out.row(i) = acc / static_cast<double>(J);
  }
  return out;
}

std::vector<double> trapezoid_sum(double lo, double hi, long n, int width,
                                  const std::function<void(double, double*)>& f) {
  check_grid(lo, hi, n);
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  const long chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks) * width, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (long c = 0; c < chunks; ++c) {
    std::vector<double> vals(width);
    double* acc = partial.data() + c * width;
    const long end = std::min(n, (c + 1) * kChunk);
    for (long i = c * kChunk; i < end; ++i) {
      const double x = lo + dx * static_cast<double>(i);
      f(x, vals.data());
      const double w = trapezoid_weight(i, n);
      for (int k = 0; k < width; ++k) acc[k] += w * vals[k];
    }
  }
  std::vector<double> out(width, 0.0);
  for (long c = 0; c < chunks; ++c) {
    for (int k = 0; k < width; ++k) out[k] += partial[c * width + k];
  }
  for (auto& v : out) v *= dx;
  return out;
}

namespace serial {

ParticleMatrix svgd_drift(const ParticleMatrix& X, const ParticleMatrix& G, double scale, double bandwidth) {
  const long J = X.rows();
  const long d = X.cols();
  ParticleMatrix out = ParticleMatrix::Zero(J, d);
  for (long i = 0; i < J; ++i) {
    for (long j = 0; j < J; ++j) {
      double r2 = 0.0;
      for (long a = 0; a < d; ++a) r2 += (X(i, a) - X(j, a)) * (X(i, a) - X(j, a));
      double k;
      double repulse;
      if (bandwidth > 0.0) {
        k = scale * std::exp(-r2 / bandwidth);
        repulse = 2.0 / bandwidth;
      } else {
        k = (r2 == 0.0) ? scale : 0.0;
        repulse = 0.0;
      }
      for (long a = 0; a < d; ++a) out(i, a) += k * (G(j, a) + repulse * (X(i, a) - X(j, a)));
    }
    for (long a = 0; a < d; ++a) out(i, a) /= static_cast<double>(J);
  }
  return out;
}

ParticleMatrix ai_svgd_drift(const ParticleMatrix& X, const ParticleMatrix& CG, const Matrix& Cinv, double scale) {
  const long J = X.rows();
  const long d = X.cols();
  ParticleMatrix out = ParticleMatrix::Zero(J, d);
  for (long i = 0; i < J; ++i) {
    for (long j = 0; j < J; ++j) {
      double q = 0.0;
      for (long a = 0; a < d; ++a) {
        for (long b = 0; b < d; ++b) q += (X(i, a) - X(j, a)) * Cinv(a, b) * (X(i, b) - X(j, b));
      }
      const double k = scale * std::exp(-q / (2.0 * d));
      for (long a = 0; a < d; ++a) out(i, a) += k * (CG(j, a) + (X(i, a) - X(j, a)) / d);
    }
    for (long a = 0; a < d; ++a) out(i, a) /= static_cast<double>(J);
  }
  return out;
}

std::vector<double> trapezoid_sum(double lo, double hi, long n, int width,
                                  const std::function<void(double, double*)>& f) {
  check_grid(lo, hi, n);
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> vals(width), out(width, 0.0);
  for (long i = 0; i < n; ++i) {
    f(lo + dx * static_cast<double>(i), vals.data());
    const double w = trapezoid_weight(i, n);
    for (int k = 0; k < width; ++k) out[k] += w * vals[k];
  }
  for (auto& v : out) v *= dx;
  return out;
}

}  // namespace serial

}  // namespace gradflow::kernels
