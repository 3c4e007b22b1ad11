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

#include "gradflow/metrics.hpp"

#include <cmath>
#include <sstream>

namespace gradflow {

namespace {

void require_dims(int dim, const ReferenceStats& ref, const char* what) {
  if (ref.mean.size() != dim || ref.cov.rows() != dim || ref.cov.cols() != dim) {
    std::ostringstream os;
    os << what << ": state has dimension " << dim << " but the reference has " << ref.mean.size();
    throw DimensionError(os.str());
  }
}

ErrorTriple moment_errors(const Vector& m, const Matrix& C, const ReferenceStats& ref,
                          const std::function<double(const CosMoment&)>& cos_moment) {
  ErrorTriple out;
  out.mean_err = (m - ref.mean).norm();
  out.cov_err = (C - ref.cov).norm() / ref.cov.norm();
  double acc = 0.0;
  for (const auto& c : ref.cos_moments) {
    const double diff = cos_moment(c) - c.value;
    out.cos_per_draw.push_back(diff * diff);
    acc += diff * diff;
  }
  out.cos_err = ref.cos_moments.empty() ? 0.0 : acc / static_cast<double>(ref.cos_moments.size());
  return out;
}

}  // namespace

ErrorTriple error_triple(const GaussianState& g, const ReferenceStats& ref) {
  require_dims(g.dim(), ref, "error_triple");
  return moment_errors(g.mean(), g.cov(), ref, [&](const CosMoment& c) {
    return gaussian_cos_moment(g.mean(), g.cov(), c.omega, c.phase);
  });
}

ErrorTriple error_triple(const Ensemble& e, const ReferenceStats& ref) {
  require_dims(e.dim(), ref, "error_triple");
  const EmpiricalMoments mom = empirical_moments(e);
  return moment_errors(mom.mean, mom.cov, ref, [&](const CosMoment& c) {
    double acc = 0.0;
    for (int j = 0; j < e.size(); ++j) acc += std::cos(e.particles.row(j).dot(c.omega) + c.phase);
    return acc / static_cast<double>(e.size());
  });
}

ErrorTriple error_triple(const GridDensity& d, const ReferenceStats& ref) {
  require_dims(1, ref, "error_triple");
  const Vector m = Vector::Constant(1, d.mean());
  const Matrix C = Matrix::Constant(1, 1, d.variance());
  const Vector x = d.grid().nodes();
  const Vector p = d.values();
  return moment_errors(m, C, ref, [&](const CosMoment& c) {
    const Vector f = (c.omega[0] * x.array() + c.phase).cos().matrix();
    return trapezoid(d.grid(), (p.array() * f.array()).matrix());
  });
}

double gaussian_kl(const GaussianState& p, const GaussianState& q) {
  if (p.dim() != q.dim()) throw DimensionError("gaussian_kl: dimensions differ");
  const Matrix Qinv = spd_inverse(q.cov());
  const Vector dm = q.mean() - p.mean();
  const double value =
      0.5 * ((Qinv * p.cov()).trace() + dm.dot(Qinv * dm) - p.dim() + spd_logdet(q.cov()) - spd_logdet(p.cov()));
  return std::max(0.0, value);
}

double slope_fit(const std::vector<double>& t, const std::vector<double>& values, double t_lo, double t_hi,
                 SlopeMode mode) {
  if (t.size() != values.size()) throw DimensionError("slope_fit: t and values differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      std::ostringstream os;
      os << "slope_fit: value " << values[i] << " at t = " << t[i] << " is not positive";
      throw MethodError(os.str());
    }
    if (mode == SlopeMode::kLogLog && !(t[i] > 0.0)) throw MethodError("slope_fit: log-log mode needs t > 0");
    xs.push_back(mode == SlopeMode::kLogLog ? std::log(t[i]) : t[i]);
    ys.push_back(std::log(values[i]));
  }
  if (xs.size() < 5) {
    std::ostringstream os;
    os << "slope_fit: only " << xs.size() << " points in [" << t_lo << ", " << t_hi << "]; need at least 5";
    throw MethodError(os.str());
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) throw MethodError("slope_fit: all points share one abscissa");
  return sxy / sxx;
}

}  // namespace gradflow
