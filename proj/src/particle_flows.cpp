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

#include "gradflow/particle_flows.hpp"

#include <cmath>
#include <sstream>

#include "gradflow/kernels.hpp"

namespace gradflow {

namespace {

Matrix empirical_cov_or_throw(const Ensemble& e, const char* what) {
  if (e.size() < e.dim() + 2) {
    std::ostringstream os;
    os << what << ": ensemble of " << e.size() << " particles in dimension " << e.dim()
       << " cannot give a nonsingular covariance; use at least " << e.dim() + 2 << " particles";
    throw SpdError(os.str());
  }
  EmpiricalMoments mom = empirical_moments(e);
  try {
    (void)spd_factor(mom.cov);
  } catch (const SpdError& err) {
    std::ostringstream os;
    os << what << ": empirical covariance is rank deficient (" << err.what()
       << "); increase the number of particles or spread the initial ensemble";
    throw SpdError(os.str());
  }
  return mom.cov;
}

}  // namespace

Ensemble sample_ensemble(const GaussianState& g, int J, const NoiseStream& noise) {
  if (J < 1) throw ConfigError("sample_ensemble: need at least one particle");
  const Matrix L = spd_factor(g.cov());
  const ParticleMatrix xi = noise.with_tag(NoiseStream::Tag::kInitial).gaussian_matrix(0, J, g.dim());
  Ensemble e;
  e.particles = (xi * L.transpose()).rowwise() + g.mean().transpose();
  return e;
}

Ensemble pushforward_ensemble(const AffineMap& phi, const Ensemble& e) {
  if (phi.dim() != e.dim()) throw DimensionError("pushforward_ensemble: dimensions differ");
  Ensemble out;
  out.particles = (e.particles * phi.A().transpose()).rowwise() + phi.b().transpose();
  return out;
}

EmpiricalMoments empirical_moments(const Ensemble& e) {
  const int J = e.size();
  if (J < 2) throw ConfigError("empirical_moments: need at least two particles");
  const int d = e.dim();
  EmpiricalMoments m;
  m.mean = Vector::Zero(d);
  for (int j = 0; j < J; ++j) m.mean += e.particles.row(j).transpose();
  m.mean /= static_cast<double>(J);
  m.cov = Matrix::Zero(d, d);
  for (int j = 0; j < J; ++j) {
    const Vector r = e.particles.row(j).transpose() - m.mean;
    m.cov.noalias() += r * r.transpose();
  }
  m.cov = symmetrize(m.cov / static_cast<double>(J));
  return m;
}

double rbf_median_scale(int J, int dim) {
  return std::pow(1.0 + 4.0 * std::log(J + 1.0) / dim, 0.5 * dim);
}

double ai_kernel_scale(int dim) { return std::pow(1.0 + 2.0 / dim, 0.5 * dim); }

double BoundKernel::value(const Vector& x, const Vector& y) const {
  const Vector diff = x - y;
  switch (kind) {
    case KernelKind::kRbfMedian:
      if (bandwidth > 0.0) return scale * std::exp(-diff.squaredNorm() / bandwidth);
      return diff.squaredNorm() == 0.0 ? scale : 0.0;
    case KernelKind::kAiMahalanobis:
      return scale * std::exp(-diff.dot(precision * diff) / (2.0 * static_cast<double>(x.size())));
    case KernelKind::kBilinear:
      return (x - center).dot(bilinear_matrix * (y - center)) + offset;
  }
  return 0.0;
}

BoundKernel bind_kernel(const KernelSpec& spec, const Ensemble& e) {
  BoundKernel k;
  k.kind = spec.kind;
  switch (spec.kind) {
    case KernelKind::kRbfMedian: {
      if (e.size() < 2) {
        throw MethodError("rbf_median kernel: bandwidth is undefined for a single particle");
      }
      k.scale = rbf_median_scale(e.size(), e.dim());
      k.bandwidth = kernels::median_squared_distance(e.particles) / std::log(e.size() + 1.0);
      break;
    }
    case KernelKind::kAiMahalanobis:
      k.scale = ai_kernel_scale(e.dim());
      k.precision = spd_inverse(empirical_cov_or_throw(e, "ai_mahalanobis kernel"));
      break;
    case KernelKind::kBilinear: {
      if (!spec.bilinear) throw ConfigError("bilinear kernel without a rule");
      const GaussianState g = empirical_moments(e).to_gaussian();
      k.center = g.mean();
      k.bilinear_matrix = spec.bilinear->kernel_matrix(g);
      k.offset = spec.bilinear->kernel_offset(g);
      k.scale = 1.0;
      break;
    }
  }
  return k;
}

Ensemble langevin_step(const Ensemble& e, const TargetDensity& rho, double dt, const NoiseStream& noise,
                       std::uint64_t step, bool inject_noise) {
  if (!(dt > 0.0)) throw StepSizeError("langevin_step: dt must be positive");
  const ParticleMatrix G = kernels::grad_log_rows(rho, e.particles);
  Ensemble out;
  out.particles = e.particles + dt * G;
  if (inject_noise) out.particles += std::sqrt(2.0 * dt) * noise.gaussian_matrix(step, e.size(), e.dim());
  return out;
}

Ensemble ai_langevin_step(const Ensemble& e, const TargetDensity& rho, double dt, const NoiseStream& noise,
                          std::uint64_t step, const AiLangevinOptions& options) {
  if (!(dt > 0.0)) throw StepSizeError("ai_langevin_step: dt must be positive");
  const Matrix C = options.covariance_override ? *options.covariance_override
                                               : empirical_cov_or_throw(e, "ai_langevin_step");
  const ParticleMatrix G = kernels::grad_log_rows(rho, e.particles);
  Ensemble out;
  out.particles = e.particles + dt * (G * C.transpose());
  if (options.inject_noise) {
    const Matrix L = options.noise_factor ? *options.noise_factor : spd_factor(C);
    out.particles += std::sqrt(2.0 * dt) * (noise.gaussian_matrix(step, e.size(), e.dim()) * L.transpose());
  }
  return out;
}

Ensemble svgd_step(const Ensemble& e, const TargetDensity& rho, const KernelSpec& k, double dt) {
  if (k.kind != KernelKind::kRbfMedian) {
    throw UnsupportedError("svgd_step: only the rbf_median kernel is supported; use ai_svgd_step for P = C");
  }
  if (!(dt > 0.0)) throw StepSizeError("svgd_step: dt must be positive");
  const BoundKernel bound = bind_kernel(k, e);
  const ParticleMatrix G = kernels::grad_log_rows(rho, e.particles);
  Ensemble out;
  out.particles = e.particles + dt * kernels::svgd_drift(e.particles, G, bound.scale, bound.bandwidth);
  return out;
}

Ensemble ai_svgd_step(const Ensemble& e, const TargetDensity& rho, double dt) {
  if (!(dt > 0.0)) throw StepSizeError("ai_svgd_step: dt must be positive");
  const Matrix C = empirical_cov_or_throw(e, "ai_svgd_step");
  const ParticleMatrix G = kernels::grad_log_rows(rho, e.particles);
  const ParticleMatrix CG = G * C.transpose();
  Ensemble out;
  out.particles = e.particles + dt * kernels::ai_svgd_drift(e.particles, CG, spd_inverse(C), ai_kernel_scale(e.dim()));
  return out;
}

Ensemble affine_meanfield_step(const Ensemble& e, const AffineDrift& drift, const Vector& m, double dt) {
  if (!drift.A.allFinite() || !drift.b.allFinite()) throw NonFiniteError("affine_meanfield_step: non-finite drift");
  if (drift.A.rows() != e.dim() || drift.b.size() != e.dim() || m.size() != e.dim()) {
    throw DimensionError("affine_meanfield_step: drift and ensemble dimensions differ");
  }
  Ensemble out;
  out.particles.resize(e.size(), e.dim());
  const Eigen::RowVectorXd shift = (drift.b - drift.A * m).transpose();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < e.size(); ++j) {
    out.particles.row(j) = e.particles.row(j) + dt * (e.particles.row(j) * drift.A.transpose() + shift);
  }
  return out;
}

}  // namespace gradflow
