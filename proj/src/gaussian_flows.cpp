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

#include "gradflow/gaussian_flows.hpp"

#include <cmath>

#include "gradflow/quadrature.hpp"

namespace gradflow {

namespace {

struct GaussianExpectations {
  Vector grad;
  Matrix hess;
};

GaussianExpectations gaussian_expectations(const GaussianState& g, const TargetDensity& rho,
                                           const MomentQuadrature& quad) {
  if (rho.dim != g.dim()) throw DimensionError("Gaussian flow: state and target dimensions differ");
  const double kappa = std::isnan(quad.kappa) ? default_ut_kappa(g.dim()) : quad.kappa;
  const SigmaPointSet q = unscented_points(g, kappa);
  return {expected_grad_log(rho, q), expected_hess_log(rho, q)};
}

Matrix identity_like(const GaussianState& g) { return Matrix::Identity(g.dim(), g.dim()); }

}  // namespace

SteinBilinearRule stein_bilinear_preset(const std::string& name) {
  if (name == "wasserstein-equiv") {
    return {name, identity_like, [](const GaussianState& g) { return spd_inverse(g.cov()); },
            [](const GaussianState&) { return 1.0; }};
  }
  if (name == "fisher-rao-equiv") {
    return {name, [](const GaussianState& g) { return g.cov(); },
            [](const GaussianState& g) -> Matrix { return 0.5 * spd_inverse(g.cov()); },
            [](const GaussianState&) { return 1.0; }};
  }
  if (name == "galy-flexible") {
    return {name, identity_like, identity_like, [](const GaussianState&) { return 1.0; }};
  }
  throw ConfigError("unknown stein-bilinear preset '" + name + "'");
}

const std::vector<std::string>& stein_bilinear_presets() {
  static const std::vector<std::string> names = {"wasserstein-equiv", "fisher-rao-equiv", "galy-flexible"};
  return names;
}

GaussianFlowKind GaussianFlowKind::parse(const std::string& id) {
  if (id == "plain-gd") return plain_gd();
  if (id == "fisher-rao") return fisher_rao();
  if (id == "wasserstein") return wasserstein();
  if (id == "ai-wasserstein") return ai_wasserstein();
  if (id == "kalman-bucy") return kalman_bucy();
  const std::string prefix = "stein-bilinear:";
  if (id.rfind(prefix, 0) == 0) return stein_bilinear(stein_bilinear_preset(id.substr(prefix.size())));
  throw ConfigError("unknown Gaussian flow id '" + id + "'");
}

std::string GaussianFlowKind::name() const {
  switch (id) {
    case GaussianFlowId::kPlainGd: return "plain-gd";
    case GaussianFlowId::kFisherRao: return "fisher-rao";
    case GaussianFlowId::kWasserstein: return "wasserstein";
    case GaussianFlowId::kAiWasserstein: return "ai-wasserstein";
    case GaussianFlowId::kKalmanBucy: return "kalman-bucy";
    case GaussianFlowId::kSteinBilinear: return "stein-bilinear:" + (stein ? stein->name : std::string("?"));
  }
  return "?";
}

MomentRate rhs(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
               const MomentQuadrature& quad) {
  const Matrix& C = g.cov();
  const int d = g.dim();
  MomentRate out;

  if (kind.id == GaussianFlowId::kKalmanBucy) {
    if (!rho.linear_model) {
      throw UnsupportedError("kalman-bucy flow requires a linear-gaussian target");
    }
    const auto& lm = *rho.linear_model;
    const Matrix CHt = C * lm.H.transpose();
    const Matrix Rinv = spd_inverse(lm.R);
    out.dm = -CHt * (Rinv * (lm.H * g.mean() - lm.y));
    out.dC = symmetrize(-CHt * Rinv * CHt.transpose());
    return out;
  }

  const auto e = gaussian_expectations(g, rho, quad);
  switch (kind.id) {
    case GaussianFlowId::kFisherRao:
      out.dm = C * e.grad;
      out.dC = C + C * e.hess * C;
      break;
    case GaussianFlowId::kWasserstein:
      out.dm = e.grad;
      out.dC = 2.0 * Matrix::Identity(d, d) + e.hess * C + C * e.hess;
      break;
    case GaussianFlowId::kAiWasserstein:
      out.dm = C * e.grad;
      out.dC = 2.0 * C + 2.0 * C * e.hess * C;
      break;
    case GaussianFlowId::kPlainGd:
      out.dm = e.grad;
      out.dC = 0.5 * spd_inverse(C) + 0.5 * e.hess;
      break;
    case GaussianFlowId::kSteinBilinear: {
      if (!kind.stein) throw ConfigError("stein-bilinear flow without a rule");
      const Matrix P = kind.stein->preconditioner(g);
      const Matrix A = kind.stein->kernel_matrix(g);
      const double b = kind.stein->kernel_offset(g);
      const Matrix CAC = C * A * C;
      out.dm = b * (P * e.grad);
      out.dC = P * A * C + C * A * P + P * e.hess * CAC + CAC * e.hess * P;
      break;
    }
    case GaussianFlowId::kKalmanBucy:
      break;
  }
  out.dC = symmetrize(out.dC);
  return out;
}

GaussianState analytic_fr_solution(const GaussianState& g0, const Vector& m_star, const Matrix& C_star, double t) {
  if (t < 0.0) throw ConfigError("analytic_fr_solution: t must be nonnegative");
  if (t == 0.0) return g0;
  const double s = std::exp(-t);
  const Matrix C0inv = spd_inverse(g0.cov());
  const Matrix Cstar_inv = spd_inverse(C_star);
  const Matrix Ct_inv = symmetrize(Cstar_inv + s * (C0inv - Cstar_inv));
  const Matrix Ct = spd_inverse(Ct_inv);
  const Vector mt = m_star + s * (Ct * (C0inv * (g0.mean() - m_star)));
  return GaussianState(mt, Ct);
}

AffineDrift affine_drift(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
                         const MomentQuadrature& quad) {
  const int d = g.dim();
  const Matrix I = Matrix::Identity(d, d);
  const Matrix& C = g.cov();
  AffineDrift out;
  switch (kind.id) {
    case GaussianFlowId::kPlainGd:
    case GaussianFlowId::kKalmanBucy:
      throw UnsupportedError("affine_drift: no affine mean-field form for " + kind.name());
    case GaussianFlowId::kFisherRao: {
      const auto e = gaussian_expectations(g, rho, quad);
      out.A = 0.5 * (I + C * e.hess);
      out.b = C * e.grad;
      return out;
    }
    case GaussianFlowId::kWasserstein:
    case GaussianFlowId::kAiWasserstein: {
      // A = P C^{-1} + P E[H], b = P E[grad]; P = I or P = C.
      const auto e = gaussian_expectations(g, rho, quad);
      if (kind.id == GaussianFlowId::kWasserstein) {
        out.A = spd_inverse(C) + e.hess;
        out.b = e.grad;
      } else {
        out.A = I + C * e.hess;
        out.b = C * e.grad;
      }
      return out;
    }
    case GaussianFlowId::kSteinBilinear: {
      if (!kind.stein) throw ConfigError("stein-bilinear flow without a rule");
      const auto e = gaussian_expectations(g, rho, quad);
      const Matrix P = kind.stein->preconditioner(g);
      const Matrix A = kind.stein->kernel_matrix(g);
      out.A = P * A + P * e.hess * C * A;
      out.b = kind.stein->kernel_offset(g) * (P * e.grad);
      return out;
    }
  }
  throw UnsupportedError("affine_drift: unknown flow kind");
}

TargetDensity homotopy_target(const GaussianState& prior, const TargetDensity& log_likelihood, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("homotopy_target: t must lie in [0, 1]");
  if (log_likelihood.dim != prior.dim()) throw DimensionError("homotopy_target: dimensions differ");
  const Vector m0 = prior.mean();
  const Matrix P0 = spd_inverse(prior.cov());
  auto lf = log_likelihood.log_density;
  auto gf = log_likelihood.grad_log;
  auto hf = log_likelihood.hess_log;
  TargetDensity out;
  out.name = "homotopy";
  out.dim = prior.dim();
  out.log_density = [=](const Vector& x) {
    const Vector r = x - m0;
    return t * lf(x) - 0.5 * r.dot(P0 * r);
  };
  out.grad_log = [=](const Vector& x) -> Vector { return t * gf(x) - P0 * (x - m0); };
  out.hess_log = [=](const Vector& x) -> Matrix { return symmetrize(t * hf(x) - P0); };
  return out;
}

namespace {

GaussianState rk4_substeps(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
                           const MomentQuadrature& quad, double h, long substeps) {
  GaussianState cur = g;
  for (long s = 0; s < substeps; ++s) {
    const Vector& m = cur.mean();
    const Matrix& C = cur.cov();
    const MomentRate k1 = rhs(kind, cur, rho, quad);
    const MomentRate k2 = rhs(kind, GaussianState(m + 0.5 * h * k1.dm, symmetrize(C + 0.5 * h * k1.dC)), rho, quad);
    const MomentRate k3 = rhs(kind, GaussianState(m + 0.5 * h * k2.dm, symmetrize(C + 0.5 * h * k2.dC)), rho, quad);
    const MomentRate k4 = rhs(kind, GaussianState(m + h * k3.dm, symmetrize(C + h * k3.dC)), rho, quad);
    cur = GaussianState(m + (h / 6.0) * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm),
                        symmetrize(C + (h / 6.0) * (k1.dC + 2.0 * k2.dC + 2.0 * k3.dC + k4.dC)));
  }
  return cur;
}

}  // namespace

GaussianState rk4_step(const GaussianFlowKind& kind, const GaussianState& g, const TargetDensity& rho,
                       const MomentIntegrator& integrator) {
  if (!(integrator.dt > 0.0)) throw StepSizeError("rk4_step: dt must be positive");
  double h = integrator.dt;
  long substeps = 1;
  for (int attempt = 0;; ++attempt) {
    try {
      return rk4_substeps(kind, g, rho, integrator.quad, h, substeps);
    } catch (const SpdError&) {
      if (attempt >= integrator.max_halvings) throw;
      h *= 0.5;
      substeps *= 2;
    }
  }
}

void integrate_moments(const GaussianFlowKind& kind, GaussianState g, const TargetDensity& rho,
                       const MomentIntegrator& integrator, long steps, long record_every,
                       const std::function<void(long, const GaussianState&)>& observe) {
  if (record_every < 1) throw ConfigError("integrate_moments: record_every must be >= 1");
  observe(0, g);
  for (long n = 1; n <= steps; ++n) {
    g = rk4_step(kind, g, rho, integrator);
    if (n % record_every == 0 || n == steps) observe(n, g);
  }
}

}  // namespace gradflow
