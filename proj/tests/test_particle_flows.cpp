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
#include <omp.h>

#include <cmath>

#include "gradflow/particle_flows.hpp"
#include "gradflow/targets.hpp"

using namespace gradflow;

namespace {

GaussianState spread_state() {
  Vector m(2);
  m << 1.0, -2.0;
  Matrix C(2, 2);
  C << 2.0, 0.5, 0.5, 1.0;
  return GaussianState(m, C);
}

}  // namespace

TEST_CASE("sample_ensemble matches the requested moments") {
  const GaussianState g = spread_state();
  const Ensemble e = sample_ensemble(g, 200000, NoiseStream(1));
  const EmpiricalMoments mom = empirical_moments(e);
  CHECK((mom.mean - g.mean()).norm() < 0.02);
  CHECK((mom.cov - g.cov()).norm() < 0.03);
  CHECK_THROWS_AS(sample_ensemble(g, 0, NoiseStream(1)), ConfigError);
}

TEST_CASE("empirical moments use 1/J normalization") {
  Ensemble e;
  e.particles.resize(2, 1);
  e.particles << -1.0, 1.0;
  const EmpiricalMoments mom = empirical_moments(e);
  CHECK(mom.mean[0] == 0.0);
  CHECK(mom.cov(0, 0) == 1.0);
  e.particles.resize(1, 1);
  CHECK_THROWS_AS(empirical_moments(e), ConfigError);
}

TEST_CASE("kernel scaling constants") {
  CHECK(rbf_median_scale(100, 2) == doctest::Approx(1.0 + 2.0 * std::log(101.0)));
  CHECK(ai_kernel_scale(2) == doctest::Approx(2.0));
  CHECK(ai_kernel_scale(1) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("bound rbf kernel uses the median heuristic") {
  Ensemble e;
  e.particles.resize(3, 1);
  e.particles << 0.0, 1.0, 3.0;
  const BoundKernel k = bind_kernel(KernelSpec::rbf_median(), e);
  // Distances 1 2 3: median 2, h = 4 / log 4.
  CHECK(k.bandwidth == doctest::Approx(4.0 / std::log(4.0)));
  CHECK(k.value(Vector::Zero(1), Vector::Zero(1)) == doctest::Approx(rbf_median_scale(3, 1)));
  Ensemble one;
  one.particles = ParticleMatrix::Zero(1, 2);
  CHECK_THROWS_AS(bind_kernel(KernelSpec::rbf_median(), one), MethodError);
}

TEST_CASE("langevin without noise is gradient ascent") {
  const TargetDensity rho = gaussian_target(1.0);
  const Ensemble e = sample_ensemble(spread_state(), 10, NoiseStream(2));
  const Ensemble out = langevin_step(e, rho, 0.1, NoiseStream(2), 0, /*inject_noise=*/false);
  CHECK((out.particles - 0.9 * e.particles).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("ai-langevin noise has covariance 2 dt C") {
  const GaussianState g = spread_state();
  const Ensemble e = sample_ensemble(g, 50000, NoiseStream(3));
  // Flat target: only the noise moves particles.
  TargetDensity flat = gaussian_target(1.0);
  flat.grad_log = [](const Vector&) -> Vector { return Vector::Zero(2); };
  const double dt = 0.01;
  const Ensemble out = ai_langevin_step(e, flat, dt, NoiseStream(3), 0);
  Ensemble inc;
  inc.particles = out.particles - e.particles;
  const EmpiricalMoments mom = empirical_moments(inc);
  const Matrix C = empirical_moments(e).cov;
  CHECK((mom.cov / (2 * dt) - C).norm() < 0.05 * C.norm());
}

TEST_CASE("ai-langevin and ai-svgd reject degenerate ensembles") {
  const TargetDensity rho = gaussian_target(1.0);
  Ensemble e = sample_ensemble(spread_state(), 3, NoiseStream(4));
  CHECK_THROWS_AS(ai_langevin_step(e, rho, 0.1, NoiseStream(4), 0), SpdError);
  e = sample_ensemble(spread_state(), 10, NoiseStream(4));
  e.particles.col(1) = 2.0 * e.particles.col(0);
  CHECK_THROWS_AS(ai_svgd_step(e, rho, 0.1), SpdError);
}

TEST_CASE("svgd rejects non-rbf kernels and bad dt") {
  const TargetDensity rho = gaussian_target(1.0);
  const Ensemble e = sample_ensemble(spread_state(), 10, NoiseStream(5));
  CHECK_THROWS_AS(svgd_step(e, rho, KernelSpec::ai_mahalanobis(), 0.1), UnsupportedError);
  CHECK_THROWS_AS(svgd_step(e, rho, KernelSpec::rbf_median(), 0.0), StepSizeError);
}

TEST_CASE("affine mean-field step moves moments exactly") {
  const GaussianState g = spread_state();
  const Ensemble e = sample_ensemble(g, 1000, NoiseStream(6));
  const EmpiricalMoments before = empirical_moments(e);
  AffineDrift d;
  d.A = Matrix(2, 2);
  d.A << -0.5, 0.2, 0.1, -1.0;
  d.b = Vector(2);
  d.b << 0.3, -0.1;
  const double dt = 0.05;
  const Ensemble out = affine_meanfield_step(e, d, before.mean, dt);
  const EmpiricalMoments after = empirical_moments(out);
  const Matrix M = Matrix::Identity(2, 2) + dt * d.A;
  CHECK((after.mean - (before.mean + dt * d.b)).norm() < 1e-13);
  CHECK((after.cov - M * before.cov * M.transpose()).norm() < 1e-12);
  d.A(0, 0) = NAN;
  CHECK_THROWS_AS(affine_meanfield_step(e, d, before.mean, dt), NonFiniteError);
}

TEST_CASE("particle steps are reproducible and thread-count independent") {
  const TargetDensity rho = rosenbrock_target(1.0);
  const Ensemble e = sample_ensemble(spread_state(), 64, NoiseStream(7));
  const NoiseStream noise(7);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    Ensemble x = e;
    for (int k = 0; k < 5; ++k) {
      x = langevin_step(x, rho, 1e-3, noise, k);
      x = ai_langevin_step(x, rho, 1e-3, noise, k);
      x = svgd_step(x, rho, KernelSpec::rbf_median(), 1e-3);
      x = ai_svgd_step(x, rho, 1e-3);
    }
    return x.particles;
  };
  const ParticleMatrix a = run(1), b = run(4), c = run(1);
  CHECK((a.array() == b.array()).all());
  CHECK((a.array() == c.array()).all());
}
