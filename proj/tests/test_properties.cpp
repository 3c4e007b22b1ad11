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

// Randomized property checks over many seeds.

#include <doctest.h>
#include <omp.h>

#include <Eigen/LU>
#include <cmath>

#include "gradflow/density_grid.hpp"
#include "gradflow/gaussian_flows.hpp"
#include "gradflow/noise.hpp"
#include "gradflow/particle_flows.hpp"
#include "gradflow/targets.hpp"

using namespace gradflow;

namespace {

Matrix random_matrix(const NoiseStream& rng, std::uint64_t step) {
  Matrix G(2, 2);
  for (int i = 0; i < 2; ++i) G.row(i) = rng.gaussian(step, static_cast<std::uint32_t>(i), 2).transpose();
  return G;
}

Matrix random_spd(const NoiseStream& rng, std::uint64_t step) {
  const Matrix B = random_matrix(rng, step);
  return symmetrize(B * B.transpose() + 0.3 * Matrix::Identity(2, 2));
}

AffineMap random_map(const NoiseStream& rng, std::uint64_t step) {
  for (std::uint64_t k = 0;; ++k) {
    const Matrix A = Matrix::Identity(2, 2) + 0.7 * random_matrix(rng, 100 * step + k);
    if (std::abs(A.determinant()) > 0.2) return AffineMap(A, rng.gaussian(100 * step + k, 7, 2));
  }
}

double rel_gap(const MomentRate& pushed, const MomentRate& base, const Matrix& A) {
  const Vector m = A * base.dm;
  const Matrix C = A * base.dC * A.transpose();
  const double scale = std::max({1.0, m.cwiseAbs().maxCoeff(), C.cwiseAbs().maxCoeff()});
  return std::max((pushed.dm - m).cwiseAbs().maxCoeff(), (pushed.dC - C).cwiseAbs().maxCoeff()) / scale;
}

}  // namespace

TEST_CASE("affine-invariant moment flows commute with affine maps on non-Gaussian targets") {
  const NoiseStream rng(21, NoiseStream::Tag::kMonteCarlo);
  for (int trial = 0; trial < 50; ++trial) {
    const TargetDensity rho = trial % 2 ? rosenbrock_target(0.3) : logconcave_target(0.3);
    const GaussianState g(rng.gaussian(10 * trial, 3, 2), random_spd(rng, 10 * trial + 1));
    const AffineMap phi = random_map(rng, 10 * trial + 2);
    const TargetDensity rp = pushforward_target(phi, rho);
    const GaussianState gp = pushforward_gaussian(phi, g);
    for (const auto& kind : {GaussianFlowKind::fisher_rao(), GaussianFlowKind::ai_wasserstein()}) {
      CHECK(rel_gap(rhs(kind, gp, rp), rhs(kind, g, rho), phi.A()) < 1e-10);
    }
  }
}

TEST_CASE("moment rates are symmetric and steps stay SPD") {
  const NoiseStream rng(22, NoiseStream::Tag::kMonteCarlo);
  std::vector<GaussianFlowKind> kinds = {GaussianFlowKind::plain_gd(), GaussianFlowKind::fisher_rao(),
                                         GaussianFlowKind::wasserstein(), GaussianFlowKind::ai_wasserstein()};
  for (const auto& name : stein_bilinear_presets()) kinds.push_back(GaussianFlowKind::stein_bilinear(stein_bilinear_preset(name)));
  MomentIntegrator integ;
  integ.dt = 0.05;
  for (int trial = 0; trial < 30; ++trial) {
    const GaussianState g(rng.gaussian(trial, 0, 2), random_spd(rng, 1000 + trial));
    for (const auto& kind : kinds) {
      const MomentRate r = rhs(kind, g, rosenbrock_target(1.0));
      CHECK((r.dC - r.dC.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK_NOTHROW(rk4_step(kind, g, logconcave_target(1.0), integ));
    }
  }
}

TEST_CASE("log-density offsets never change a flow step") {
  const NoiseStream rng(23, NoiseStream::Tag::kMonteCarlo);
  MomentIntegrator integ;
  integ.dt = 0.01;
  for (int trial = 0; trial < 20; ++trial) {
    const double shift = 100.0 * rng.gaussian(trial, 9, 1)[0];
    const TargetDensity rho = rosenbrock_target(0.1);
    const TargetDensity rs = rho.shifted(shift);
    const GaussianState g(rng.gaussian(trial, 0, 2), random_spd(rng, 2000 + trial));
    const GaussianState a = rk4_step(GaussianFlowKind::ai_wasserstein(), g, rho, integ);
    const GaussianState b = rk4_step(GaussianFlowKind::ai_wasserstein(), g, rs, integ);
    CHECK((a.cov().array() == b.cov().array()).all());
    const Ensemble e = sample_ensemble(g, 20, NoiseStream(trial));
    CHECK((svgd_step(e, rho, KernelSpec::rbf_median(), 0.01).particles.array() ==
           svgd_step(e, rs, KernelSpec::rbf_median(), 0.01).particles.array())
              .all());
  }
}

TEST_CASE("grid flows keep unit mass and positivity from random starts") {
  const NoiseStream rng(24, NoiseStream::Tag::kMonteCarlo);
  const Grid1D grid = Grid1D::around(0.0, std::sqrt(5.0), 1024);
  const Vector lp = log_target_on_grid(grid, bimodal_1d_target(4.0, 1.0));
  const GridDensity target = GridDensity::from_log(grid, lp);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector z = rng.gaussian(trial, 0, 2);
    GridDensity fr = GridDensity::from_target(grid, normal_1d_target(3.0 * z[0], 1.0 + z[1] * z[1]));
    GridDensity fp = fr;
    double kl_fp = grid_kl(fp, target);
    const double dt = 0.25 * grid.dx() * grid.dx();
    for (int k = 0; k < 100; ++k) {
      fr = fr_flow_step(fr, lp, 1e-3);
      fp = wasserstein_fp_step(fp, lp, dt);
      const double next = grid_kl(fp, target);
      CHECK(next <= kl_fp * (1 + 1e-9) + 1e-14);
      kl_fp = next;
    }
    CHECK(fr.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fp.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((fr.values().array() > 0.0).all());
  }
}

TEST_CASE("ensemble trajectories do not depend on the thread count") {
  const TargetDensity rho = logconcave_target(0.1);
  Vector m(2);
  m << 2.0, -1.0;
  const GaussianState g(m, 2.0 * Matrix::Identity(2, 2));
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    Ensemble e = sample_ensemble(g, 500, NoiseStream(8));
    for (int k = 0; k < 10; ++k) {
      const GaussianState mom = empirical_moments(e).to_gaussian();
      e = affine_meanfield_step(e, affine_drift(GaussianFlowKind::fisher_rao(), mom, rho), mom.mean(), 0.01);
      e = ai_svgd_step(e, rho, 0.01);
    }
    return e.particles;
  };
  const ParticleMatrix a = run(1), b = run(3);
  CHECK((a.array() == b.array()).all());
}
