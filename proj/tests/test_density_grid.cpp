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

#include <cmath>
#include <vector>

#include "gradflow/density_grid.hpp"
#include "gradflow/targets.hpp"

using namespace gradflow;

TEST_CASE("grid construction") {
  const Grid1D g(-1.0, 1.0, 5);
  CHECK(g.dx() == 0.5);
  CHECK(g.node(4) == 1.0);
  const Grid1D a = Grid1D::around(2.0, 0.5, 11);
  CHECK(a.lo == -3.0);
  CHECK(a.hi == 7.0);
  CHECK_THROWS_AS(Grid1D(1.0, 1.0, 5), ConfigError);
  CHECK_THROWS_AS(Grid1D(0.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(Grid1D::around(0.0, 0.0), ConfigError);
}

TEST_CASE("trapezoid is exact for linear functions") {
  const Grid1D g(0.0, 2.0, 7);
  CHECK(trapezoid(g, (3.0 * g.nodes().array() + 1.0).matrix()) == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("densities are normalized and reject bad input") {
  const Grid1D g(-15.0, 17.0, 3201);
  const GridDensity d = GridDensity::from_target(g, normal_1d_target(1.0, 2.0));
  CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(d.mean() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.variance() == doctest::Approx(2.0).epsilon(1e-8));
  Vector v = Vector::Ones(g.n);
  v[3] = -1.0;
  CHECK_THROWS_AS(GridDensity::from_values(g, v), ConfigError);
  CHECK_THROWS_AS(GridDensity::from_values(g, Vector::Zero(g.n)), NonFiniteError);
  Vector u = Vector::Zero(g.n);
  u[5] = NAN;
  CHECK_THROWS_AS(GridDensity::from_log(g, u), NonFiniteError);
  CHECK_THROWS_AS(GridDensity::from_log(g, Vector::Zero(10)), DimensionError);
  CHECK_THROWS_AS(log_target_on_grid(g, rosenbrock_target(1.0)), DimensionError);
}

TEST_CASE("gradient-accumulated log target is exact for Gaussians") {
  const Grid1D g(-8.0, 9.0, 513);
  const TargetDensity rho = normal_1d_target(0.5, 1.7);
  const Vector v = log_target_on_grid(g, rho);
  Vector x(1);
  x[0] = g.node(0);
  const double base = rho.log_density(x);
  double worst = 0.0;
  for (int i = 0; i < g.n; ++i) {
    x[0] = g.node(i);
    worst = std::max(worst, std::abs(v[i] - (rho.log_density(x) - base)));
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("fisher-rao grid step converges to the closed form at second order") {
  const TargetDensity post = bimodal_1d_target(4.0, 1.0);
  const Grid1D g = Grid1D::around(0.0, std::sqrt(5.0), 1024);
  const Vector lp = log_target_on_grid(g, post);
  const GridDensity rho0 = GridDensity::from_target(g, normal_1d_target(3.0, 1.0));
  auto err = [&](double dt, FrScheme scheme) {
    GridDensity d = rho0;
    const long n = std::lround(1.0 / dt);
    for (long k = 0; k < n; ++k) d = fr_flow_step(d, lp, dt, scheme);
    return (d.values() - fr_closed_form(rho0, lp, 1.0).values()).cwiseAbs().maxCoeff();
  };
  const double h1 = err(0.02, FrScheme::kHeun), h2 = err(0.01, FrScheme::kHeun);
  const double e1 = err(0.02, FrScheme::kEuler), e2 = err(0.01, FrScheme::kEuler);
  CHECK(h1 / h2 == doctest::Approx(4.0).epsilon(0.1));
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(h1 < e1);
  CHECK_THROWS_AS(fr_flow_step(rho0, lp, 50.0, FrScheme::kEuler), StepSizeError);
}

TEST_CASE("closed form endpoints") {
  const Grid1D g(-10.0, 10.0, 401);
  const GridDensity rho0 = GridDensity::from_target(g, normal_1d_target(2.0, 1.0));
  const Vector lp = log_target_on_grid(g, normal_1d_target(0.0, 1.0));
  CHECK((fr_closed_form(rho0, lp, 0.0).values() - rho0.values()).norm() == 0.0);
  const GridDensity far = fr_closed_form(rho0, lp, 40.0);
  CHECK((far.values() - GridDensity::from_log(g, lp).values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("KL divergence") {
  const Grid1D g(-12.0, 12.0, 4001);
  const GridDensity p = GridDensity::from_target(g, normal_1d_target(1.0, 1.0));
  const GridDensity q = GridDensity::from_target(g, normal_1d_target(0.0, 2.0));
  CHECK(grid_kl(p, p) == 0.0);
  // KL(N(1,1) || N(0,2)) = (log 2 + (1 + 1)/2 - 1) / 2.
  CHECK(grid_kl(p, q) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-8));
  Vector lq = q.log_values();
  lq[2000] = -INFINITY;
  CHECK(std::isinf(grid_kl(p, GridDensity::from_log(g, lq))));
}

TEST_CASE("Fokker-Planck step conserves mass and respects CFL") {
  const Grid1D g = Grid1D::around(0.0, 1.0, 256);
  const Vector lp = log_target_on_grid(g, normal_1d_target(0.0, 1.0));
  const GridDensity d = GridDensity::from_target(g, normal_1d_target(2.0, 1.0));
  const double dt = 0.25 * g.dx() * g.dx();
  const Vector next = wasserstein_fp_update(d, lp, dt);
  CHECK(next.sum() == doctest::Approx(d.values().sum()).epsilon(1e-13));
  CHECK_THROWS_AS(wasserstein_fp_step(d, lp, g.dx() * g.dx()), StepSizeError);
  // Long run approaches the target.
  GridDensity x = d;
  for (int k = 0; k < std::lround(6.0 / dt); ++k) x = wasserstein_fp_step(x, lp, dt);
  CHECK(grid_kl(x, GridDensity::from_log(g, lp)) < 1e-4);
}

TEST_CASE("KL closed form for distant Gaussians") {
  const Grid1D g(-15.0, 25.0, 8001);
  const GridDensity p = GridDensity::from_target(g, normal_1d_target(10.0, 2.0));
  const GridDensity q = GridDensity::from_target(g, normal_1d_target(0.0, 1.0));
  CHECK(grid_kl(p, q) == doctest::Approx(0.5 * (2.0 + 100.0 - 1.0 - std::log(2.0))).epsilon(1e-9));
}

TEST_CASE("Fokker-Planck special cases") {
  const Grid1D g = Grid1D::around(0.0, 1.0, 512);
  const double dt = 0.25 * g.dx() * g.dx();
  SUBCASE("posterior is stationary up to O(dx^2)") {
    const Vector lp = log_target_on_grid(g, normal_1d_target(0.0, 1.0));
    const GridDensity d = GridDensity::from_log(g, lp);
    GridDensity x = d;
    for (int k = 0; k < 1000; ++k) x = wasserstein_fp_step(x, lp, dt);
    CHECK((x.values() - d.values()).cwiseAbs().maxCoeff() < 10 * g.dx() * g.dx());
  }
  SUBCASE("flat posterior: heat equation variance grows by 2 per unit time") {
    const Vector flat = Vector::Zero(g.n);
    GridDensity x = GridDensity::from_target(g, normal_1d_target(0.0, 0.5));
    const double v0 = x.variance();
    const long n = std::lround(0.5 / dt);
    for (long k = 0; k < n; ++k) x = wasserstein_fp_step(x, flat, dt);
    CHECK((x.variance() - v0) / (n * dt) == doctest::Approx(2.0).epsilon(1e-3));
  }
  SUBCASE("mass conserved over many steps") {
    const Vector lp = log_target_on_grid(g, bimodal_1d_target(4.0, 1.0));
    const GridDensity d = GridDensity::from_target(g, normal_1d_target(2.0, 0.5));
    Vector rho = d.values();
    const double m0 = rho.sum() * g.dx();
    GridDensity x = d;
    for (int k = 0; k < 500; ++k) {
      rho = wasserstein_fp_update(x, lp, dt);
      CHECK(rho.sum() * g.dx() == doctest::Approx(m0).epsilon(1e-10));
      x = GridDensity::from_values(g, rho);
    }
  }
}

TEST_CASE("fisher-rao KL slope is unchanged by affine reparametrization") {
  auto slope = [](double shift, double scale) {
    const TargetDensity post = normal_1d_target(shift, scale * scale);
    const TargetDensity init = normal_1d_target(shift + 2.0 * scale, 0.25 * scale * scale);
    const Grid1D g = Grid1D::around(shift, scale, 1024, 12.0);
    const Vector lp = log_target_on_grid(g, post);
    const GridDensity target = GridDensity::from_log(g, lp);
    GridDensity d = GridDensity::from_target(g, init);
    std::vector<double> t, kl;
    for (int k = 1; k <= 600; ++k) {
      d = fr_flow_step(d, lp, 0.01);
      if (k % 10 == 0) {
        t.push_back(0.01 * k);
        kl.push_back(grid_kl(d, target));
      }
    }
    // log(KL) fitted by least squares on [3, 6].
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < 3.0) continue;
      const double y = std::log(kl[i]);
      st += t[i];
      sy += y;
      stt += t[i] * t[i];
      sty += t[i] * y;
      ++n;
    }
    return (n * sty - st * sy) / (n * stt - st * st);
  };
  const double base = slope(0.0, 1.0);
  CHECK(slope(5.0, 3.0) == doctest::Approx(base).epsilon(0.02));
  CHECK(slope(-2.0, 0.2) == doctest::Approx(base).epsilon(0.02));
}
