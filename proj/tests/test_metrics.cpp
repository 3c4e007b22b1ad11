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

#include "gradflow/metrics.hpp"

using namespace gradflow;

TEST_CASE("error triple vanishes at the reference") {
  const TargetDensity rho = gaussian_target(0.1);
  const ReferenceStats ref = gaussian_reference(*rho.gaussian, draw_cos_directions(2, 3));
  const ErrorTriple e = error_triple(*rho.gaussian, ref);
  CHECK(e.mean_err == 0.0);
  CHECK(e.cov_err == 0.0);
  CHECK(e.cos_err == 0.0);
  CHECK(e.cos_per_draw.size() == 20);
}

TEST_CASE("error triple definitions") {
  const TargetDensity rho = gaussian_target(1.0);
  const ReferenceStats ref = gaussian_reference(*rho.gaussian, draw_cos_directions(2, 3));
  Vector m(2);
  m << 3.0, 4.0;
  const GaussianState g(m, 2.0 * Matrix::Identity(2, 2));
  const ErrorTriple e = error_triple(g, ref);
  CHECK(e.mean_err == doctest::Approx(5.0));
  CHECK(e.cov_err == doctest::Approx(1.0));
  double acc = 0.0;
  for (const auto& c : ref.cos_moments) acc += std::pow(gaussian_cos_moment(m, g.cov(), c.omega, c.phase) - c.value, 2);
  CHECK(e.cos_err == doctest::Approx(acc / 20.0));
}

TEST_CASE("grid and ensemble error triples") {
  const Grid1D grid(-12.0, 12.0, 4001);
  const GridDensity d = GridDensity::from_target(grid, normal_1d_target(0.5, 2.0));
  const ReferenceStats ref = gaussian_reference(GaussianState(Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 2.0)),
                                                draw_cos_directions(1, 1));
  const ErrorTriple e = error_triple(d, ref);
  CHECK(e.mean_err < 1e-10);
  CHECK(e.cov_err < 1e-9);
  CHECK(e.cos_err < 1e-18);
  Ensemble ens;
  ens.particles.resize(2, 1);
  ens.particles << -0.5, 1.5;
  CHECK(error_triple(ens, ref).mean_err == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(error_triple(ens, gaussian_reference(*gaussian_target(1.0).gaussian, {})), DimensionError);
}

TEST_CASE("gaussian KL") {
  const GaussianState p(Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 1.0));
  const GaussianState q(Vector::Zero(1), Matrix::Constant(1, 1, 2.0));
  CHECK(gaussian_kl(p, q) == doctest::Approx(0.5 * std::log(2.0)));
  CHECK(gaussian_kl(p, p) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("slope fits") {
  std::vector<double> t, y, z;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k + 1.0);
    y.push_back(3.0 * std::exp(-0.7 * t.back()));
    z.push_back(2.0 * std::pow(t.back(), -0.5));
  }
  CHECK(slope_fit(t, y, 2.0, 8.0) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(slope_fit(t, z, 2.0, 8.0, SlopeMode::kLogLog) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_THROWS_AS(slope_fit(t, y, 2.0, 2.2), MethodError);
  y[50] = 0.0;
  CHECK_THROWS_AS(slope_fit(t, y, 2.0, 8.0), MethodError);
}
