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

#include "gradflow/density_grid.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace gradflow {

namespace {

void require_same_grid(const Grid1D& a, const Grid1D& b, const char* what) {
  if (a.lo != b.lo || a.hi != b.hi || a.n != b.n) {
    throw DimensionError(std::string(what) + ": densities live on different grids");
  }
}

void require_grid_vector(const Grid1D& grid, const Vector& v, const char* what) {
  if (v.size() != grid.n) {
    std::ostringstream os;
    os << what << ": expected " << grid.n << " node values, got " << v.size();
    throw DimensionError(os.str());
  }
}

void require_finite_log(const Vector& u, const char* what) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      std::ostringstream os;
      os << what << ": density must be strictly positive and finite; node " << i << " has log value " << u[i];
      throw NonFiniteError(os.str());
    }
  }
}

// E_rho[f] - the centered rate of the Fisher-Rao flow is f - E_rho[f].
Vector centered_rate(const GridDensity& d, const Vector& log_post, const Vector& log_rho) {
  const Vector r = log_post - log_rho;
  const double mean = trapezoid(d.grid(), (d.values().array() * r.array()).matrix());
  return (r.array() - mean).matrix();
}

Vector checked_log_factor(const Vector& factor, const char* what) {
  Vector out(factor.size());
  for (Eigen::Index i = 0; i < factor.size(); ++i) {
    if (!(factor[i] > 0.0)) {
      std::ostringstream os;
      os << what << ": density at node " << i << " would become nonpositive (factor " << factor[i]
         << "); reduce dt";
      throw StepSizeError(os.str());
    }
    out[i] = std::log(factor[i]);
  }
  return out;
}

}  // namespace

Grid1D::Grid1D(double lo_, double hi_, int n_) : lo(lo_), hi(hi_), n(n_) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("Grid1D: need finite hi > lo");
  if (n < 3) throw ConfigError("Grid1D: need at least 3 nodes");
}

Grid1D Grid1D::around(double center, double sigma, int n, double half_widths) {
  if (!(sigma > 0.0)) throw ConfigError("Grid1D::around: sigma must be positive");
  return Grid1D(center - half_widths * sigma, center + half_widths * sigma, n);
}

Vector Grid1D::nodes() const {
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = node(i);
  return x;
}

double trapezoid(const Grid1D& grid, const Vector& values) {
  require_grid_vector(grid, values, "trapezoid");
  double acc = 0.5 * values[0];
  for (int i = 1; i < grid.n - 1; ++i) acc += values[i];
  acc += 0.5 * values[grid.n - 1];
  return acc * grid.dx();
}

GridDensity GridDensity::from_log(const Grid1D& grid, Vector log_values) {
  require_grid_vector(grid, log_values, "GridDensity");
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < log_values.size(); ++i) {
    const double u = log_values[i];
    if (std::isnan(u) || u == std::numeric_limits<double>::infinity()) {
      std::ostringstream os;
      os << "GridDensity: log value at node " << i << " is " << u;
      throw NonFiniteError(os.str());
    }
    top = std::max(top, u);
  }
  if (!std::isfinite(top)) throw NonFiniteError("GridDensity: density vanishes on the whole grid");
  const Vector shifted = (log_values.array() - top).matrix();
  const double mass = trapezoid(grid, shifted.array().exp().matrix());
  return GridDensity(grid, (shifted.array() - std::log(mass)).matrix());
}

GridDensity GridDensity::from_values(const Grid1D& grid, const Vector& values) {
  require_grid_vector(grid, values, "GridDensity");
  Vector u(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      std::ostringstream os;
      os << "GridDensity: negative value " << values[i] << " at node " << i;
      throw ConfigError(os.str());
    }
    u[i] = std::log(values[i]);
  }
  return from_log(grid, std::move(u));
}

GridDensity GridDensity::from_target(const Grid1D& grid, const TargetDensity& rho) {
  return from_log(grid, log_target_on_grid(grid, rho));
}

double GridDensity::mean() const {
  return trapezoid(grid_, (values().array() * grid_.nodes().array()).matrix());
}

double GridDensity::variance() const {
  const double m = mean();
  const Vector r = (grid_.nodes().array() - m).matrix();
  return trapezoid(grid_, (values().array() * r.array().square()).matrix());
}

Vector log_target_on_grid(const Grid1D& grid, const TargetDensity& rho) {
  if (rho.dim != 1) throw DimensionError("grid flows need a one-dimensional target, got '" + rho.name + "'");
  const double dx = grid.dx();
  Vector v(grid.n);
  Vector x(1);
  x[0] = grid.node(0);
  double g_prev = rho.grad_log(x)[0];
  double h_prev = rho.hess_log(x)(0, 0);
  v[0] = 0.0;
  for (int i = 1; i < grid.n; ++i) {
    x[0] = grid.node(i);
    const double g = rho.grad_log(x)[0];
    const double h = rho.hess_log(x)(0, 0);
    v[i] = v[i - 1] + 0.5 * dx * (g_prev + g) + dx * dx / 12.0 * (h_prev - h);
    g_prev = g;
    h_prev = h;
  }
  require_finite_log(v, "log_target_on_grid");
  return v;
}

GridDensity fr_flow_step(const GridDensity& d, const Vector& log_post, double dt, FrScheme scheme) {
  if (!(dt > 0.0)) throw StepSizeError("fr_flow_step: dt must be positive");
  require_grid_vector(d.grid(), log_post, "fr_flow_step");
  const Vector& u = d.log_values();
  require_finite_log(u, "fr_flow_step");
  const Vector k1 = centered_rate(d, log_post, u);
  const Vector euler = (1.0 + dt * k1.array()).matrix();
  if (scheme == FrScheme::kEuler) {
    return GridDensity::from_log(d.grid(), u + checked_log_factor(euler, "fr_flow_step"));
  }
  // Heun: rho_new = rho + dt/2 (F(rho) + F(rho~)) with rho~ = rho (1 + dt k1).
  const Vector log_pred = u + checked_log_factor(euler, "fr_flow_step");
  const GridDensity pred = GridDensity::from_log(d.grid(), log_pred);
  const Vector k2 = centered_rate(pred, log_post, pred.log_values());
  const Vector factor = (1.0 + 0.5 * dt * (k1.array() + euler.array() * k2.array())).matrix();
  return GridDensity::from_log(d.grid(), u + checked_log_factor(factor, "fr_flow_step"));
}

GridDensity fr_closed_form(const GridDensity& rho0, const Vector& log_post, double t) {
  if (t < 0.0) throw ConfigError("fr_closed_form: t must be nonnegative");
  require_grid_vector(rho0.grid(), log_post, "fr_closed_form");
  if (t == 0.0) return rho0;
  const double s = std::exp(-t);
  return GridDensity::from_log(rho0.grid(), s * rho0.log_values() + (1.0 - s) * log_post);
}

double grid_kl(const GridDensity& p, const GridDensity& q) {
  require_same_grid(p.grid(), q.grid(), "grid_kl");
  const Vector& lp = p.log_values();
  const Vector& lq = q.log_values();
  Vector integrand(lp.size());
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    if (lp[i] == -std::numeric_limits<double>::infinity()) {
      integrand[i] = 0.0;
    } else if (lq[i] == -std::numeric_limits<double>::infinity()) {
      std::cerr << "warning: grid_kl: q vanishes at node " << i << " where p is positive; KL is infinite\n";
      return std::numeric_limits<double>::infinity();
    } else {
      integrand[i] = std::exp(lp[i]) * (lp[i] - lq[i]);
    }
  }
  return std::max(0.0, trapezoid(p.grid(), integrand));
}

Vector wasserstein_fp_update(const GridDensity& d, const Vector& log_post, double dt) {
  require_grid_vector(d.grid(), log_post, "wasserstein_fp_step");
  const double dx = d.grid().dx();
  if (!(dt > 0.0) || dt > 0.5 * dx * dx) {
    std::ostringstream os;
    os << "wasserstein_fp_step: dt = " << dt << " violates the stability bound dt <= dx^2 / 2 = " << 0.5 * dx * dx;
    throw StepSizeError(os.str());
  }
  require_finite_log(log_post, "wasserstein_fp_step");
  const Vector rho = d.values();
  const int n = d.grid().n;
  // flux[i] sits between nodes i and i + 1; the outer faces carry zero flux.
  Vector flux(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    flux[i] = (rho[i + 1] - rho[i]) / dx - 0.5 * (rho[i] + rho[i + 1]) * (log_post[i + 1] - log_post[i]) / dx;
  }
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    const double right = i < n - 1 ? flux[i] : 0.0;
    const double left = i > 0 ? flux[i - 1] : 0.0;
    out[i] = rho[i] + dt * (right - left) / dx;
  }
  return out;
}

GridDensity wasserstein_fp_step(const GridDensity& d, const Vector& log_post, double dt) {
  const Vector next = wasserstein_fp_update(d, log_post, dt);
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    if (next[i] < 0.0) {
      std::ostringstream os;
      os << "wasserstein_fp_step: negative density " << next[i] << " at node " << i
         << "; reduce dt or refine the grid so |log rho_post| changes by less than 2 per cell";
      throw StepSizeError(os.str());
    }
  }
  return GridDensity::from_values(d.grid(), next);
}

}  // namespace gradflow
