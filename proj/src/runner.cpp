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

#include "gradflow/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gradflow/density_grid.hpp"
#include "gradflow/gaussian_flows.hpp"
#include "gradflow/noise.hpp"
#include "gradflow/oracle.hpp"
#include "gradflow/particle_flows.hpp"
#include "gradflow/quadrature.hpp"
#include "gradflow/targets.hpp"

#ifndef GRADFLOW_VERSION
#define GRADFLOW_VERSION "unknown"
#endif

namespace gradflow {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("config: '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  if (s.empty() || s[0] == '-') throw ConfigError("config: '" + key + "' expects a nonnegative integer");
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string cell;
  while (std::getline(is, cell, ',')) out.push_back(parse_double(key, cell));
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a comma-separated list of numbers");
  return out;
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
  }
  return name != "." && name != "..";
}

constexpr const char* kAffinePrefix = "affine-meanfield:";

bool is_particle_flow(const std::string& id) {
  return id == "langevin" || id == "ai-langevin" || id == "svgd" || id == "ai-svgd" ||
         id.rfind(kAffinePrefix, 0) == 0;
}

std::string integrator_name(const std::string& flow) {
  switch (flow_family(flow)) {
    case FlowFamily::kGaussian: return "rk4";
    case FlowFamily::kGrid: return flow == "grid-fr" ? "heun" : "forward-euler-flux";
    case FlowFamily::kParticle:
      return (flow == "langevin" || flow == "ai-langevin") ? "euler-maruyama" : "forward-euler";
  }
  return "?";
}

TargetDensity build_target(const ExperimentConfig& cfg) {
  if (cfg.target != "linear-gaussian") return make_target(cfg.target, cfg.lambda);
  if (cfg.obs_y.empty() || cfg.obs_H.empty() || cfg.obs_R.empty()) {
    throw ConfigError("linear-gaussian target needs obs_H, obs_R and obs_y");
  }
  const int k = static_cast<int>(cfg.obs_y.size());
  if (cfg.obs_H.size() % k != 0) throw ConfigError("obs_H must have len(obs_y) rows");
  const int d = static_cast<int>(cfg.obs_H.size()) / k;
  if (static_cast<int>(cfg.obs_R.size()) != k * k) throw ConfigError("obs_R must be len(obs_y) x len(obs_y)");
  Matrix H(k, d), R(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < d; ++j) H(i, j) = cfg.obs_H[i * d + j];
    for (int j = 0; j < k; ++j) R(i, j) = cfg.obs_R[i * k + j];
  }
  Vector y = Eigen::Map<const Vector>(cfg.obs_y.data(), k);
  Vector m0 = cfg.m0.empty() ? Vector::Zero(d) : Vector(Eigen::Map<const Vector>(cfg.m0.data(), cfg.m0.size()));
  Matrix C0 = Matrix::Identity(d, d);
  if (!cfg.C0.empty()) {
    if (static_cast<int>(cfg.C0.size()) == d) {
      C0 = Eigen::Map<const Vector>(cfg.C0.data(), d).asDiagonal();
    } else if (static_cast<int>(cfg.C0.size()) == d * d) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) C0(i, j) = cfg.C0[i * d + j];
    }
  }
  return linear_gaussian_target(H, R, y, GaussianState(m0, C0));
}

GaussianState initial_state(const ExperimentConfig& cfg) {
  const int d = static_cast<int>(cfg.m0.size());
  Matrix C(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) C(i, j) = cfg.C0[i * d + j];
  return GaussianState(Eigen::Map<const Vector>(cfg.m0.data(), d), C);
}

ReferenceStats reference_for(const ExperimentConfig& cfg, const TargetDensity& rho) {
  if (rho.dim == 1) return reference_stats_1d(rho, draw_cos_directions(1, cfg.seed));
  if (rho.gaussian) return gaussian_reference(*rho.gaussian, draw_cos_directions(rho.dim, cfg.seed));
  SemianalyticOptions options;
  options.points = cfg.oracle_points;
  if (cfg.oracle_cache.empty()) return reference_stats(cfg.target, cfg.lambda, cfg.seed, options);
  const OracleCache cache(cfg.oracle_cache);
  return reference_stats(cfg.target, cfg.lambda, cfg.seed, options, &cache);
}

Grid1D grid_for(const ExperimentConfig& cfg) { return Grid1D(*cfg.grid_lo, *cfg.grid_hi, cfg.grid_n); }

std::vector<double> flatten_moments(const GaussianState& g) {
  std::vector<double> out(g.mean().data(), g.mean().data() + g.dim());
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j) out.push_back(g.cov()(i, j));
  return out;
}

std::map<std::string, std::string> read_metadata(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out.emplace(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "preset=" << preset << "\n"
     << "target=" << target << "\n"
     << "lambda=" << fmt(lambda) << "\n"
     << "flow=" << flow << "\n"
     << "m0=" << join(m0) << "\n"
     << "C0=" << join(C0) << "\n"
     << "obs_H=" << join(obs_H) << "\n"
     << "obs_R=" << join(obs_R) << "\n"
     << "obs_y=" << join(obs_y) << "\n"
     << "J=" << J << "\n"
     << "dt=" << fmt(dt) << "\n"
     << "t_end=" << fmt(t_end) << "\n"
     << "record_every=" << record_every << "\n"
     << "seed=" << seed << "\n"
     << "grid_lo=" << (grid_lo ? fmt(*grid_lo) : "") << "\n"
     << "grid_hi=" << (grid_hi ? fmt(*grid_hi) : "") << "\n"
     << "grid_n=" << grid_n << "\n"
     << "ut_kappa=" << fmt(ut_kappa) << "\n"
     << "oracle_points=" << oracle_points << "\n";
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig-gaussian", "fig-logconcave", "fig-rosenbrock"};
  return names;
}

void apply_preset(const std::string& name, ExperimentConfig& cfg) {
  cfg.preset = name;
  cfg.J = 100;
  cfg.t_end = 15.0;
  if (name == "fig-gaussian") {
    cfg.target = "gaussian";
    cfg.m0 = {10.0, 10.0};
    cfg.C0 = {0.5, 0.0, 0.0, 2.0};
  } else if (name == "fig-logconcave") {
    cfg.target = "logconcave";
    cfg.m0 = {10.0, 10.0};
    cfg.C0 = {4.0, 0.0, 0.0, 4.0};
  } else if (name == "fig-rosenbrock") {
    cfg.target = "rosenbrock";
    cfg.m0 = {0.0, 0.0};
    cfg.C0 = {4.0, 0.0, 0.0, 4.0};
  } else {
    throw ConfigError("unknown preset '" + name + "' (known: fig-gaussian, fig-logconcave, fig-rosenbrock)");
  }
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "preset") apply_preset(value, cfg);
  else if (key == "target") cfg.target = value;
  else if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "flow") cfg.flow = value;
  else if (key == "m0") cfg.m0 = parse_list(key, value);
  else if (key == "C0") cfg.C0 = parse_list(key, value);
  else if (key == "obs_H") cfg.obs_H = parse_list(key, value);
  else if (key == "obs_R") cfg.obs_R = parse_list(key, value);
  else if (key == "obs_y") cfg.obs_y = parse_list(key, value);
  else if (key == "J") cfg.J = static_cast<int>(parse_long(key, value));
  else if (key == "dt") cfg.dt = parse_double(key, value);
  else if (key == "t_end") cfg.t_end = parse_double(key, value);
  else if (key == "record_every") cfg.record_every = parse_long(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "grid_lo") cfg.grid_lo = parse_double(key, value);
  else if (key == "grid_hi") cfg.grid_hi = parse_double(key, value);
  else if (key == "grid_n") cfg.grid_n = static_cast<int>(parse_long(key, value));
  else if (key == "ut_kappa") cfg.ut_kappa = parse_double(key, value);
  else if (key == "oracle_points") cfg.oracle_points = parse_long(key, value);
  else if (key == "oracle_cache") cfg.oracle_cache = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<ExperimentConfig> parse_config(const std::string& text) {
  using Pairs = std::vector<std::pair<std::string, std::string>>;
  struct Section {
    std::string name;
    Pairs pairs;
  };
  Pairs globals;
  std::vector<Section> sections;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      const std::string inner = trim(line.substr(1, line.size() - 2));
      const std::string prefix = "experiment";
      if (inner.rfind(prefix, 0) != 0 || inner.size() <= prefix.size() || !std::isspace(static_cast<unsigned char>(inner[prefix.size()]))) {
        throw ConfigError("config line " + std::to_string(lineno) + ": sections are written [experiment <name>]");
      }
      const std::string name = trim(inner.substr(prefix.size()));
      if (!valid_name(name)) {
        throw ConfigError("config line " + std::to_string(lineno) + ": experiment name '" + name +
                          "' may use only letters, digits, '-', '_' and '.'");
      }
      for (const auto& s : sections) {
        if (s.name == name) throw ConfigError("config: duplicate experiment '" + name + "'");
      }
      sections.push_back({name, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    (sections.empty() ? globals : sections.back().pairs).emplace_back(key, value);
  }

  auto build = [&](const std::string& name, const Pairs& local) {
    ExperimentConfig cfg;
    cfg.name = name;
    std::string preset;
    for (const auto& [k, v] : globals)
      if (k == "preset") preset = v;
    for (const auto& [k, v] : local)
      if (k == "preset") preset = v;
    if (!preset.empty()) apply_preset(preset, cfg);
    for (const Pairs* pairs : std::initializer_list<const Pairs*>{&globals, &local}) {
      for (const auto& [k, v] : *pairs) {
        if (k != "preset") set_config_value(cfg, k, v);
      }
    }
    return cfg;
  };

  std::vector<ExperimentConfig> out;
  if (sections.empty()) {
    out.push_back(build("default", {}));
  } else {
    for (const auto& s : sections) out.push_back(build(s.name, s.pairs));
  }
  return out;
}

std::vector<ExperimentConfig> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

FlowFamily flow_family(const std::string& flow_id) {
  if (flow_id == "grid-fr" || flow_id == "grid-fp") return FlowFamily::kGrid;
  if (is_particle_flow(flow_id)) return FlowFamily::kParticle;
  (void)GaussianFlowKind::parse(flow_id);
  return FlowFamily::kGaussian;
}

ExperimentConfig resolve_config(const ExperimentConfig& raw) {
  ExperimentConfig cfg = raw;
  try {
    const FlowFamily family = flow_family(cfg.flow);
    if (cfg.flow.rfind(kAffinePrefix, 0) == 0) {
      const auto kind = GaussianFlowKind::parse(cfg.flow.substr(std::string(kAffinePrefix).size()));
      if (kind.id == GaussianFlowId::kPlainGd || kind.id == GaussianFlowId::kKalmanBucy) {
        throw ConfigError("flow '" + cfg.flow + "': " + kind.name() + " has no affine mean-field form");
      }
    }
    const TargetDensity rho = build_target(cfg);
    const int d = rho.dim;
    if (cfg.flow == "kalman-bucy" && !rho.linear_model) {
      throw ConfigError("flow 'kalman-bucy' needs target 'linear-gaussian'");
    }
    if (std::isnan(cfg.ut_kappa)) cfg.ut_kappa = default_ut_kappa(d);
    if (cfg.m0.empty()) cfg.m0.assign(d, 0.0);
    if (static_cast<int>(cfg.m0.size()) != d) {
      throw ConfigError("m0 has " + std::to_string(cfg.m0.size()) + " entries; target '" + cfg.target +
                        "' has dimension " + std::to_string(d));
    }
    if (cfg.C0.empty()) {
      cfg.C0.assign(d * d, 0.0);
      for (int i = 0; i < d; ++i) cfg.C0[i * d + i] = 1.0;
    } else if (static_cast<int>(cfg.C0.size()) == d && d > 1) {
      std::vector<double> full(d * d, 0.0);
      for (int i = 0; i < d; ++i) full[i * d + i] = cfg.C0[i];
      cfg.C0 = full;
    }
    if (static_cast<int>(cfg.C0.size()) != d * d) {
      throw ConfigError("C0 needs " + std::to_string(d) + " (diagonal) or " + std::to_string(d * d) + " entries");
    }
    try {
      (void)initial_state(cfg);
    } catch (const Error& e) {
      throw ConfigError(std::string("C0 is not a valid covariance: ") + e.what());
    }
    if (family == FlowFamily::kParticle && cfg.J < 2) throw ConfigError("particle flows need J >= 2");
    if (family == FlowFamily::kGrid) {
      if (d != 1) throw ConfigError("grid flows need a one-dimensional target; '" + cfg.target + "' is " + std::to_string(d) + "D");
      if (cfg.grid_n < 3) throw ConfigError("grid_n must be at least 3");
      if (!cfg.grid_lo || !cfg.grid_hi) {
        const ReferenceStats ref = reference_stats_1d(rho, {});
        const Grid1D g = Grid1D::around(ref.mean[0], std::sqrt(ref.cov(0, 0)), cfg.grid_n);
        if (!cfg.grid_lo) cfg.grid_lo = g.lo;
        if (!cfg.grid_hi) cfg.grid_hi = g.hi;
      }
      (void)grid_for(cfg);
    }
    if (std::isnan(cfg.dt)) {
      switch (family) {
        case FlowFamily::kGaussian: cfg.dt = 1e-3; break;
        case FlowFamily::kParticle: cfg.dt = 1e-2; break;
        case FlowFamily::kGrid: {
          const double dx = grid_for(cfg).dx();
          cfg.dt = cfg.flow == "grid-fr" ? 1e-3 : 0.25 * dx * dx;
          break;
        }
      }
    }
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be positive");
    if (!(cfg.t_end >= cfg.dt)) throw ConfigError("t_end must be at least dt");
    if (cfg.record_every == 0) cfg.record_every = std::max(1L, std::lround(0.1 / cfg.dt));
    if (cfg.record_every < 1) throw ConfigError("record_every must be positive");
    if (cfg.oracle_points < 1000) throw ConfigError("oracle_points must be at least 1000");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunResult run_experiment(const ExperimentConfig& raw) {
  RunResult result;
  result.config = resolve_config(raw);
  const ExperimentConfig& cfg = result.config;
  result.integrator = integrator_name(cfg.flow);
  const TargetDensity rho = build_target(cfg);
  const GaussianState g0 = initial_state(cfg);
  const long steps = std::max(1L, std::lround(cfg.t_end / cfg.dt));
  long step = 0;

  auto record = [&](long n, ErrorTriple errors, std::vector<double> moments = {}) {
    if (!std::isfinite(errors.mean_err) || !std::isfinite(errors.cov_err) || !std::isfinite(errors.cos_err)) {
      throw NonFiniteError("moments overflowed at step " + std::to_string(n));
    }
    result.rows.push_back({n, static_cast<double>(n) * cfg.dt, std::move(errors), std::move(moments)});
  };
  auto due = [&](long n) { return n % cfg.record_every == 0 || n == steps; };

  try {
    const ReferenceStats ref = reference_for(cfg, rho);
    switch (flow_family(cfg.flow)) {
      case FlowFamily::kGaussian: {
        const auto kind = GaussianFlowKind::parse(cfg.flow);
        MomentIntegrator integ;
        integ.dt = cfg.dt;
        integ.quad.kappa = cfg.ut_kappa;
        GaussianState g = g0;
        record(0, error_triple(g, ref), flatten_moments(g));
        for (step = 1; step <= steps; ++step) {
          g = rk4_step(kind, g, rho, integ);
          if (due(step)) record(step, error_triple(g, ref), flatten_moments(g));
        }
        break;
      }
      case FlowFamily::kParticle: {
        const NoiseStream noise(cfg.seed);
        Ensemble e = sample_ensemble(g0, cfg.J, noise);
        std::optional<GaussianFlowKind> affine;
        if (cfg.flow.rfind(kAffinePrefix, 0) == 0) {
          affine = GaussianFlowKind::parse(cfg.flow.substr(std::string(kAffinePrefix).size()));
        }
        MomentQuadrature quad;
        quad.kappa = cfg.ut_kappa;
        record(0, error_triple(e, ref));
        for (step = 1; step <= steps; ++step) {
          const std::uint64_t noise_step = static_cast<std::uint64_t>(step - 1);
          if (cfg.flow == "langevin") {
            e = langevin_step(e, rho, cfg.dt, noise, noise_step);
          } else if (cfg.flow == "ai-langevin") {
            e = ai_langevin_step(e, rho, cfg.dt, noise, noise_step);
          } else if (cfg.flow == "svgd") {
            e = svgd_step(e, rho, KernelSpec::rbf_median(), cfg.dt);
          } else if (cfg.flow == "ai-svgd") {
            e = ai_svgd_step(e, rho, cfg.dt);
          } else {
            const GaussianState g = empirical_moments(e).to_gaussian();
            e = affine_meanfield_step(e, affine_drift(*affine, g, rho, quad), g.mean(), cfg.dt);
          }
          if (due(step)) record(step, error_triple(e, ref));
        }
        break;
      }
      case FlowFamily::kGrid: {
        const Grid1D grid = grid_for(cfg);
        const Vector log_post = log_target_on_grid(grid, rho);
        const TargetDensity init = normal_1d_target(g0.mean()[0], g0.cov()(0, 0));
        GridDensity d = GridDensity::from_target(grid, init);
        record(0, error_triple(d, ref));
        for (step = 1; step <= steps; ++step) {
          d = cfg.flow == "grid-fr" ? fr_flow_step(d, log_post, cfg.dt) : wasserstein_fp_step(d, log_post, cfg.dt);
          if (due(step)) record(step, error_triple(d, ref));
        }
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    result.failed = true;
    result.failure_step = step;
    result.failure = e.what();
  }
  return result;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv(const RunResult& result, std::ostream& out) {
  const ExperimentConfig& cfg = result.config;
  const bool gaussian = flow_family(cfg.flow) == FlowFamily::kGaussian;
  const int d = static_cast<int>(cfg.m0.size());
  out << "t,mean_err,cov_err,cos_err";
  if (gaussian) {
    for (int i = 1; i <= d; ++i) out << ",m_" << i;
    for (int i = 1; i <= d; ++i)
      for (int j = 1; j <= d; ++j) out << ",C_" << i << j;
  }
  out << ",status\n";
  for (const auto& row : result.rows) {
    out << fmt(row.t) << ',' << fmt(row.errors.mean_err) << ',' << fmt(row.errors.cov_err) << ','
        << fmt(row.errors.cos_err);
    for (double v : row.moments) out << ',' << fmt(v);
    out << ",ok\n";
  }
  if (result.failed) {
    out << fmt(static_cast<double>(result.failure_step) * cfg.dt) << ",,,";
    if (gaussian) out << std::string(d + d * d, ',');
    out << ',' << csv_field("failed: " + result.failure) << '\n';
  }
}

void write_metadata(const RunResult& result, std::ostream& out) {
  const ExperimentConfig& cfg = result.config;
  std::string failure = result.failure;
  for (char& c : failure)
    if (c == '\n' || c == '\r') c = ' ';
  out << "config_hash=" << cfg.hash() << "\n"
      << "seed=" << cfg.seed << "\n"
      << "version=" << GRADFLOW_VERSION << "\n"
      << "integrator=" << result.integrator << "\n"
      << "dt=" << fmt(cfg.dt) << "\n"
      << "name=" << cfg.name << "\n"
      << "status=" << (result.failed ? "failed" : "ok") << "\n";
  if (result.failed) out << "failure=" << failure << "\n";
  std::istringstream lines(cfg.canonical());
  std::string line;
  while (std::getline(lines, line)) out << "config." << line << "\n";
}

int run_to_files(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const RunResult result = run_experiment(cfg);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  {
    std::ofstream csv(out, std::ios::binary);
    if (!csv) throw ConfigError("cannot write " + out.string());
    write_csv(result, csv);
  }
  {
    std::ofstream meta(out.string() + ".meta", std::ios::binary);
    if (!meta) throw ConfigError("cannot write " + out.string() + ".meta");
    write_metadata(result, meta);
  }
  return result.exit_code();
}

int sweep(const std::vector<ExperimentConfig>& configs, const std::filesystem::path& dir,
          std::vector<SweepEntry>* entries) {
  std::vector<ExperimentConfig> resolved;
  for (const auto& cfg : configs) {
    if (!valid_name(cfg.name)) throw ConfigError("experiment name '" + cfg.name + "' is not a valid file name");
    resolved.push_back(resolve_config(cfg));
  }
  std::filesystem::create_directories(dir);
  std::vector<SweepEntry> done;
  int worst = 0;
  for (const auto& cfg : resolved) {
    SweepEntry entry;
    entry.name = cfg.name;
    entry.hash = cfg.hash();
    entry.csv = dir / (cfg.name + ".csv");
    const auto meta = read_metadata(entry.csv.string() + ".meta");
    const auto h = meta.find("config_hash");
    const auto s = meta.find("status");
    if (std::filesystem::exists(entry.csv) && h != meta.end() && h->second == entry.hash && s != meta.end() &&
        s->second == "ok") {
      entry.status = "cached";
    } else {
      entry.exit_code = run_to_files(cfg, entry.csv);
      entry.status = entry.exit_code == 0 ? "ok" : "failed";
    }
    worst = std::max(worst, entry.exit_code);
    done.push_back(entry);
  }
  std::ofstream index(dir / "index.csv", std::ios::binary);
  if (!index) throw ConfigError("cannot write " + (dir / "index.csv").string());
  index << "name,config_hash,csv,status,exit_code\n";
  for (const auto& e : done) {
    index << csv_field(e.name) << ',' << e.hash << ',' << csv_field(e.csv.filename().string()) << ',' << e.status
          << ',' << e.exit_code << '\n';
  }
  if (entries) *entries = done;
  return worst;
}

}  // namespace gradflow
