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

#include "gradflow/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gradflow/kernels.hpp"
#include "gradflow/noise.hpp"

namespace gradflow {

namespace {

// Posterior written as p(x) N(inner | mu(x), s2) with x the outer coordinate.
struct Factorization {
  int outer = 0;
  int inner = 1;
  double center = 0.0;
  double sd = 1.0;
  double inner_var = 1.0;
  std::function<double(double)> log_weight;
  std::function<double(double)> inner_mean;
};

Factorization factorize(const std::string& id, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("reference stats: lambda must be positive");
  Factorization f;
  f.inner_var = 10.0 / lambda;
  if (id == "rosenbrock") {
    // theta1 ~ N(1, 10), theta2 | theta1 ~ N(theta1^2, 10 / lambda).
    f.outer = 0;
    f.inner = 1;
    f.center = 1.0;
    f.sd = std::sqrt(10.0);
    f.log_weight = [](double x) { return -(1.0 - x) * (1.0 - x) / 20.0; };
    f.inner_mean = [](double x) { return x * x; };
    return f;
  }
  if (id == "logconcave") {
    // theta2 ~ exp(-theta2^4 / 20), theta1 | theta2 ~ N(theta2 / sqrt(lambda), 10 / lambda).
    const double s = std::sqrt(lambda);
    f.outer = 1;
    f.inner = 0;
    f.center = 0.0;
    f.sd = std::sqrt(std::sqrt(20.0) * std::tgamma(0.75) / std::tgamma(0.25));
    f.log_weight = [](double x) { return -x * x * x * x / 20.0; };
    f.inner_mean = [s](double x) { return x / s; };
    return f;
  }
  throw ConfigError("semi-analytic reference stats exist for 'logconcave' and 'rosenbrock', not '" + id + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

ReferenceStats reference_stats_semianalytic(const std::string& target_id, double lambda,
                                            const std::vector<CosDirection>& draws,
                                            const SemianalyticOptions& options) {
  if (target_id == "gaussian") return gaussian_reference(*gaussian_target(lambda).gaussian, draws);
  const Factorization f = factorize(target_id, lambda);
  if (options.points < 1000) throw ConfigError("reference stats: need at least 1000 outer points");
  const double half = options.half_widths * f.sd;
  const double lo = f.center - half;
  const double hi = f.center + half;
  const double edge = 0.9 * half;
  const int ncos = static_cast<int>(draws.size());
  for (const auto& d : draws) {
    if (d.omega.size() != 2) throw DimensionError("reference stats: cosine directions must be 2D");
  }
  constexpr int kFixed = 7;  // w, w x, w x^2, w mu, w (mu^2 + s2), w x mu, tail
  const double s2 = f.inner_var;
  const auto sums = kernels::trapezoid_sum(lo, hi, options.points, kFixed + ncos, [&](double x, double* out) {
    const double w = std::exp(f.log_weight(x));
    const double mu = f.inner_mean(x);
    out[0] = w;
    out[1] = w * x;
    out[2] = w * x * x;
    out[3] = w * mu;
    out[4] = w * (mu * mu + s2);
    out[5] = w * x * mu;
    out[6] = std::abs(x - f.center) > edge ? w : 0.0;
    for (int k = 0; k < ncos; ++k) {
      const double wo = draws[k].omega[f.outer];
      const double wi = draws[k].omega[f.inner];
      out[kFixed + k] = w * std::exp(-0.5 * wi * wi * s2) * std::cos(wo * x + wi * mu + draws[k].phase);
    }
  });
  const double Z = sums[0];
  if (!(Z > 0.0) || !std::isfinite(Z)) throw MethodError("reference stats: outer integral vanished");
  const double tail = sums[6] / Z;
  if (tail > options.tail_tolerance) {
    std::ostringstream os;
    os << "reference stats: window too small for " << target_id << " (mass " << tail
       << " near the window edge exceeds " << options.tail_tolerance << "); increase half_widths";
    throw MethodError(os.str());
  }
  const double ex = sums[1] / Z;
  const double emu = sums[3] / Z;
  ReferenceStats r;
  r.mean = Vector::Zero(2);
  r.mean[f.outer] = ex;
  r.mean[f.inner] = emu;
  r.cov = Matrix::Zero(2, 2);
  r.cov(f.outer, f.outer) = sums[2] / Z - ex * ex;
  r.cov(f.inner, f.inner) = sums[4] / Z - emu * emu;
  r.cov(f.outer, f.inner) = sums[5] / Z - ex * emu;
  r.cov(f.inner, f.outer) = r.cov(f.outer, f.inner);
  for (int k = 0; k < ncos; ++k) r.cos_moments.push_back({draws[k].omega, draws[k].phase, sums[kFixed + k] / Z});
  return r;
}

ReferenceStats reference_stats_1d(const TargetDensity& rho, const std::vector<CosDirection>& draws, long points) {
  if (rho.dim != 1) throw DimensionError("reference_stats_1d: target '" + rho.name + "' is not one-dimensional");
  if (rho.gaussian) return gaussian_reference(*rho.gaussian, draws);
  const int ncos = static_cast<int>(draws.size());
  auto moments = [&](double lo, double hi, double log_peak) {
    return kernels::trapezoid_sum(lo, hi, points, 3 + ncos, [&](double x, double* out) {
      const double w = std::exp(rho.log_density(Vector::Constant(1, x)) - log_peak);
      out[0] = w;
      out[1] = w * x;
      out[2] = w * x * x;
      for (int k = 0; k < ncos; ++k) out[3 + k] = w * std::cos(draws[k].omega[0] * x + draws[k].phase);
    });
  };
  // A coarse scan locates the bulk; the second pass integrates on mean +- 12 sd.
  double lo = -50.0, hi = 50.0, log_peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10000; ++i) {
    log_peak = std::max(log_peak, rho.log_density(Vector::Constant(1, lo + (hi - lo) * i / 10000.0)));
  }
  auto sums = moments(lo, hi, log_peak);
  double mean = sums[1] / sums[0];
  double sd = std::sqrt(std::max(sums[2] / sums[0] - mean * mean, 1e-300));
  lo = mean - 12.0 * sd;
  hi = mean + 12.0 * sd;
  sums = moments(lo, hi, log_peak);
  const double Z = sums[0];
  if (!(Z > 0.0) || !std::isfinite(Z)) throw MethodError("reference_stats_1d: normalizing integral failed");
  mean = sums[1] / Z;
  ReferenceStats r;
  r.mean = Vector::Constant(1, mean);
  r.cov = Matrix::Constant(1, 1, sums[2] / Z - mean * mean);
  for (int k = 0; k < ncos; ++k) r.cos_moments.push_back({draws[k].omega, draws[k].phase, sums[3 + k] / Z});
  return r;
}

std::vector<double> sample_quartic_marginal(long n, std::uint64_t seed, double proposal_sd, double* acceptance_rate) {
  if (!(proposal_sd > 0.0)) throw ConfigError("sample_quartic_marginal: proposal_sd must be positive");
  const NoiseStream stream(seed, NoiseStream::Tag::kMonteCarlo);
  // log f/g = -x^4/20 + x^2/(2 s^2) peaks at x^2 = 5 / s^2 with value 1.25 / s^4.
  const double s2 = proposal_sd * proposal_sd;
  const double log_bound = 1.25 / (s2 * s2);
  std::vector<double> out;
  out.reserve(n);
  std::uint64_t attempts = 0;
  constexpr std::uint64_t kFirstStep = 1000;
  while (static_cast<long>(out.size()) < n) {
    const std::uint64_t step = kFirstStep + attempts++;
    const double x = proposal_sd * stream.gaussian(step, 0, 1)[0];
    const double u = stream.uniform(step, 1, 1)[0];
    if (std::log(u) < -x * x * x * x / 20.0 + x * x / (2.0 * s2) - log_bound) out.push_back(x);
    if (attempts >= 1'000'000 && static_cast<double>(out.size()) < 1e-4 * static_cast<double>(attempts)) {
      std::ostringstream os;
      os << "rejection sampler: acceptance rate " << static_cast<double>(out.size()) / attempts
         << " is below 1e-4; choose a proposal closer to the target";
      throw MethodError(os.str());
    }
  }
  if (acceptance_rate) *acceptance_rate = static_cast<double>(n) / static_cast<double>(attempts);
  return out;
}

McEstimate mc_oracle(const std::string& target_id, double lambda, long n, std::uint64_t seed,
                     const std::vector<CosDirection>& draws) {
  if (n < 100000) throw ConfigError("mc_oracle: need at least 1e5 samples");
  const NoiseStream stream(seed, NoiseStream::Tag::kMonteCarlo);
  ParticleMatrix X(n, 2);
  McEstimate est;
  if (target_id == "gaussian") {
    const GaussianState g = *gaussian_target(lambda).gaussian;
    const Matrix L = spd_factor(g.cov());
    X = (stream.gaussian_matrix(0, static_cast<int>(n), 2) * L.transpose()).rowwise() + g.mean().transpose();
  } else if (target_id == "rosenbrock") {
    const ParticleMatrix Z = stream.gaussian_matrix(0, static_cast<int>(n), 2);
    const double s = std::sqrt(10.0 / lambda);
    for (long i = 0; i < n; ++i) {
      const double t1 = 1.0 + std::sqrt(10.0) * Z(i, 0);
      X(i, 0) = t1;
      X(i, 1) = t1 * t1 + s * Z(i, 1);
    }
  } else if (target_id == "logconcave") {
    const std::vector<double> t2 = sample_quartic_marginal(n, seed, 1.3, &est.acceptance_rate);
    const ParticleMatrix Z = stream.gaussian_matrix(0, static_cast<int>(n), 1);
    const double root = std::sqrt(lambda);
    const double s = std::sqrt(10.0 / lambda);
    for (long i = 0; i < n; ++i) {
      X(i, 1) = t2[i];
      X(i, 0) = t2[i] / root + s * Z(i, 0);
    }
  } else {
    throw ConfigError("mc_oracle: unknown target '" + target_id + "'");
  }

  const double dn = static_cast<double>(n);
  const double root_n = std::sqrt(dn);
  auto mean_and_se = [&](const std::function<double(long)>& f, double& mean, double& se) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += f(i);
    mean = acc / dn;
    double ss = 0.0;
    for (long i = 0; i < n; ++i) {
      const double r = f(i) - mean;
      ss += r * r;
    }
    se = std::sqrt(ss / (dn - 1.0)) / root_n;
  };

  ReferenceStats& r = est.stats;
  r.mean = Vector::Zero(2);
  est.mean_se = Vector::Zero(2);
  for (int a = 0; a < 2; ++a) mean_and_se([&](long i) { return X(i, a); }, r.mean[a], est.mean_se[a]);
  r.cov = Matrix::Zero(2, 2);
  est.cov_se = Matrix::Zero(2, 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = a; b < 2; ++b) {
      mean_and_se([&](long i) { return (X(i, a) - r.mean[a]) * (X(i, b) - r.mean[b]); }, r.cov(a, b),
                  est.cov_se(a, b));
      r.cov(b, a) = r.cov(a, b);
      est.cov_se(b, a) = est.cov_se(a, b);
    }
  }
  for (const auto& d : draws) {
    double v = 0.0, se = 0.0;
    mean_and_se([&](long i) { return std::cos(d.omega[0] * X(i, 0) + d.omega[1] * X(i, 1) + d.phase); }, v, se);
    r.cos_moments.push_back({d.omega, d.phase, v});
    est.cos_se.push_back(se);
  }
  return est;
}

void write_reference_stats(const ReferenceStats& stats, std::ostream& out) {
  out << "quantity,i,j,value\n";
  out << "version,0,0," << OracleCache::kVersion << "\n";
  for (int i = 0; i < stats.mean.size(); ++i) out << "mean," << i << ",0," << format_double(stats.mean[i]) << "\n";
  for (int i = 0; i < stats.cov.rows(); ++i) {
    for (int j = 0; j < stats.cov.cols(); ++j) {
      out << "cov," << i << "," << j << "," << format_double(stats.cov(i, j)) << "\n";
    }
  }
  for (std::size_t k = 0; k < stats.cos_moments.size(); ++k) {
    const auto& c = stats.cos_moments[k];
    for (int j = 0; j < c.omega.size(); ++j) {
      out << "cos_omega," << k << "," << j << "," << format_double(c.omega[j]) << "\n";
    }
    out << "cos_phase," << k << ",0," << format_double(c.phase) << "\n";
    out << "cos_value," << k << ",0," << format_double(c.value) << "\n";
  }
}

std::string OracleKey::file_name() const {
  std::ostringstream os;
  os << target << "_lam" << format_double(lambda) << "_seed" << seed << "_w" << format_double(half_widths) << "_n"
     << points << ".csv";
  return os.str();
}

std::optional<ReferenceStats> OracleCache::load(const OracleKey& key) const {
  std::ifstream in(path(key));
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "quantity,i,j,value") return std::nullopt;
  ReferenceStats r;
  r.mean = Vector::Zero(2);
  r.cov = Matrix::Zero(2, 2);
  bool version_ok = false;
  try {
    while (std::getline(in, line)) {
      const auto cells = split_csv_line(line);
      if (cells.size() != 4) return std::nullopt;
      const std::string& q = cells[0];
      const int i = std::stoi(cells[1]);
      const int j = std::stoi(cells[2]);
      const double v = std::stod(cells[3]);
      if (q == "version") {
        version_ok = static_cast<int>(v) == kVersion;
      } else if (q == "mean" && i >= 0 && i < 2) {
        r.mean[i] = v;
      } else if (q == "cov" && i >= 0 && i < 2 && j >= 0 && j < 2) {
        r.cov(i, j) = v;
      } else if (q == "cos_omega" || q == "cos_phase" || q == "cos_value") {
        if (i < 0 || i > static_cast<int>(r.cos_moments.size())) return std::nullopt;
        if (i == static_cast<int>(r.cos_moments.size())) r.cos_moments.push_back({Vector::Zero(2), 0.0, 0.0});
        CosMoment& c = r.cos_moments[i];
        if (q == "cos_omega" && j >= 0 && j < 2) c.omega[j] = v;
        if (q == "cos_phase") c.phase = v;
        if (q == "cos_value") c.value = v;
      } else {
        return std::nullopt;
      }
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!version_ok) return std::nullopt;
  return r;
}

void OracleCache::store(const OracleKey& key, const ReferenceStats& stats) const {
  std::filesystem::create_directories(dir_);
  const auto final_path = path(key);
  const auto tmp_path = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp_path, std::ios::binary);
    if (!out) throw ConfigError("oracle cache: cannot write " + tmp_path);
    write_reference_stats(stats, out);
  }
  std::filesystem::rename(tmp_path, final_path);
}

ReferenceStats reference_stats(const std::string& target_id, double lambda, std::uint64_t seed,
                               const SemianalyticOptions& options, const OracleCache* cache) {
  const auto draws = draw_cos_directions(2, seed);
  if (target_id == "gaussian") return gaussian_reference(*gaussian_target(lambda).gaussian, draws);
  const OracleKey key{target_id, lambda, seed, options.half_widths, options.points};
  if (cache) {
    if (auto hit = cache->load(key)) return *hit;
  }
  ReferenceStats r = reference_stats_semianalytic(target_id, lambda, draws, options);
  if (cache) cache->store(key, r);
  return r;
}

}  // namespace gradflow
