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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gradflow/gaussian_flows.hpp"
#include "gradflow/runner.hpp"

using namespace gradflow;

namespace {

std::string csv_of(const RunResult& r) {
  std::ostringstream os;
  write_csv(r, os);
  return os.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig quick(const std::string& flow) {
  ExperimentConfig cfg;
  apply_preset("fig-gaussian", cfg);
  cfg.flow = flow;
  cfg.t_end = 1.0;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing with sections and globals") {
  const auto cfgs = parse_config(
      "# shared settings\n"
      "preset = fig-rosenbrock\n"
      "lambda = 0.1\n"
      "\n"
      "[experiment fr]\n"
      "flow = fisher-rao\n"
      "[experiment svgd_small]\n"
      "flow = svgd\n"
      "J = 20\n"
      "lambda = 1\n");
  REQUIRE(cfgs.size() == 2);
  CHECK(cfgs[0].name == "fr");
  CHECK(cfgs[0].target == "rosenbrock");
  CHECK(cfgs[0].lambda == 0.1);
  CHECK(cfgs[0].J == 100);
  CHECK(cfgs[1].flow == "svgd");
  CHECK(cfgs[1].J == 20);
  CHECK(cfgs[1].lambda == 1.0);
  CHECK(cfgs[1].C0 == std::vector<double>{4, 0, 0, 4});

  const auto single = parse_config("flow = wasserstein\n");
  REQUIRE(single.size() == 1);
  CHECK(single[0].name == "default");
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("nonsense = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lambda = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment a]\n[experiment a]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment a/b]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run a]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lambda\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("preset = fig-unknown\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/gradflow.cfg"), ConfigError);
}

TEST_CASE("resolve_config fills defaults and validates") {
  ExperimentConfig cfg = quick("fisher-rao");
  const ExperimentConfig r = resolve_config(cfg);
  CHECK(r.dt == 1e-3);
  CHECK(r.record_every == 100);
  CHECK(flow_family("langevin") == FlowFamily::kParticle);
  CHECK(flow_family("grid-fp") == FlowFamily::kGrid);
  CHECK(flow_family("stein-bilinear:galy-flexible") == FlowFamily::kGaussian);
  CHECK(resolve_config(quick("svgd")).dt == 1e-2);

  ExperimentConfig bad = quick("langevin");
  bad.J = 1;
  CHECK_THROWS_AS(resolve_config(bad), ConfigError);
  CHECK_THROWS_AS(resolve_config(quick("kalman-bucy")), ConfigError);
  CHECK_THROWS_AS(resolve_config(quick("affine-meanfield:plain-gd")), ConfigError);
  CHECK_THROWS_AS(resolve_config(quick("gradient-ascent")), ConfigError);
  bad = quick("fisher-rao");
  bad.m0 = {1.0};
  CHECK_THROWS_AS(resolve_config(bad), ConfigError);
  bad = quick("fisher-rao");
  bad.C0 = {1.0, 2.0, 2.0, 1.0};
  CHECK_THROWS_AS(resolve_config(bad), ConfigError);

  ExperimentConfig grid;
  grid.target = "bimodal-1d";
  grid.flow = "grid-fp";
  grid.grid_lo = -10.0;
  grid.grid_hi = 10.0;
  grid.grid_n = 201;
  const ExperimentConfig g = resolve_config(grid);
  CHECK(g.dt == doctest::Approx(0.25 * 0.01));
}

TEST_CASE("config hash ignores name and output path only") {
  ExperimentConfig a = quick("fisher-rao"), b = a;
  b.name = "other";
  b.out = "elsewhere.csv";
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.lambda = 0.5;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("gaussian run reproduces the analytic trajectory") {
  const RunResult r = run_experiment(quick("fisher-rao"));
  REQUIRE_FALSE(r.failed);
  REQUIRE(r.rows.size() == 11);
  CHECK(r.integrator == "rk4");
  const TargetDensity rho = gaussian_target(1.0);
  Vector m0(2);
  m0 << 10, 10;
  Matrix C0 = Matrix::Zero(2, 2);
  C0(0, 0) = 0.5;
  C0(1, 1) = 2.0;
  const GaussianState exact = analytic_fr_solution(GaussianState(m0, C0), rho.gaussian->mean(), rho.gaussian->cov(), 1.0);
  CHECK(r.rows.back().t == doctest::Approx(1.0));
  CHECK(r.rows.back().errors.mean_err == doctest::Approx(exact.mean().norm()).epsilon(1e-10));
  CHECK(r.rows.back().moments.size() == 6);
}

TEST_CASE("CSV output is RFC 4180 with LF line endings") {
  const std::string csv = csv_of(run_experiment(quick("fisher-rao")));
  CHECK(csv.rfind("t,mean_err,cov_err,cos_err,m_1,m_2,C_11,C_12,C_21,C_22,status\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.back() == '\n');
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,\"b") == "\"a,\"\"b\"");
  CHECK(csv_field("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("stochastic runs are reproducible from the seed") {
  ExperimentConfig cfg = quick("ai-langevin");
  cfg.t_end = 0.5;
  const std::string a = csv_of(run_experiment(cfg));
  const std::string b = csv_of(run_experiment(cfg));
  CHECK(a == b);
  cfg.seed = 4;
  CHECK(csv_of(run_experiment(cfg)) != a);
}

TEST_CASE("numerical failure is reported in CSV, metadata and exit code") {
  ExperimentConfig cfg;
  cfg.target = "rosenbrock";
  cfg.flow = "langevin";
  cfg.dt = 50.0;
  cfg.t_end = 500.0;
  const RunResult r = run_experiment(cfg);
  CHECK(r.failed);
  CHECK(r.exit_code() == 3);
  const std::string csv = csv_of(r);
  CHECK(csv.find(",failed: ") != std::string::npos);
  CHECK(csv.find("inf") == std::string::npos);
  std::ostringstream meta;
  write_metadata(r, meta);
  CHECK(meta.str().find("status=failed\n") != std::string::npos);
}

TEST_CASE("metadata sidecar") {
  const RunResult r = run_experiment(quick("wasserstein"));
  std::ostringstream meta;
  write_metadata(r, meta);
  const std::string s = meta.str();
  CHECK(s.find("config_hash=" + r.config.hash() + "\n") != std::string::npos);
  CHECK(s.find("seed=3\n") != std::string::npos);
  CHECK(s.find("integrator=rk4\n") != std::string::npos);
  CHECK(s.find("config.flow=wasserstein\n") != std::string::npos);
}

TEST_CASE("sweep writes an index and skips up-to-date outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "gradflow_sweep_test";
  std::filesystem::remove_all(dir);
  auto cfgs = parse_config(
      "preset = fig-gaussian\n"
      "t_end = 0.5\n"
      "[experiment fr]\nflow = fisher-rao\n"
      "[experiment w]\nflow = wasserstein\n");
  std::vector<SweepEntry> first, second;
  CHECK(sweep(cfgs, dir, &first) == 0);
  REQUIRE(first.size() == 2);
  CHECK(first[0].status == "ok");
  CHECK(std::filesystem::exists(dir / "fr.csv.meta"));
  CHECK(slurp(dir / "index.csv").rfind("name,config_hash,csv,status,exit_code\n", 0) == 0);
  const std::string before = slurp(dir / "w.csv");
  CHECK(sweep(cfgs, dir, &second) == 0);
  CHECK(second[0].status == "cached");
  CHECK(second[1].status == "cached");
  CHECK(slurp(dir / "w.csv") == before);
  // A changed config reruns only that experiment.
  cfgs[1].lambda = 0.5;
  CHECK(sweep(cfgs, dir, &second) == 0);
  CHECK(second[0].status == "cached");
  CHECK(second[1].status == "ok");
  // An invalid experiment aborts before anything runs.
  cfgs[0].flow = "nope";
  CHECK_THROWS_AS(sweep(cfgs, dir), ConfigError);
  std::filesystem::remove_all(dir);
}
