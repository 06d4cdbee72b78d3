#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "odcbf/scenario.hpp"

using namespace odcbf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("odcbf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> di_kv(const std::string& method) {
  return {{"scenario", "double-integrator"}, {"method", method}};
}

}  // namespace

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text(
      "# comment\n"
      "scenario = double-integrator  # trailing comment\n"
      "method=od-hocbf\n"
      "\n"
      "dt = 1e-3\n"
      "dt = 2e-3\n");
  CHECK(kv.at("scenario") == "double-integrator");
  CHECK(kv.at("method") == "od-hocbf");
  CHECK(kv.at("dt") == "2e-3");  // later duplicates win

  CHECK_THROWS_AS(parse_config_text("not a key value line\n"), ConfigError);
}

TEST_CASE("default double-integrator configuration") {
  const ScenarioConfig cfg = resolve_config(di_kv("od-hocbf"));
  CHECK(cfg.alpha1 == 2.0);
  CHECK(cfg.alpha2 == 2.0);
  CHECK(cfg.eps == 0.1);
  CHECK(cfg.c1 == 1.0);
  CHECK(cfg.theta_d == 1.0);
  CHECK(cfg.p == 1.0);
  REQUIRE(cfg.gamma_diag.size() == 1);
  CHECK(cfg.gamma_diag[0] == 1.0);
  CHECK(cfg.integrator == IntegratorKind::rk4);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.t_final == 10.0);
  CHECK(cfg.verify_lo == std::vector<double>{-1.2, -4.0});
  CHECK(cfg.verify_hi == std::vector<double>{1.2, 4.0});
  CHECK(cfg.verify_samples == std::vector<int>{49, 41});
  CHECK_FALSE(cfg.x0.has_value());
}

TEST_CASE("default satellite configuration") {
  const ScenarioConfig cfg = resolve_config(
      {{"scenario", "satellite"}, {"method", "od-recbf"}});
  CHECK(cfg.alpha1 == 1.0 / 600.0);
  CHECK(cfg.alpha2 == 1.0 / 200.0);
  CHECK(cfg.c1 == 271.44);
  CHECK(cfg.eps == 0.0141);
  CHECK(cfg.mu == 2.346e-9);
  CHECK(cfg.body_radius == 0.3097);
  CHECK(cfg.integrator == IntegratorKind::rkf45);
  CHECK(cfg.t_final == 172800.0);
  CHECK(cfg.rel_tol == 1e-9);
  CHECK(cfg.abs_tol == 1e-12);
  CHECK(cfg.max_steps == 500000);
  CHECK(cfg.preset == "consistent-orbit");
  REQUIRE(cfg.verify_lo.size() == 4);
  CHECK(cfg.verify_lo[0] == doctest::Approx(1.8 * 0.3097).epsilon(1e-15));
  CHECK(cfg.verify_hi[0] == doctest::Approx(2.2 * 0.3097).epsilon(1e-15));
}

TEST_CASE("config rejection paths") {
  auto kv = di_kv("od-hocbf");
  kv["frobnicate"] = "1";
  try {
    resolve_config(kv);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
    CHECK(e.key == "frobnicate");
  }

  kv = di_kv("od-hocbf");
  kv["dt"] = "-0.5";
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = di_kv("od-hocbf");
  kv["theta_d"] = "-1";
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = di_kv("od-hocbf");
  kv["preset"] = "paper-literal";  // presets exist only for the satellite
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = {{"scenario", "satellite"}, {"method", "fixed-theta"}};
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = di_kv("od-hocbf");
  kv["gamma"] = "1, 1";  // wrong width for a single input
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = di_kv("od-hocbf");
  kv["x0"] = "1, 2, 3";
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = {{"scenario", "custom"}, {"method", "od-cbf"}};
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);  // fixture required

  kv = {{"scenario", "custom"}, {"method", "od-cbf"}, {"fixture", "nope"}};
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = di_kv("od-hocbf");
  kv["fixture"] = "flat";  // fixtures belong to the custom scenario
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  kv = di_kv("nonsense");
  CHECK_THROWS_AS(resolve_config(kv), ConfigError);

  CHECK_THROWS_AS(resolve_config({{"method", "od-cbf"}}), ConfigError);
}

TEST_CASE("double-integrator bundle wiring") {
  const ScenarioConfig cfg = resolve_config(di_kv("od-hocbf"));
  const ScenarioBundle b = build_scenario(cfg);
  REQUIRE(b.sim.x0.size() == 2);
  CHECK(b.sim.x0(0) == -0.1);
  CHECK(b.sim.x0(1) == 1.5);
  CHECK(b.hocbf.has_value());
  CHECK_FALSE(b.recbf.has_value());

  Vector x(2);
  x << 0.0, 0.0;
  CHECK(b.h.value(x) == doctest::Approx(2.0).epsilon(1e-14));
  const FilterResult res = b.filter(x);
  CHECK(res.theta >= 1.0);
}

TEST_CASE("satellite presets resolve the initial state") {
  ScenarioConfig cfg = resolve_config(
      {{"scenario", "satellite"}, {"method", "od-hocbf"}});
  ScenarioBundle b = build_scenario(cfg);
  REQUIRE(b.sim.x0.size() == 4);
  CHECK(b.sim.x0(0) == 0.6649);
  CHECK(b.sim.x0(2) == 0.0);
  CHECK(b.sim.x0(3) ==
        std::sqrt(2.346e-9 / (0.6649 * 0.6649 * 0.6649)));

  cfg = resolve_config({{"scenario", "satellite"},
                        {"method", "od-hocbf"},
                        {"preset", "paper-literal"}});
  b = build_scenario(cfg);
  CHECK(b.sim.x0(2) == 2.346);
  CHECK(b.sim.x0(3) == 8.097);

  cfg = resolve_config({{"scenario", "satellite"},
                        {"method", "od-hocbf"},
                        {"x0", "0.7, 0, 0, 9e-5"}});
  b = build_scenario(cfg);
  CHECK(b.sim.x0(0) == 0.7);
}

TEST_CASE("run_scenario writes a deterministic trajectory and a report") {
  const auto dir1 = fresh_dir("run1");
  const auto dir2 = fresh_dir("run2");
  auto kv = di_kv("od-hocbf");
  kv["t_final"] = "0.2";
  kv["out"] = dir1.string();
  const RunReport rep = run_scenario(resolve_config(kv));

  CHECK(rep.status == "ok");
  CHECK_FALSE(rep.fatal_failure);
  REQUIRE(rep.sim_metrics.has_value());
  CHECK(rep.sim_metrics->wall_steps == 200);
  CHECK(rep.sim_metrics->min_psi > 0.0);

  const std::string csv = slurp(rep.trajectory_path);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t,x1,x2,u1,theta,h,psi");
  long data_lines = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++data_lines;
  }
  CHECK(data_lines == 201);
  CHECK(csv.back() == '\n');

  const nlohmann::json j = nlohmann::json::parse(slurp(rep.report_path));
  CHECK(j["schema_version"] == 1);
  CHECK(j["status"] == "ok");
  CHECK(j["config"]["method"] == "od-hocbf");
  CHECK(j["metrics"]["wall_steps"] == 200);
  CHECK(j["config"]["x0"][0] == -0.1);

  kv["out"] = dir2.string();
  const RunReport rep2 = run_scenario(resolve_config(kv));
  CHECK(slurp(rep2.trajectory_path) == csv);
}

TEST_CASE("csv numbers round-trip exactly") {
  const auto dir = fresh_dir("roundtrip");
  Trajectory tr;
  TrajectoryRow row;
  row.t = 0.1;
  row.x = Vector(2);
  row.x << M_PI, -1.0 / 3.0;
  row.u = Vector(1);
  row.u << 2.2250738585072014e-308;
  row.theta = 1.0 + 1e-16;
  row.h = -0.0;
  row.psi = 1e300;
  tr.rows.push_back(row);
  const std::string path = (dir / "t.csv").string();
  write_trajectory_csv(tr, path);

  std::istringstream in(slurp(path));
  std::string header, data;
  std::getline(in, header);
  std::getline(in, data);
  std::vector<double> parsed;
  std::istringstream fields(data);
  std::string field;
  while (std::getline(fields, field, ',')) {
    parsed.push_back(std::strtod(field.c_str(), nullptr));
  }
  REQUIRE(parsed.size() == 7);
  CHECK(parsed[0] == row.t);
  CHECK(parsed[1] == row.x(0));
  CHECK(parsed[2] == row.x(1));
  CHECK(parsed[3] == row.u(0));
  CHECK(parsed[4] == row.theta);
  CHECK(parsed[5] == row.h);
  CHECK(parsed[6] == row.psi);
}

TEST_CASE("verify_scenario passes the optimized-decay construction") {
  const auto dir = fresh_dir("verify_ok");
  auto kv = di_kv("od-hocbf");
  kv["out"] = dir.string();
  const auto reports = verify_scenario(resolve_config(kv));
  REQUIRE(!reports.empty());
  for (const VerificationReport& r : reports) {
    CHECK(r.pass);
  }
  CHECK(std::filesystem::exists(dir / "verify.json"));
}

TEST_CASE("verify_scenario reports failing fixtures honestly") {
  const auto dir = fresh_dir("verify_bad");
  const ScenarioConfig cfg = resolve_config({{"scenario", "custom"},
                                             {"method", "od-cbf"},
                                             {"fixture", "degenerate-gradient"},
                                             {"out", dir.string()}});
  const auto reports = verify_scenario(cfg);
  bool some_failure = false;
  for (const VerificationReport& r : reports) {
    some_failure = some_failure || !r.pass;
  }
  CHECK(some_failure);
}

TEST_CASE("interior decay check fails for the plain second-order method") {
  const auto dir = fresh_dir("verify_hocbf");
  auto kv = di_kv("hocbf");
  kv["out"] = dir.string();
  const auto reports = verify_scenario(resolve_config(kv));
  bool interior_failed = false;
  for (const VerificationReport& r : reports) {
    if (r.condition == "interior-decay") interior_failed = !r.pass;
  }
  CHECK(interior_failed);
}

TEST_CASE("run_scenario rejects custom fixtures") {
  const ScenarioConfig cfg = resolve_config({{"scenario", "custom"},
                                             {"method", "od-cbf"},
                                             {"fixture", "flat"}});
  CHECK_THROWS_AS(run_scenario(cfg), ConfigError);
}

TEST_CASE("fixed-theta profile keeps the double integrator safe") {
  const auto dir = fresh_dir("fixed_theta");
  auto kv = di_kv("fixed-theta");
  kv["out"] = dir.string();
  kv["t_final"] = "2";
  const RunReport rep = run_scenario(resolve_config(kv));
  CHECK(rep.status == "ok");
  REQUIRE(rep.sim_metrics.has_value());
  CHECK(rep.sim_metrics->min_psi >= -1e-6);
  CHECK(rep.sim_metrics->min_h >= -1e-6);
}

TEST_CASE("aborted runs produce a diagnosed report instead of throwing") {
  const auto dir = fresh_dir("aborted");
  auto kv = di_kv("od-hocbf");
  kv["out"] = dir.string();
  kv["x0"] = "0.99, 50";  // slams the wall within the first milliseconds
  kv["t_final"] = "1";
  kv["dt"] = "0.05";  // far too coarse for the incoming spike
  const RunReport rep = run_scenario(resolve_config(kv));
  if (rep.status == "aborted") {
    CHECK(!rep.abort_reason.empty());
    CHECK(rep.fatal_failure);
  } else {
    CHECK(rep.sim_metrics.has_value());
  }
}
