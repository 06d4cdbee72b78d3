#pragma once

#include <map>
#include <optional>
#include <string>

#include "odcbf/qp_oracle.hpp"
#include "odcbf/sim.hpp"
#include "odcbf/verifier.hpp"

namespace odcbf {

/// A config key is unknown, missing, malformed, or violates a constraint.
/// The offending key is carried alongside the message.
struct ConfigError : Error {
  ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key(key) {}
  std::string key;
};

enum class ScenarioKind { double_integrator, satellite, custom };
enum class MethodKind { cbf, od_cbf, hocbf, od_hocbf, fixed_theta, recbf, od_recbf };

std::string to_string(ScenarioKind k);
std::string to_string(MethodKind k);

/// Fully resolved scenario description. Defaults for the two named
/// scenarios reproduce the reference parameter sets; see default_config.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::double_integrator;
  MethodKind method = MethodKind::od_hocbf;
  std::string fixture;  // custom scenario: named built-in fixture

  double alpha1 = 2.0;      // slope of the inner class-K^e function
  double alpha2 = 2.0;      // slope of the class-K^e function in the program
  double c1 = 1.0;
  double eps = 0.1;
  double theta_d = 1.0;
  double p = 1.0;
  std::vector<double> gamma_diag{1.0};

  std::string preset = "consistent-orbit";  // satellite initial condition
  std::optional<std::vector<double>> x0;    // explicit override

  IntegratorKind integrator = IntegratorKind::rk4;
  double dt = 1e-3;
  double t_final = 10.0;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  long max_steps = 500000;
  int record_stride = 1;

  std::vector<double> verify_lo;
  std::vector<double> verify_hi;
  std::vector<int> verify_samples;
  long sobol_samples = 0;

  double mu = 2.346e-9;        // satellite gravitational parameter
  double body_radius = 0.3097; // satellite central body radius

  std::string out = "out";
  unsigned seed = 0;
  bool fatal_verify = true;
  bool run_verify = false;  // run verification checks inside `run`
};

/// Parses flat `key = value` text (# comments, comma-separated lists) into a
/// raw key map. Later duplicates win, which is how CLI flags override file
/// values.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Resolves a raw key map into a validated config with defaults applied.
ScenarioConfig resolve_config(const std::map<std::string, std::string>& kv);

/// Reference defaults for a scenario/method pair.
ScenarioConfig default_config(ScenarioKind scenario, MethodKind method);

/// Everything needed to run or verify one scenario.
struct ScenarioBundle {
  ControlAffineSystem sys;
  ScalarField psi;
  ScalarField h;
  FilterConfig filter_cfg;
  FilterFn filter;
  SimConfig sim;
  RegionBox verify_box;
  std::optional<HocbfSpec> hocbf;
  std::optional<RecbfSpec> recbf;
};

ScenarioBundle build_scenario(const ScenarioConfig& cfg);

struct RunReport {
  ScenarioConfig config;
  std::optional<SimMetrics> sim_metrics;
  std::vector<VerificationReport> verifications;
  std::string trajectory_path;
  std::string report_path;
  double duration_seconds = 0.0;
  std::string status = "ok";       // "ok" | "aborted"
  std::string abort_reason;        // diagnosis when aborted
  double abort_time = 0.0;
  bool fatal_failure = false;      // drives the process exit status
};

/// Builds the scenario, optionally verifies, simulates, writes the
/// trajectory CSV and a JSON report under cfg.out. Filter infeasibility and
/// integration failures become an "aborted" report (with the partial
/// trajectory written) rather than an exception.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Runs every check applicable to the configured method and writes a JSON
/// report under cfg.out. Failures are report content, not errors.
std::vector<VerificationReport> verify_scenario(const ScenarioConfig& cfg);

/// Header "t,x1..xn,u1..um,theta,h,psi"; one row per recorded step; decimal
/// text with 17 significant digits; newline-terminated.
void write_trajectory_csv(const Trajectory& tr, const std::string& path);

std::string report_to_json(const RunReport& report);
std::string verifications_to_json(const ScenarioConfig& cfg,
                                  const std::vector<VerificationReport>& reports);

/// Human-readable one-line summary per verification report.
std::string verification_summary(const VerificationReport& report);

}  // namespace odcbf
