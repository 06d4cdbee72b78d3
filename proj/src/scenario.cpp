#include "odcbf/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace odcbf {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(key, "expected a number, got an empty value");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a finite number, got '" + t + "'");
  }
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    throw ConfigError(key, "expected an integer, got '" + trim(text) + "'");
  }
  return static_cast<long>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true/false, got '" + trim(text) + "'");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& text) {
  std::string spaced = text;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(key, tok));
  if (out.empty()) throw ConfigError(key, "expected a list of numbers");
  return out;
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& text) {
  std::vector<int> out;
  for (double v : parse_double_list(key, text)) {
    if (v != std::floor(v) || v < -2e9 || v > 2e9) {
      throw ConfigError(key, "expected a list of integers");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "scenario",    "method",        "fixture",       "alpha1",
      "alpha2",      "c1",            "eps",           "theta_d",
      "p",           "gamma",         "preset",        "x0",
      "integrator",  "dt",            "t_final",       "rel_tol",
      "abs_tol",     "max_steps",     "record_stride", "verify_lo",
      "verify_hi",   "verify_samples", "sobol_samples", "mu",
      "body_radius", "out",           "seed",          "fatal_verify",
      "run_verify"};
  return keys;
}

ScenarioKind parse_scenario(const std::string& text) {
  const std::string t = trim(text);
  if (t == "double-integrator") return ScenarioKind::double_integrator;
  if (t == "satellite") return ScenarioKind::satellite;
  if (t == "custom") return ScenarioKind::custom;
  throw ConfigError("scenario",
                    "expected double-integrator | satellite | custom, got '" +
                        t + "'");
}

MethodKind parse_method(const std::string& text) {
  const std::string t = trim(text);
  if (t == "cbf") return MethodKind::cbf;
  if (t == "od-cbf") return MethodKind::od_cbf;
  if (t == "hocbf") return MethodKind::hocbf;
  if (t == "od-hocbf") return MethodKind::od_hocbf;
  if (t == "fixed-theta") return MethodKind::fixed_theta;
  if (t == "recbf") return MethodKind::recbf;
  if (t == "od-recbf") return MethodKind::od_recbf;
  throw ConfigError("method",
                    "expected cbf | od-cbf | hocbf | od-hocbf | fixed-theta | "
                    "recbf | od-recbf, got '" +
                        t + "'");
}

IntegratorKind parse_integrator(const std::string& text) {
  const std::string t = trim(text);
  if (t == "rk4") return IntegratorKind::rk4;
  if (t == "rkf45") return IntegratorKind::rkf45;
  throw ConfigError("integrator", "expected rk4 | rkf45, got '" + t + "'");
}

const std::set<std::string>& known_fixtures() {
  static const std::set<std::string> names = {
      "degenerate-gradient", "constant-drift-counterexample",
      "recbc-violation", "flat"};
  return names;
}

void satellite_default_box(double body_radius, std::vector<double>& lo,
                           std::vector<double>& hi, std::vector<int>& samples) {
  lo = {1.8 * body_radius, 0.0, -1e-4, 6e-5};
  hi = {2.2 * body_radius, 6.2832, 1e-4, 1.4e-4};
  samples = {41, 3, 21, 5};
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::double_integrator: return "double-integrator";
    case ScenarioKind::satellite: return "satellite";
    case ScenarioKind::custom: return "custom";
  }
  return "?";
}

std::string to_string(MethodKind k) {
  switch (k) {
    case MethodKind::cbf: return "cbf";
    case MethodKind::od_cbf: return "od-cbf";
    case MethodKind::hocbf: return "hocbf";
    case MethodKind::od_hocbf: return "od-hocbf";
    case MethodKind::fixed_theta: return "fixed-theta";
    case MethodKind::recbf: return "recbf";
    case MethodKind::od_recbf: return "od-recbf";
  }
  return "?";
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no),
                        "expected key = value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no), "empty key");
    }
    kv[key] = value;  // later duplicates win
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

ScenarioConfig default_config(ScenarioKind scenario, MethodKind method) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.method = method;
  switch (scenario) {
    case ScenarioKind::double_integrator:
      cfg.alpha1 = 2.0;
      cfg.alpha2 = 2.0;
      cfg.c1 = 1.0;
      cfg.eps = 0.1;
      cfg.gamma_diag = {1.0};
      cfg.integrator = IntegratorKind::rk4;
      cfg.dt = 1e-3;
      cfg.t_final = 10.0;
      cfg.verify_lo = {-1.2, -4.0};
      cfg.verify_hi = {1.2, 4.0};
      cfg.verify_samples = {49, 41};
      break;
    case ScenarioKind::satellite:
      cfg.alpha1 = 1.0 / 600.0;
      cfg.alpha2 = 1.0 / 200.0;
      cfg.c1 = 271.44;
      cfg.eps = 0.0141;
      cfg.gamma_diag = {1.0, 1.0};
      cfg.integrator = IntegratorKind::rkf45;
      cfg.dt = 1.0;
      cfg.t_final = 172800.0;
      satellite_default_box(cfg.body_radius, cfg.verify_lo, cfg.verify_hi,
                            cfg.verify_samples);
      break;
    case ScenarioKind::custom:
      // Fixtures carry their own sampling boxes; see build_scenario.
      cfg.verify_lo.clear();
      cfg.verify_hi.clear();
      cfg.verify_samples.clear();
      break;
  }
  return cfg;
}

ScenarioConfig resolve_config(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    (void)value;
    if (known_keys().count(key) == 0) throw ConfigError(key, "unknown key");
  }
  auto get = [&kv](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  const std::string* sc = get("scenario");
  if (!sc) {
    throw ConfigError("scenario",
                      "required (double-integrator | satellite | custom)");
  }
  const std::string* mt = get("method");
  if (!mt) {
    throw ConfigError("method",
                      "required (cbf | od-cbf | hocbf | od-hocbf | "
                      "fixed-theta | recbf | od-recbf)");
  }
  ScenarioConfig cfg = default_config(parse_scenario(*sc), parse_method(*mt));

  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
    return v;
  };

  if (const std::string* v = get("fixture")) cfg.fixture = trim(*v);
  if (const std::string* v = get("alpha1"))
    cfg.alpha1 = positive("alpha1", parse_double("alpha1", *v));
  if (const std::string* v = get("alpha2"))
    cfg.alpha2 = positive("alpha2", parse_double("alpha2", *v));
  if (const std::string* v = get("c1"))
    cfg.c1 = positive("c1", parse_double("c1", *v));
  if (const std::string* v = get("eps"))
    cfg.eps = positive("eps", parse_double("eps", *v));
  if (const std::string* v = get("theta_d")) {
    cfg.theta_d = parse_double("theta_d", *v);
    if (cfg.theta_d < 0.0) throw ConfigError("theta_d", "must be >= 0");
  }
  if (const std::string* v = get("p"))
    cfg.p = positive("p", parse_double("p", *v));
  if (const std::string* v = get("gamma")) {
    cfg.gamma_diag = parse_double_list("gamma", *v);
    for (double g : cfg.gamma_diag) positive("gamma", g);
  }
  if (const std::string* v = get("preset")) {
    cfg.preset = trim(*v);
    if (cfg.scenario != ScenarioKind::satellite) {
      throw ConfigError("preset", "only the satellite scenario has presets");
    }
    if (cfg.preset != "paper-literal" && cfg.preset != "consistent-orbit") {
      throw ConfigError(
          "preset", "expected paper-literal | consistent-orbit, got '" +
                        cfg.preset + "'");
    }
  }
  if (const std::string* v = get("x0")) cfg.x0 = parse_double_list("x0", *v);
  if (const std::string* v = get("integrator"))
    cfg.integrator = parse_integrator(*v);
  if (const std::string* v = get("dt"))
    cfg.dt = positive("dt", parse_double("dt", *v));
  if (const std::string* v = get("t_final"))
    cfg.t_final = positive("t_final", parse_double("t_final", *v));
  if (const std::string* v = get("rel_tol"))
    cfg.rel_tol = positive("rel_tol", parse_double("rel_tol", *v));
  if (const std::string* v = get("abs_tol"))
    cfg.abs_tol = positive("abs_tol", parse_double("abs_tol", *v));
  if (const std::string* v = get("max_steps")) {
    cfg.max_steps = parse_long("max_steps", *v);
    if (cfg.max_steps < 1) throw ConfigError("max_steps", "must be >= 1");
  }
  if (const std::string* v = get("record_stride")) {
    cfg.record_stride = static_cast<int>(parse_long("record_stride", *v));
    if (cfg.record_stride < 1) throw ConfigError("record_stride", "must be >= 1");
  }
  if (const std::string* v = get("mu"))
    cfg.mu = positive("mu", parse_double("mu", *v));
  if (const std::string* v = get("body_radius")) {
    cfg.body_radius = positive("body_radius", parse_double("body_radius", *v));
    // Keep the default sweep box in scale with an overridden body radius.
    if (cfg.scenario == ScenarioKind::satellite && !get("verify_lo") &&
        !get("verify_hi")) {
      satellite_default_box(cfg.body_radius, cfg.verify_lo, cfg.verify_hi,
                            cfg.verify_samples);
    }
  }
  if (const std::string* v = get("verify_lo"))
    cfg.verify_lo = parse_double_list("verify_lo", *v);
  if (const std::string* v = get("verify_hi"))
    cfg.verify_hi = parse_double_list("verify_hi", *v);
  if (const std::string* v = get("verify_samples"))
    cfg.verify_samples = parse_int_list("verify_samples", *v);
  if (const std::string* v = get("sobol_samples")) {
    cfg.sobol_samples = parse_long("sobol_samples", *v);
    if (cfg.sobol_samples < 0) throw ConfigError("sobol_samples", "must be >= 0");
  }
  if (const std::string* v = get("out")) cfg.out = trim(*v);
  if (const std::string* v = get("seed")) {
    const long s = parse_long("seed", *v);
    if (s < 0) throw ConfigError("seed", "must be >= 0");
    cfg.seed = static_cast<unsigned>(s);
  }
  if (const std::string* v = get("fatal_verify"))
    cfg.fatal_verify = parse_bool("fatal_verify", *v);
  if (const std::string* v = get("run_verify"))
    cfg.run_verify = parse_bool("run_verify", *v);

  // Cross-field constraints.
  int state_dim = 2;
  int input_dim = 1;
  if (cfg.scenario == ScenarioKind::satellite) {
    state_dim = 4;
    input_dim = 2;
  }
  if (cfg.method == MethodKind::fixed_theta &&
      cfg.scenario != ScenarioKind::double_integrator) {
    throw ConfigError("method",
                      "fixed-theta is defined only for the double-integrator "
                      "scenario");
  }
  if (cfg.scenario == ScenarioKind::custom) {
    if (cfg.fixture.empty()) {
      throw ConfigError("fixture",
                        "required for scenario=custom "
                        "(degenerate-gradient | "
                        "constant-drift-counterexample | recbc-violation | "
                        "flat)");
    }
    if (known_fixtures().count(cfg.fixture) == 0) {
      throw ConfigError("fixture", "unknown fixture '" + cfg.fixture + "'");
    }
  } else if (!cfg.fixture.empty()) {
    throw ConfigError("fixture", "only valid for scenario=custom");
  }
  if (cfg.x0 && cfg.scenario != ScenarioKind::custom &&
      static_cast<int>(cfg.x0->size()) != state_dim) {
    throw ConfigError("x0", "expected " + std::to_string(state_dim) +
                                " entries, got " +
                                std::to_string(cfg.x0->size()));
  }
  if (cfg.scenario != ScenarioKind::custom &&
      static_cast<int>(cfg.gamma_diag.size()) != input_dim) {
    throw ConfigError("gamma", "expected " + std::to_string(input_dim) +
                                   " diagonal entries, got " +
                                   std::to_string(cfg.gamma_diag.size()));
  }
  if (!cfg.verify_lo.empty() || !cfg.verify_hi.empty() ||
      !cfg.verify_samples.empty()) {
    const size_t n = cfg.verify_lo.size();
    if (cfg.verify_hi.size() != n ||
        (cfg.sobol_samples == 0 && cfg.verify_samples.size() != n)) {
      throw ConfigError("verify_lo",
                        "verify_lo, verify_hi and verify_samples must have "
                        "matching lengths");
    }
    for (size_t i = 0; i < n; ++i) {
      if (!(cfg.verify_lo[i] < cfg.verify_hi[i])) {
        throw ConfigError("verify_lo", "each entry must be < verify_hi");
      }
    }
    for (int s : cfg.verify_samples) {
      if (s < 1) throw ConfigError("verify_samples", "entries must be >= 1");
    }
  }
  return cfg;
}

namespace {

/// Assembles h, the filter config and the filter callback for a scenario
/// whose psi and analytic L_f psi gradient are already known.
ScenarioBundle make_bundle(const ScenarioConfig& cfg, ControlAffineSystem sys,
                           ScalarField psi,
                           std::function<Vector(const Vector&)> lf_psi_grad) {
  FilterConfig fcfg{SpdMatrix::diagonal(cfg.gamma_diag), cfg.p, cfg.theta_d,
                    ClassKe::linear(cfg.alpha2), {}};
  std::optional<HocbfSpec> hocbf;
  std::optional<RecbfSpec> recbf;
  ScalarField h = psi;
  switch (cfg.method) {
    case MethodKind::cbf:
    case MethodKind::od_cbf:
      break;
    case MethodKind::hocbf:
    case MethodKind::od_hocbf:
    case MethodKind::fixed_theta:
      hocbf = HocbfSpec{psi, ClassKe::linear(cfg.alpha1), lf_psi_grad};
      h = hocbf_build(sys, *hocbf);
      break;
    case MethodKind::recbf:
    case MethodKind::od_recbf:
      recbf = RecbfSpec{psi, ClassKe::linear(cfg.alpha1), cfg.c1, cfg.eps,
                        lf_psi_grad};
      h = recbf_build(sys, *recbf);
      break;
  }

  FilterFn filter;
  switch (cfg.method) {
    case MethodKind::cbf:
    case MethodKind::hocbf:
    case MethodKind::recbf:
      filter = [sys, h, fcfg](const Vector& x) {
        return cbf_filter(sys, h, fcfg, x);
      };
      break;
    case MethodKind::od_cbf:
    case MethodKind::od_hocbf:
    case MethodKind::od_recbf:
      filter = [sys, h, fcfg](const Vector& x) {
        return od_cbf_filter(sys, h, fcfg, x);
      };
      break;
    case MethodKind::fixed_theta: {
      const double denom = cfg.alpha2 * cfg.alpha1;  // alpha2(alpha1(1))
      auto theta = [denom](const Vector& x) {
        return 4.0 * x(1) * x(1) / denom + 1.0;
      };
      filter = [sys, h, fcfg, theta](const Vector& x) {
        return fixed_theta_filter(sys, h, fcfg, theta, x);
      };
      break;
    }
  }

  ScenarioBundle b{std::move(sys), std::move(psi), std::move(h),
                   std::move(fcfg), std::move(filter), SimConfig{},
                   RegionBox{}, std::move(hocbf), std::move(recbf)};
  b.sim.integrator = cfg.integrator;
  b.sim.dt = cfg.dt;
  b.sim.t_final = cfg.t_final;
  b.sim.adaptive = Rkf45Options{cfg.rel_tol, cfg.abs_tol, cfg.max_steps};
  b.sim.record_stride = cfg.record_stride;
  if (!cfg.verify_lo.empty()) {
    b.verify_box.lo = to_vector(cfg.verify_lo);
    b.verify_box.hi = to_vector(cfg.verify_hi);
    b.verify_box.samples_per_dim = cfg.verify_samples;
    b.verify_box.sobol_samples = cfg.sobol_samples;
  }
  return b;
}

ScenarioBundle build_double_integrator(const ScenarioConfig& cfg) {
  ScalarField psi = ScalarField::with_gradient(
      [](const Vector& x) { return 1.0 - x(0) * x(0); },
      [](const Vector& x) {
        Vector g(2);
        g << -2.0 * x(0), 0.0;
        return g;
      });
  auto lf_psi_grad = [](const Vector& x) {
    Vector g(2);
    g << -2.0 * x(1), -2.0 * x(0);
    return g;
  };
  ScenarioBundle b = make_bundle(cfg, double_integrator(), psi, lf_psi_grad);
  if (cfg.x0) {
    b.sim.x0 = to_vector(*cfg.x0);
  } else {
    b.sim.x0 = Vector(2);
    b.sim.x0 << -0.1, 1.5;
  }
  return b;
}

ScenarioBundle build_satellite(const ScenarioConfig& cfg) {
  const double R = cfg.body_radius;
  const double d = 0.2 * R;  // half-width of the admissible radial band
  ScalarField psi = ScalarField::with_gradient(
      [R, d](const Vector& x) {
        const double s = (x(0) - 2.0 * R) / d;
        return 1.0 - s * s;
      },
      [R, d](const Vector& x) {
        Vector g(4);
        g << -2.0 * (x(0) - 2.0 * R) / (d * d), 0.0, 0.0, 0.0;
        return g;
      });
  auto lf_psi_grad = [R, d](const Vector& x) {
    Vector g(4);
    g << -2.0 * x(2) / (d * d), 0.0, -2.0 * (x(0) - 2.0 * R) / (d * d), 0.0;
    return g;
  };
  SatelliteParams params;
  params.mu = cfg.mu;
  params.body_radius = cfg.body_radius;
  ScenarioBundle b = make_bundle(cfg, satellite(params), psi, lf_psi_grad);
  if (cfg.x0) {
    b.sim.x0 = to_vector(*cfg.x0);
  } else {
    b.sim.x0 = Vector(4);
    if (cfg.preset == "paper-literal") {
      b.sim.x0 << 0.6649, 2.034, 2.346, 8.097;
    } else {
      const double r0 = 0.6649;
      b.sim.x0 << r0, 2.034, 0.0, std::sqrt(cfg.mu / (r0 * r0 * r0));
    }
  }
  return b;
}

void default_fixture_box(const std::string& fixture, RegionBox& box) {
  box.lo = to_vector({-1.0, -1.0});
  box.hi = to_vector({1.0, 1.0});
  if (fixture == "recbc-violation") {
    box.samples_per_dim = {161, 3};
  } else if (fixture == "flat") {
    box.samples_per_dim = {21, 3};
  } else {
    box.samples_per_dim = {81, 3};
  }
}

ScenarioBundle build_fixture(const ScenarioConfig& cfg) {
  ControlAffineSystem sys;
  ScalarField field;
  std::optional<RecbfSpec> recbf;

  if (cfg.fixture == "degenerate-gradient") {
    sys = double_integrator();
    field = ScalarField::with_gradient(
        [](const Vector& x) { return x(0) * x(0); },
        [](const Vector& x) {
          Vector g(2);
          g << 2.0 * x(0), 0.0;
          return g;
        });
  } else if (cfg.fixture == "flat") {
    sys = double_integrator();
    field = ScalarField::with_gradient(
        [](const Vector&) { return 1.0; },
        [](const Vector&) { return Vector::Zero(2).eval(); });
  } else {
    // Constant drift (1, 0) with vertical actuation: the boundary of
    // h = -x1 moves against the drift no matter the input.
    sys.state_dim = 2;
    sys.input_dim = 1;
    sys.drift = [](const Vector&) {
      Vector f(2);
      f << 1.0, 0.0;
      return f;
    };
    sys.input_matrix = [](const Vector&) {
      Matrix g(2, 1);
      g << 0.0, 1.0;
      return g;
    };
    ScalarField psi = ScalarField::with_gradient(
        [](const Vector& x) { return -x(0); },
        [](const Vector&) {
          Vector g(2);
          g << -1.0, 0.0;
          return g;
        });
    if (cfg.fixture == "recbc-violation") {
      RecbfSpec spec{psi, ClassKe::linear(1.0), 0.1, 0.11,
                     [](const Vector&) { return Vector::Zero(2).eval(); }};
      recbf = spec;
      field = recbf_build(sys, spec);
    } else {
      field = psi;
    }
  }

  FilterConfig fcfg{SpdMatrix::identity(sys.input_dim), cfg.p, cfg.theta_d,
                    ClassKe::linear(cfg.alpha2), {}};
  const ControlAffineSystem sys_copy = sys;
  const ScalarField h_copy = field;
  const FilterConfig fcfg_copy = fcfg;
  FilterFn filter = [sys_copy, h_copy, fcfg_copy](const Vector& x) {
    return od_cbf_filter(sys_copy, h_copy, fcfg_copy, x);
  };

  ScenarioBundle b{std::move(sys), field, field, std::move(fcfg),
                   std::move(filter), SimConfig{}, RegionBox{}, std::nullopt,
                   std::move(recbf)};
  if (!cfg.verify_lo.empty()) {
    b.verify_box.lo = to_vector(cfg.verify_lo);
    b.verify_box.hi = to_vector(cfg.verify_hi);
    b.verify_box.samples_per_dim = cfg.verify_samples;
    b.verify_box.sobol_samples = cfg.sobol_samples;
  } else {
    default_fixture_box(cfg.fixture, b.verify_box);
  }
  return b;
}

}  // namespace

ScenarioBundle build_scenario(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case ScenarioKind::double_integrator:
      return build_double_integrator(cfg);
    case ScenarioKind::satellite:
      return build_satellite(cfg);
    case ScenarioKind::custom:
      return build_fixture(cfg);
  }
  throw ConfigError("scenario", "unhandled scenario kind");
}

namespace {

/// Sampled check that psi has no direct input path (the prerequisite of the
/// second-order constructions).
VerificationReport relative_degree_report(const ControlAffineSystem& sys,
                                          const ScalarField& psi,
                                          const RegionBox& box) {
  VerificationReport rep;
  rep.condition = "relative-degree-two";
  const double tol = 1e-10;
  const BoxSampling sampling = box_samples(box);
  rep.samples = static_cast<long>(sampling.states.size());
  rep.qualifying = rep.samples;
  for (const Vector& x : sampling.states) {
    const LieData data = lie(sys, psi, x);
    const double worst = data.lg.cwiseAbs().maxCoeff();
    if (worst > tol) {
      rep.violations.push_back(
          SampleViolation{x, {{"max |L_g psi|", worst}}});
    }
  }
  rep.tolerances = {{"tol", tol}};
  rep.pass = rep.violations.empty();
  rep.vacuous = rep.samples == 0;
  rep.note = "sampling-based check, not a proof";
  return rep;
}

std::vector<VerificationReport> method_checks(const ScenarioConfig& cfg,
                                              const ScenarioBundle& b) {
  std::vector<VerificationReport> out;
  const RegionBox& box = b.verify_box;

  if (cfg.scenario == ScenarioKind::custom) {
    if (cfg.fixture == "degenerate-gradient") {
      out.push_back(check_regular_value(b.h, box));
      out.push_back(check_od_cbc(b.sys, b.h, box));
    } else if (cfg.fixture == "constant-drift-counterexample") {
      out.push_back(check_od_cbc(b.sys, b.h, box));
      out.push_back(check_regular_value(b.h, box));
    } else if (cfg.fixture == "recbc-violation") {
      out.push_back(check_od_recbc(b.sys, *b.recbf, box));
      out.push_back(check_regular_value(b.h, box));
    } else {
      out.push_back(check_od_cbc(b.sys, b.h, box));
    }
    return out;
  }

  const ClassKe alpha2 = ClassKe::linear(cfg.alpha2);
  switch (cfg.method) {
    case MethodKind::cbf:
      out.push_back(check_cbc(b.sys, b.h, alpha2, box));
      out.push_back(check_regular_value(b.h, box));
      break;
    case MethodKind::od_cbf:
      out.push_back(check_od_cbc(b.sys, b.h, box));
      out.push_back(check_regular_value(b.h, box));
      break;
    case MethodKind::hocbf:
      out.push_back(relative_degree_report(b.sys, b.psi, box));
      out.push_back(check_cbc(b.sys, b.h, alpha2, box));
      out.push_back(check_regular_value(b.h, box));
      break;
    case MethodKind::od_hocbf:
    case MethodKind::fixed_theta:
      out.push_back(relative_degree_report(b.sys, b.psi, box));
      out.push_back(check_od_hocbf(b.sys, *b.hocbf, box));
      out.push_back(check_od_cbc(b.sys, b.h, box));
      out.push_back(check_regular_value(b.psi, box));
      out.push_back(check_regular_value(b.h, box));
      break;
    case MethodKind::recbf:
    case MethodKind::od_recbf:
      out.push_back(relative_degree_report(b.sys, b.psi, box));
      out.push_back(check_od_recbc(b.sys, *b.recbf, box));
      out.push_back(check_regular_value(b.h, box));
      break;
  }
  return out;
}

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

json verification_json(const VerificationReport& r) {
  json j;
  j["condition"] = r.condition;
  j["pass"] = r.pass;
  j["vacuous"] = r.vacuous;
  j["samples"] = r.samples;
  j["qualifying"] = r.qualifying;
  j["violation_count"] = r.violations.size();
  json viols = json::array();
  const size_t cap = std::min<size_t>(r.violations.size(), 10);
  for (size_t i = 0; i < cap; ++i) {
    json v;
    v["state"] = to_std(r.violations[i].state);
    json q;
    for (const auto& [name, value] : r.violations[i].quantities) {
      q[name] = value;
    }
    v["quantities"] = q;
    viols.push_back(v);
  }
  j["violations"] = viols;
  json tols;
  for (const auto& [name, value] : r.tolerances) tols[name] = value;
  j["tolerances"] = tols;
  j["note"] = r.note;
  return j;
}

json config_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["method"] = to_string(c.method);
  if (!c.fixture.empty()) j["fixture"] = c.fixture;
  j["alpha1"] = c.alpha1;
  j["alpha2"] = c.alpha2;
  j["c1"] = c.c1;
  j["eps"] = c.eps;
  j["theta_d"] = c.theta_d;
  j["p"] = c.p;
  j["gamma"] = c.gamma_diag;
  if (c.scenario == ScenarioKind::satellite) {
    j["preset"] = c.preset;
    j["mu"] = c.mu;
    j["body_radius"] = c.body_radius;
  }
  j["x0"] = c.x0 ? json(*c.x0) : json();
  j["integrator"] = c.integrator == IntegratorKind::rk4 ? "rk4" : "rkf45";
  j["dt"] = c.dt;
  j["t_final"] = c.t_final;
  j["rel_tol"] = c.rel_tol;
  j["abs_tol"] = c.abs_tol;
  j["max_steps"] = c.max_steps;
  j["record_stride"] = c.record_stride;
  j["verify_lo"] = c.verify_lo;
  j["verify_hi"] = c.verify_hi;
  j["verify_samples"] = c.verify_samples;
  j["sobol_samples"] = c.sobol_samples;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["fatal_verify"] = c.fatal_verify;
  j["run_verify"] = c.run_verify;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path + "'");
}

}  // namespace

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  if (tr.rows.empty()) {
    throw DimensionError("write_trajectory_csv: empty trajectory");
  }
  const int n = static_cast<int>(tr.rows.front().x.size());
  const int m = static_cast<int>(tr.rows.front().u.size());
  std::string text = "t";
  for (int i = 1; i <= n; ++i) text += ",x" + std::to_string(i);
  for (int i = 1; i <= m; ++i) text += ",u" + std::to_string(i);
  text += ",theta,h,psi\n";
  for (const TrajectoryRow& row : tr.rows) {
    append_number(text, row.t);
    for (int i = 0; i < n; ++i) {
      text += ',';
      append_number(text, row.x(i));
    }
    for (int i = 0; i < m; ++i) {
      text += ',';
      append_number(text, row.u(i));
    }
    text += ',';
    append_number(text, row.theta);
    text += ',';
    append_number(text, row.h);
    text += ',';
    append_number(text, row.psi);
    text += '\n';
  }
  write_text_file(path, text);
}

std::string report_to_json(const RunReport& report) {
  json j;
  j["schema_version"] = 1;
  j["status"] = report.status;
  j["abort_reason"] = report.abort_reason;
  j["abort_time"] = report.abort_time;
  j["duration_seconds"] = report.duration_seconds;
  j["fatal_failure"] = report.fatal_failure;
  j["config"] = config_json(report.config);
  if (report.sim_metrics) {
    json m;
    m["min_h"] = report.sim_metrics->min_h;
    m["min_psi"] = report.sim_metrics->min_psi;
    m["max_input_norm"] = report.sim_metrics->max_input_norm;
    m["final_h"] = report.sim_metrics->final_h;
    m["wall_steps"] = report.sim_metrics->wall_steps;
    j["metrics"] = m;
  } else {
    j["metrics"] = json();
  }
  json v = json::array();
  for (const VerificationReport& r : report.verifications) {
    v.push_back(verification_json(r));
  }
  j["verifications"] = v;
  j["trajectory"] = report.trajectory_path;
  return j.dump(2) + "\n";
}

std::string verifications_to_json(
    const ScenarioConfig& cfg, const std::vector<VerificationReport>& reports) {
  json j;
  j["schema_version"] = 1;
  j["config"] = config_json(cfg);
  json v = json::array();
  for (const VerificationReport& r : reports) v.push_back(verification_json(r));
  j["verifications"] = v;
  bool all_pass = true;
  for (const VerificationReport& r : reports) all_pass = all_pass && r.pass;
  j["all_pass"] = all_pass;
  return j.dump(2) + "\n";
}

std::string verification_summary(const VerificationReport& report) {
  std::ostringstream out;
  out << report.condition << ": " << (report.pass ? "PASS" : "FAIL")
      << " (samples=" << report.samples
      << ", qualifying=" << report.qualifying
      << ", violations=" << report.violations.size() << ")";
  if (report.vacuous) out << " [vacuous]";
  return out.str();
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  if (cfg.scenario == ScenarioKind::custom) {
    throw ConfigError("scenario",
                      "custom fixtures are verify-only; use the verify "
                      "command");
  }
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config = cfg;

  ScenarioBundle b = build_scenario(cfg);
  rep.config.x0 = to_std(b.sim.x0);  // echo the resolved initial state
  std::filesystem::create_directories(cfg.out);

  if (cfg.run_verify) rep.verifications = method_checks(cfg, b);

  Trajectory tr;
  try {
    tr = simulate(b.sys, b.h, b.psi, b.filter, b.sim);
  } catch (const FilterInfeasible& e) {
    tr = e.partial;
    rep.status = "aborted";
    rep.abort_reason = std::string("filter infeasible: ") + e.what();
    rep.abort_time = e.time;
  } catch (const IntegrationAborted& e) {
    tr = e.partial;
    rep.status = "aborted";
    rep.abort_reason =
        "integration aborted (" + e.cause + "): " + e.what();
    rep.abort_time = e.time;
  } catch (const InfeasibleError& e) {
    rep.status = "aborted";
    rep.abort_reason =
        std::string("filter infeasible at the initial state: ") + e.what();
  } catch (const DegenerateDenominator& e) {
    rep.status = "aborted";
    rep.abort_reason =
        std::string("filter degenerate at the initial state: ") + e.what();
  } catch (const DomainError& e) {
    rep.status = "aborted";
    rep.abort_reason =
        std::string("domain error at the initial state: ") + e.what();
  }

  if (!tr.rows.empty()) {
    rep.sim_metrics = metrics(tr);
    rep.trajectory_path =
        (std::filesystem::path(cfg.out) / "trajectory.csv").string();
    write_trajectory_csv(tr, rep.trajectory_path);
  }

  bool verify_failed = false;
  for (const VerificationReport& r : rep.verifications) {
    verify_failed = verify_failed || !r.pass;
  }
  rep.fatal_failure =
      rep.status != "ok" || (cfg.fatal_verify && verify_failed);

  const auto t_end = std::chrono::steady_clock::now();
  rep.duration_seconds =
      std::chrono::duration<double>(t_end - t_start).count();

  rep.report_path = (std::filesystem::path(cfg.out) / "report.json").string();
  write_text_file(rep.report_path, report_to_json(rep));
  return rep;
}

std::vector<VerificationReport> verify_scenario(const ScenarioConfig& cfg) {
  ScenarioBundle b = build_scenario(cfg);
  std::vector<VerificationReport> reports = method_checks(cfg, b);
  std::filesystem::create_directories(cfg.out);
  const std::string path =
      (std::filesystem::path(cfg.out) / "verify.json").string();
  write_text_file(path, verifications_to_json(cfg, reports));
  return reports;
}

}  // namespace odcbf
