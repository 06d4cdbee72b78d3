#include <future>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odcbf/scenario.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string scenario;
  std::string method;
  std::string out;
  std::string dt;
  std::string t_final;
  std::string preset;
  std::string seed;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config,
                  "Key = value config file; flags override file values");
  cmd->add_option("--scenario", flags->scenario,
                  "double-integrator | satellite | custom");
  cmd->add_option("--method", flags->method,
                  "cbf | od-cbf | hocbf | od-hocbf | fixed-theta | recbf | "
                  "od-recbf");
  cmd->add_option("--out", flags->out, "Output directory");
  cmd->add_option("--dt", flags->dt, "Fixed integrator step (seconds)");
  cmd->add_option("--t-final", flags->t_final, "Simulation horizon (seconds)");
  cmd->add_option("--preset", flags->preset,
                  "Satellite initial state: paper-literal | consistent-orbit");
  cmd->add_option("--seed", flags->seed,
                  "Sampling seed, echoed into reports");
}

std::map<std::string, std::string> gather(const CommonFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!flags.config.empty()) kv = odcbf::parse_config_file(flags.config);
  if (!flags.scenario.empty()) kv["scenario"] = flags.scenario;
  if (!flags.method.empty()) kv["method"] = flags.method;
  if (!flags.out.empty()) kv["out"] = flags.out;
  if (!flags.dt.empty()) kv["dt"] = flags.dt;
  if (!flags.t_final.empty()) kv["t_final"] = flags.t_final;
  if (!flags.preset.empty()) kv["preset"] = flags.preset;
  if (!flags.seed.empty()) kv["seed"] = flags.seed;
  return kv;
}

void print_report(const odcbf::RunReport& rep) {
  if (rep.status == "ok") {
    std::cout << "status: ok\n";
  } else {
    std::cout << "status: aborted at t=" << rep.abort_time << "\n"
              << "reason: " << rep.abort_reason << "\n";
  }
  if (rep.sim_metrics) {
    const odcbf::SimMetrics& m = *rep.sim_metrics;
    std::cout << "steps: " << m.wall_steps << "\n"
              << "min h: " << m.min_h << "\n"
              << "min psi: " << m.min_psi << "\n"
              << "max |u|: " << m.max_input_norm << "\n"
              << "final h: " << m.final_h << "\n";
  }
  for (const odcbf::VerificationReport& r : rep.verifications) {
    std::cout << odcbf::verification_summary(r) << "\n";
  }
  if (!rep.trajectory_path.empty()) {
    std::cout << "trajectory: " << rep.trajectory_path << "\n";
  }
  std::cout << "report: " << rep.report_path << "\n";
}

int do_run(const CommonFlags& flags) {
  const odcbf::ScenarioConfig cfg = odcbf::resolve_config(gather(flags));
  const odcbf::RunReport rep = odcbf::run_scenario(cfg);
  print_report(rep);
  return rep.fatal_failure ? 1 : 0;
}

int do_verify(const CommonFlags& flags) {
  const odcbf::ScenarioConfig cfg = odcbf::resolve_config(gather(flags));
  const std::vector<odcbf::VerificationReport> reports =
      odcbf::verify_scenario(cfg);
  bool failed = false;
  for (const odcbf::VerificationReport& r : reports) {
    std::cout << odcbf::verification_summary(r) << "\n";
    failed = failed || !r.pass;
  }
  return (failed && cfg.fatal_verify) ? 1 : 0;
}

int do_batch(const std::vector<std::string>& configs, int jobs) {
  struct Outcome {
    std::string config;
    bool fatal = true;
    std::string line;
  };
  auto one = [](const std::string& path) {
    Outcome o;
    o.config = path;
    try {
      const odcbf::ScenarioConfig cfg =
          odcbf::resolve_config(odcbf::parse_config_file(path));
      const odcbf::RunReport rep = odcbf::run_scenario(cfg);
      o.fatal = rep.fatal_failure;
      o.line = rep.status == "ok" ? "ok" : "aborted: " + rep.abort_reason;
      if (rep.fatal_failure && rep.status == "ok") {
        o.line = "verification failed";
      }
    } catch (const std::exception& e) {
      o.fatal = true;
      o.line = std::string("error: ") + e.what();
    }
    return o;
  };

  std::vector<Outcome> outcomes(configs.size());
  if (jobs <= 1) {
    for (size_t i = 0; i < configs.size(); ++i) outcomes[i] = one(configs[i]);
  } else {
    std::vector<std::future<Outcome>> pending;
    for (size_t i = 0; i < configs.size(); ++i) {
      pending.push_back(
          std::async(std::launch::async, one, configs[i]));
      if (pending.size() == static_cast<size_t>(jobs) ||
          i + 1 == configs.size()) {
        const size_t base = i + 1 - pending.size();
        for (size_t k = 0; k < pending.size(); ++k) {
          outcomes[base + k] = pending[k].get();
        }
        pending.clear();
      }
    }
  }

  bool any_fatal = false;
  for (const Outcome& o : outcomes) {
    std::cout << o.config << ": " << o.line << "\n";
    any_fatal = any_fatal || o.fatal;
  }
  return any_fatal ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety filters for control-affine systems"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Simulate a filtered closed loop");
  add_common_flags(run_cmd, &run_flags);

  CommonFlags verify_flags;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Run the sampled validity checks for a scenario");
  add_common_flags(verify_cmd, &verify_flags);

  std::vector<std::string> batch_configs;
  int batch_jobs = 1;
  CLI::App* batch_cmd =
      app.add_subcommand("batch", "Run several configs, one report each");
  batch_cmd->add_option("configs", batch_configs, "Config files")->required();
  batch_cmd->add_option("--jobs", batch_jobs,
                        "Run up to this many configs concurrently");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run_cmd->parsed()) return do_run(run_flags);
    if (verify_cmd->parsed()) return do_verify(verify_flags);
    return do_batch(batch_configs, batch_jobs);
  } catch (const odcbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
