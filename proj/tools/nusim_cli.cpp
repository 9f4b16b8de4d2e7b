// nusim command-line front end. Talks to the simulator only through the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nusim/nusim.h"

namespace {

enum ExitCode { kOk = 0, kFailed = 1, kUsage = 2, kRuntime = 3 };

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };
Level g_level = Level::Warn;

void log(Level at, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (at <= g_level) std::cerr << "nusim: " << names[static_cast<int>(at)] << ": " << msg << "\n";
}

struct ScenarioDeleter {
  void operator()(nusim_scenario* p) const { nusim_scenario_free(p); }
};
using ScenarioPtr = std::unique_ptr<nusim_scenario, ScenarioDeleter>;

struct Failure {
  int code;
};

int code_for(nusim_status s) {
  switch (s) {
    case NUSIM_OK: return kOk;
    case NUSIM_E_UNKNOWN_SCENARIO:
    case NUSIM_E_INVALID_ARGUMENT: return kUsage;
    default: return kRuntime;
  }
}

// Throws Failure after logging the C API message.
void check(nusim_status s, const std::string& what) {
  if (s == NUSIM_OK) return;
  log(Level::Error, what + ": " + nusim_status_name(s) + ": " + nusim_last_error());
  throw Failure{code_for(s)};
}

struct Source {
  std::string scenario;
  std::string config;
  std::optional<double> horizon;
  bool no_blocking = false;

  void attach(CLI::App* cmd) {
    auto* s = cmd->add_option("-s,--scenario", scenario, "built-in scenario name");
    auto* c = cmd->add_option("-c,--config", config, "scenario config file (YAML)")->check(CLI::ExistingFile);
    s->excludes(c);
    cmd->add_option("--horizon", horizon, "override the scenario horizon")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-blocking", no_blocking, "disable transition blocking (diagnostic)");
  }

  ScenarioPtr open() const {
    nusim_scenario* raw = nullptr;
    if (!scenario.empty()) {
      check(nusim_scenario_builtin(scenario.c_str(), &raw), "scenario '" + scenario + "'");
    } else if (!config.empty()) {
      check(nusim_scenario_load(config.c_str(), &raw), "config '" + config + "'");
    } else {
      log(Level::Error, "one of --scenario or --config is required");
      throw Failure{kUsage};
    }
    ScenarioPtr sc(raw);
    if (horizon) check(nusim_scenario_set_horizon(sc.get(), *horizon), "--horizon");
    if (no_blocking) {
      check(nusim_scenario_set_blocking(sc.get(), 0), "--no-blocking");
      log(Level::Warn, "transition blocking disabled; results are diagnostic only");
    }
    log(Level::Debug, std::string("scenario ") + nusim_scenario_name(sc.get()));
    return sc;
  }
};

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (size_t i = 0; i < nusim_builtin_count(); ++i) out.emplace_back(nusim_builtin_name(i));
  return out;
}

int cmd_run(const Source& src, const nusim_run_options& opts, const std::string& output, bool exact) {
  auto sc = src.open();
  nusim_law* law = nullptr;
  if (exact && nusim_oracle_law(sc.get(), 0, &law) != NUSIM_OK) {
    log(Level::Warn, std::string("exact law unavailable: ") + nusim_last_error());
    law = nullptr;
  }
  std::unique_ptr<nusim_law, decltype(&nusim_law_free)> law_guard(law, nusim_law_free);

  nusim_report* raw = nullptr;
  log(Level::Info, "running " + std::to_string(opts.trials) + " trajectories");
  check(nusim_run(sc.get(), &opts, &raw), "run");
  std::unique_ptr<nusim_report, decltype(&nusim_report_free)> rep(raw, nusim_report_free);
  log(Level::Info, "done in " + std::to_string(nusim_report_wall_seconds(raw)) + " s on " +
                       std::to_string(nusim_report_parallelism(raw)) + " worker(s)");

  if (output.empty() || output == "-") {
    check(nusim_report_write_csv(raw, "-"), "write summary");
  } else {
    const std::string csv = output + ".csv";
    const std::string json = output + ".json";
    check(nusim_report_write_csv(raw, csv.c_str()), "write " + csv);
    check(nusim_report_write_json(raw, law, json.c_str()), "write " + json);
    log(Level::Info, "wrote " + csv + " and " + json);
  }
  if (const auto bad = nusim_report_invariant_violations(raw)) {
    log(Level::Warn, std::to_string(bad) + " invariant violation(s); see the structured summary");
  }
  return kOk;
}

int cmd_oracle(const Source& src, bool fine_grid, int points, std::optional<double> until,
               const std::string& from, bool cdf, const std::string& output) {
  auto sc = src.open();
  nusim_law* raw = nullptr;
  check(nusim_oracle_law(sc.get(), fine_grid ? 1 : 0, &raw), "oracle");
  std::unique_ptr<nusim_law, decltype(&nusim_law_free)> law(raw, nusim_law_free);

  nlohmann::ordered_json doc;
  doc["scenario"] = nusim_scenario_name(sc.get());
  doc["method"] = fine_grid ? "fine-grid" : "closed-form";
  auto& entries = doc["law"] = nlohmann::ordered_json::array();
  for (size_t i = 0; i < nusim_law_count(raw); ++i) {
    const char* label = nullptr;
    double p = 0.0;
    check(nusim_law_entry(raw, i, &label, &p), "law entry");
    entries.push_back({{"label", label}, {"probability", p}});
  }

  if (cdf) {
    auto& cdfs = doc["hit_time_cdf"] = nlohmann::ordered_json::array();
    const char* origin = from.empty() ? nullptr : from.c_str();
    for (size_t k = 0; k < nusim_scenario_component_count(sc.get()); ++k) {
      const std::string id = nusim_scenario_component_id(sc.get(), k);
      double limit = 0.0, end = 0.0;
      if (nusim_oracle_hit_cdf(sc.get(), id.c_str(), origin, 0, nullptr, nullptr, &limit, &end) != NUSIM_OK) {
        log(Level::Debug, "no hit-time law for " + id + ": " + nusim_last_error());
        continue;
      }
      if (limit <= 0.0) continue;
      double t_max = until.value_or(std::isfinite(end) ? end : 10.0);
      if (!(t_max > 0.0)) t_max = 1.0;
      std::vector<double> times(static_cast<size_t>(points)), values(times.size());
      for (int i = 0; i < points; ++i) times[i] = t_max * i / (points - 1);
      check(nusim_oracle_hit_cdf(sc.get(), id.c_str(), origin, times.size(), times.data(), values.data(), nullptr,
                                 nullptr),
            "hit-time cdf");
      nlohmann::ordered_json row;
      row["component"] = id;
      if (origin) row["from"] = from;
      row["limit"] = limit;
      if (std::isfinite(end)) row["support_end"] = end;
      else row["support_end"] = nullptr;
      auto& pts = row["points"] = nlohmann::ordered_json::array();
      for (size_t i = 0; i < times.size(); ++i) pts.push_back({times[i], values[i]});
      cdfs.push_back(std::move(row));
    }
  }

  const std::string text = doc.dump(2) + "\n";
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!(out << text)) {
      log(Level::Error, "cannot write " + output);
      return kRuntime;
    }
  }
  return kOk;
}

int cmd_trace(const Source& src, std::uint64_t seed, double sample_interval, bool weights, const std::string& output) {
  auto sc = src.open();
  nusim_trajectory* raw = nullptr;
  check(nusim_trace(sc.get(), seed, sample_interval, &raw), "trace");
  std::unique_ptr<nusim_trajectory, decltype(&nusim_trajectory_free)> tr(raw, nusim_trajectory_free);
  check(nusim_trajectory_write_jsonl(raw, weights ? 1 : 0, output.empty() ? "-" : output.c_str()), "write trace");
  log(Level::Info, std::string("outcome ") + nusim_trajectory_outcome(raw) + ", " +
                       std::to_string(nusim_trajectory_event_count(raw)) + " events");
  if (const char* f = nusim_trajectory_failure(raw)) {
    log(Level::Error, std::string("trajectory failed: ") + f);
    return kRuntime;
  }
  return kOk;
}

int cmd_export(const std::string& name, const std::string& output) {
  nusim_scenario* raw = nullptr;
  check(nusim_scenario_builtin(name.c_str(), &raw), "scenario '" + name + "'");
  ScenarioPtr sc(raw);
  check(nusim_scenario_export(raw, output.empty() ? "-" : output.c_str()), "export");
  return kOk;
}

int cmd_verify(std::uint64_t seed, unsigned parallelism) {
  int all = 0;
  auto print = [](int, int, const char* line, void*) {
    std::cout << line << std::endl;
  };
  check(nusim_verify(seed, parallelism, print, nullptr, &all), "verify");
  std::cout << (all ? "all criteria passed" : "acceptance FAILED") << std::endl;
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nusim: stochastic collapse simulator for decoherent branches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nusim_version()));
  std::string level = "warn";
  app.add_option("--log-level", level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();

  const std::string names = [] {
    std::string s;
    for (const auto& n : builtin_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }();

  // run
  auto* run = app.add_subcommand("run", "Monte Carlo ensemble with summary statistics");
  Source run_src;
  run_src.attach(run);
  nusim_run_options run_opts;
  nusim_run_options_init(&run_opts);
  std::string run_out;
  bool run_exact = false;
  run->add_option("-n,--trials", run_opts.trials, "number of trajectories")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--master-seed", run_opts.master_seed, "seed of the ensemble")->capture_default_str();
  run->add_option("-j,--parallelism", run_opts.parallelism, "worker threads (default NUSIM_PARALLELISM or 1)")
      ->check(CLI::Range(1u, 1024u));
  run->add_option("-o,--output", run_out, "write <output>.csv and <output>.json instead of CSV on stdout");
  run->add_flag("--exact", run_exact, "include the exact outcome law in the JSON summary");
  run->add_option("--sample-interval", run_opts.sample_interval, "dense weight sampling step inside trajectories")
      ->check(CLI::NonNegativeNumber);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact outcome law and hit-time CDFs");
  Source or_src;
  or_src.attach(oracle);
  bool fine_grid = false, no_cdf = false;
  int cdf_points = 21;
  std::optional<double> cdf_until;
  std::string cdf_from, or_out;
  oracle->add_flag("--fine-grid", fine_grid, "integrate on a fine grid instead of closed forms");
  oracle->add_option("--cdf-points", cdf_points, "CDF sample points per component")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();
  oracle->add_option("--cdf-until", cdf_until, "last CDF sample time")->check(CLI::PositiveNumber);
  oracle->add_option("--cdf-from", cdf_from, "start from a lone realized instance of this component");
  oracle->add_flag("--no-cdf", no_cdf, "law only");
  oracle->add_option("-o,--output", or_out, "output path (default stdout)");

  // export-scenario
  auto* exp = app.add_subcommand("export-scenario", "write a built-in scenario as a config file");
  std::string exp_name, exp_out;
  exp->add_option("-s,--scenario,name", exp_name, "one of: " + names)->required();
  exp->add_option("-o,--output", exp_out, "output path (default stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "run the acceptance suite; exit 1 on any failure");
  std::uint64_t verify_seed = 20261019;
  unsigned verify_par = 0;
  verify->add_option("--master-seed", verify_seed, "suite seed")->capture_default_str();
  verify->add_option("-j,--parallelism", verify_par, "worker threads")->check(CLI::Range(1u, 1024u));

  // trace
  auto* trace = app.add_subcommand("trace", "single trajectory as JSON lines");
  Source tr_src;
  tr_src.attach(trace);
  std::uint64_t tr_seed = 1;
  double tr_sample = 0.0;
  bool tr_weights = false;
  std::string tr_out;
  trace->add_option("--master-seed,--seed", tr_seed, "trajectory seed")->capture_default_str();
  trace->add_option("--sample-interval", tr_sample, "dense weight samples every this much time")
      ->check(CLI::NonNegativeNumber);
  trace->add_flag("--weights", tr_weights, "list component weights in records with a snapshot");
  trace->add_option("-o,--output", tr_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  g_level = level == "error" ? Level::Error : level == "info" ? Level::Info : level == "debug" ? Level::Debug : Level::Warn;

  try {
    if (*run) return cmd_run(run_src, run_opts, run_out, run_exact);
    if (*oracle) return cmd_oracle(or_src, fine_grid, cdf_points, cdf_until, cdf_from, !no_cdf, or_out);
    if (*trace) return cmd_trace(tr_src, tr_seed, tr_sample, tr_weights, tr_out);
    if (*exp) return cmd_export(exp_name, exp_out);
    if (*verify) return cmd_verify(verify_seed, verify_par);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return kRuntime;
  }
  return kUsage;
}
