#include "nusim/nusim.h"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nusim/acceptance.hpp"
#include "nusim/config.hpp"
#include "nusim/ensemble.hpp"
#include "nusim/errors.hpp"
#include "nusim/oracle.hpp"
#include "nusim/report_io.hpp"
#include "nusim/scenario_library.hpp"

struct nusim_scenario {
  nusim::Scenario scenario;
};

struct nusim_report {
  nusim::EnsembleReport report;
};

struct nusim_trajectory {
  nusim::TrajectoryRecord record;
};

struct nusim_law {
  std::string scenario;
  std::vector<nusim::LawEntry> entries;
};

namespace {

thread_local std::string last_error;

nusim_status fail(nusim_status s, std::string message) {
  last_error = std::move(message);
  return s;
}

// Maps exceptions from the core onto status codes.
template <class F>
nusim_status guard(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const nusim::ParseError& e) {
    return fail(NUSIM_E_PARSE, e.what());
  } catch (const nusim::ConfigError& e) {
    return fail(NUSIM_E_CONFIG, e.what());
  } catch (const nusim::OracleError& e) {
    return fail(NUSIM_E_ORACLE, e.what());
  } catch (const nusim::ContractViolation& e) {
    return fail(NUSIM_E_ENGINE, e.what());
  } catch (const nusim::DegenerateSystem& e) {
    return fail(NUSIM_E_ENGINE, e.what());
  } catch (const nusim::StepSizeError& e) {
    return fail(NUSIM_E_ENGINE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NUSIM_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NUSIM_E_INTERNAL, e.what());
  }
}

bool to_stdout(const char* path) { return path == nullptr || std::string(path) == "-"; }

template <class Writer>
nusim_status write_to(const char* path, Writer&& w) {
  if (to_stdout(path)) {
    w(std::cout);
    std::cout.flush();
    return std::cout ? NUSIM_OK : fail(NUSIM_E_IO, "cannot write to stdout");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return fail(NUSIM_E_IO, std::string("cannot open '") + path + "' for writing");
  w(out);
  out.flush();
  return out ? NUSIM_OK : fail(NUSIM_E_IO, std::string("write to '") + path + "' failed");
}

const std::vector<std::string>& builtins() {
  static const std::vector<std::string> names = nusim::builtin_names();
  return names;
}

#define NUSIM_REQUIRE(cond, what) \
  if (!(cond)) return fail(NUSIM_E_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* nusim_version(void) { return "1.0.0"; }

const char* nusim_status_name(nusim_status status) {
  switch (status) {
    case NUSIM_OK: return "ok";
    case NUSIM_E_INVALID_ARGUMENT: return "invalid argument";
    case NUSIM_E_UNKNOWN_SCENARIO: return "unknown scenario";
    case NUSIM_E_PARSE: return "parse error";
    case NUSIM_E_CONFIG: return "config error";
    case NUSIM_E_IO: return "i/o error";
    case NUSIM_E_ORACLE: return "oracle error";
    case NUSIM_E_ENGINE: return "engine error";
    case NUSIM_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* nusim_last_error(void) { return last_error.c_str(); }

size_t nusim_builtin_count(void) { return builtins().size(); }

const char* nusim_builtin_name(size_t index) {
  return index < builtins().size() ? builtins()[index].c_str() : nullptr;
}

nusim_status nusim_scenario_builtin(const char* name, nusim_scenario** out) {
  NUSIM_REQUIRE(name && out, "name and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    bool known = false;
    for (const auto& n : builtins()) known = known || n == name;
    if (!known) return fail(NUSIM_E_UNKNOWN_SCENARIO, std::string("unknown scenario '") + name + "'");
    *out = new nusim_scenario{nusim::builtin(name)};
    return NUSIM_OK;
  });
}

nusim_status nusim_scenario_parse(const char* yaml, nusim_scenario** out) {
  NUSIM_REQUIRE(yaml && out, "yaml and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    *out = new nusim_scenario{nusim::parse_config(yaml)};
    return NUSIM_OK;
  });
}

nusim_status nusim_scenario_load(const char* path, nusim_scenario** out) {
  NUSIM_REQUIRE(path && out, "path and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail(NUSIM_E_IO, std::string("cannot open '") + path + "'");
    *out = new nusim_scenario{nusim::load_config(path)};
    return NUSIM_OK;
  });
}

void nusim_scenario_free(nusim_scenario* scenario) { delete scenario; }

const char* nusim_scenario_name(const nusim_scenario* scenario) {
  return scenario ? scenario->scenario.name.c_str() : nullptr;
}

nusim_status nusim_scenario_set_horizon(nusim_scenario* scenario, double horizon) {
  NUSIM_REQUIRE(scenario, "scenario must not be NULL");
  NUSIM_REQUIRE(horizon > 0.0 && !std::isnan(horizon), "horizon must be positive");
  return guard([&] {
    auto copy = scenario->scenario;
    if (std::isinf(horizon))
      copy.horizon.reset();
    else
      copy.horizon = horizon;
    nusim::validate(copy);
    scenario->scenario = std::move(copy);
    return NUSIM_OK;
  });
}

nusim_status nusim_scenario_set_blocking(nusim_scenario* scenario, int enabled) {
  NUSIM_REQUIRE(scenario, "scenario must not be NULL");
  scenario->scenario.blocking = enabled != 0;
  return NUSIM_OK;
}

nusim_status nusim_scenario_export(const nusim_scenario* scenario, const char* path) {
  NUSIM_REQUIRE(scenario, "scenario must not be NULL");
  return guard([&] {
    const auto text = nusim::export_config(scenario->scenario);
    return write_to(path, [&](std::ostream& o) { o << text; });
  });
}

size_t nusim_scenario_component_count(const nusim_scenario* scenario) {
  return scenario ? scenario->scenario.components.size() : 0;
}

const char* nusim_scenario_component_id(const nusim_scenario* scenario, size_t index) {
  if (!scenario || index >= scenario->scenario.components.size()) return nullptr;
  return scenario->scenario.components[index].id.c_str();
}

void nusim_run_options_init(nusim_run_options* options) {
  if (!options) return;
  options->trials = 10000;
  options->master_seed = 1;
  options->parallelism = 0;
  options->sample_interval = 0.0;
  options->keep_outcomes = 0;
}

nusim_status nusim_run(const nusim_scenario* scenario, const nusim_run_options* options, nusim_report** out) {
  NUSIM_REQUIRE(scenario && options && out, "scenario, options and out must not be NULL");
  NUSIM_REQUIRE(options->trials > 0, "trials must be positive");
  NUSIM_REQUIRE(options->sample_interval >= 0.0, "sample interval must not be negative");
  *out = nullptr;
  return guard([&] {
    nusim::EnsembleOptions eo;
    eo.trials = options->trials;
    eo.master_seed = options->master_seed;
    eo.parallelism = options->parallelism;
    eo.engine.sample_interval = options->sample_interval;
    eo.keep_outcomes = options->keep_outcomes != 0;
    *out = new nusim_report{nusim::run_ensemble(nusim::compile(scenario->scenario), eo)};
    return NUSIM_OK;
  });
}

void nusim_report_free(nusim_report* report) { delete report; }

size_t nusim_report_label_count(const nusim_report* report) { return report ? report->report.labels.size() : 0; }

nusim_status nusim_report_label(const nusim_report* report, size_t index, const char** label, uint64_t* count,
                                double* frequency, double* std_error) {
  NUSIM_REQUIRE(report && index < report->report.labels.size(), "label index out of range");
  const auto& l = report->report.labels[index];
  if (label) *label = l.label.c_str();
  if (count) *count = l.count;
  if (frequency) *frequency = l.frequency;
  if (std_error) *std_error = l.std_error;
  return NUSIM_OK;
}

uint64_t nusim_report_trials(const nusim_report* report) { return report ? report->report.trials : 0; }

unsigned nusim_report_parallelism(const nusim_report* report) { return report ? report->report.parallelism : 0; }

double nusim_report_wall_seconds(const nusim_report* report) { return report ? report->report.wall_seconds : 0.0; }

uint64_t nusim_report_invariant_violations(const nusim_report* report) {
  return report ? report->report.invariants.total() : 0;
}

double nusim_report_max_drift(const nusim_report* report) {
  return report ? report->report.invariants.max_modulus_drift : 0.0;
}

nusim_status nusim_report_write_csv(const nusim_report* report, const char* path) {
  NUSIM_REQUIRE(report, "report must not be NULL");
  return guard([&] { return write_to(path, [&](std::ostream& o) { nusim::write_summary_csv(o, report->report); }); });
}

nusim_status nusim_report_write_json(const nusim_report* report, const nusim_law* exact, const char* path) {
  NUSIM_REQUIRE(report, "report must not be NULL");
  return guard([&] {
    const std::vector<nusim::LawEntry> none;
    return write_to(path, [&](std::ostream& o) {
      nusim::write_summary_json(o, report->report, exact ? exact->entries : none);
    });
  });
}

nusim_status nusim_oracle_law(const nusim_scenario* scenario, int fine_grid, nusim_law** out) {
  NUSIM_REQUIRE(scenario && out, "scenario and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    nusim::OracleOptions opts;
    opts.fine_grid = fine_grid != 0;
    auto law = nusim::outcome_law(scenario->scenario, opts);
    *out = new nusim_law{scenario->scenario.name, std::move(law)};
    return NUSIM_OK;
  });
}

void nusim_law_free(nusim_law* law) { delete law; }

size_t nusim_law_count(const nusim_law* law) { return law ? law->entries.size() : 0; }

nusim_status nusim_law_entry(const nusim_law* law, size_t index, const char** label, double* probability) {
  NUSIM_REQUIRE(law && index < law->entries.size(), "law index out of range");
  if (label) *label = law->entries[index].label.c_str();
  if (probability) *probability = law->entries[index].probability;
  return NUSIM_OK;
}

nusim_status nusim_law_write_json(const nusim_law* law, const char* path) {
  NUSIM_REQUIRE(law, "law must not be NULL");
  return guard(
      [&] { return write_to(path, [&](std::ostream& o) { nusim::write_law_json(o, law->scenario, law->entries); }); });
}

nusim_status nusim_oracle_hit_cdf(const nusim_scenario* scenario, const char* component, const char* from,
                                  size_t n, const double* times, double* values, double* limit,
                                  double* support_end) {
  NUSIM_REQUIRE(scenario && component, "scenario and component must not be NULL");
  NUSIM_REQUIRE(n == 0 || (times && values), "times and values must not be NULL");
  return guard([&] {
    const auto model = nusim::compile(scenario->scenario);
    std::optional<std::string_view> origin;
    if (from) origin = from;
    const auto cdf = nusim::hit_time_cdf(*model, component, origin);
    for (size_t i = 0; i < n; ++i) values[i] = cdf(times[i]);
    if (limit) *limit = cdf.limit();
    if (support_end) *support_end = cdf.support_end();
    return NUSIM_OK;
  });
}

nusim_status nusim_trace(const nusim_scenario* scenario, uint64_t seed, double sample_interval,
                         nusim_trajectory** out) {
  NUSIM_REQUIRE(scenario && out, "scenario and out must not be NULL");
  NUSIM_REQUIRE(sample_interval >= 0.0, "sample interval must not be negative");
  *out = nullptr;
  return guard([&] {
    nusim::EngineOptions eo;
    eo.sample_interval = sample_interval;
    *out = new nusim_trajectory{nusim::run_trajectory(nusim::compile(scenario->scenario), seed, eo)};
    return NUSIM_OK;
  });
}

void nusim_trajectory_free(nusim_trajectory* trajectory) { delete trajectory; }

const char* nusim_trajectory_outcome(const nusim_trajectory* trajectory) {
  return trajectory ? trajectory->record.outcome.c_str() : nullptr;
}

size_t nusim_trajectory_event_count(const nusim_trajectory* trajectory) {
  return trajectory ? trajectory->record.events.size() : 0;
}

const char* nusim_trajectory_failure(const nusim_trajectory* trajectory) {
  return trajectory && trajectory->record.failure ? trajectory->record.failure->c_str() : nullptr;
}

nusim_status nusim_trajectory_write_jsonl(const nusim_trajectory* trajectory, int weights, const char* path) {
  NUSIM_REQUIRE(trajectory, "trajectory must not be NULL");
  return guard([&] {
    return write_to(path, [&](std::ostream& o) { nusim::write_trajectory_jsonl(o, trajectory->record, weights != 0); });
  });
}

nusim_status nusim_verify(uint64_t master_seed, unsigned parallelism, nusim_criterion_callback callback, void* user,
                          int* all_passed) {
  return guard([&] {
    nusim::AcceptanceOptions opts;
    opts.master_seed = master_seed;
    opts.parallelism = parallelism;
    if (callback)
      opts.on_result = [&](const nusim::CriterionResult& r) {
        const auto line = nusim::format_result(r);
        callback(r.id, r.passed ? 1 : 0, line.c_str(), user);
      };
    bool ok = true;
    for (const auto& r : nusim::run_acceptance(opts)) ok = ok && r.passed;
    if (all_passed) *all_passed = ok ? 1 : 0;
    return NUSIM_OK;
  });
}

}  // extern "C"
