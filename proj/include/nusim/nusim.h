/* C interface to the nusim simulator. All handles are opaque; every call that
 * can fail returns a nusim_status and leaves a message for nusim_last_error()
 * on the calling thread. Output paths of NULL or "-" mean stdout. */
#ifndef NUSIM_NUSIM_H
#define NUSIM_NUSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NUSIM_API __declspec(dllexport)
#else
#define NUSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nusim_status {
  NUSIM_OK = 0,
  NUSIM_E_INVALID_ARGUMENT = 1,
  NUSIM_E_UNKNOWN_SCENARIO = 2,
  NUSIM_E_PARSE = 3,   /* malformed config text; line/column in the message */
  NUSIM_E_CONFIG = 4,  /* invalid config content; field path in the message */
  NUSIM_E_IO = 5,
  NUSIM_E_ORACLE = 6,  /* exact law unavailable (budget, recurrent model) */
  NUSIM_E_ENGINE = 7,  /* contract violation or degenerate state */
  NUSIM_E_INTERNAL = 8
} nusim_status;

typedef struct nusim_scenario nusim_scenario;
typedef struct nusim_report nusim_report;
typedef struct nusim_trajectory nusim_trajectory;
typedef struct nusim_law nusim_law;

NUSIM_API const char* nusim_version(void);
NUSIM_API const char* nusim_status_name(nusim_status status);
/* Message for the last failed call on this thread; "" if none. */
NUSIM_API const char* nusim_last_error(void);

/* Scenarios */
NUSIM_API size_t nusim_builtin_count(void);
NUSIM_API const char* nusim_builtin_name(size_t index);
NUSIM_API nusim_status nusim_scenario_builtin(const char* name, nusim_scenario** out);
NUSIM_API nusim_status nusim_scenario_parse(const char* yaml, nusim_scenario** out);
NUSIM_API nusim_status nusim_scenario_load(const char* path, nusim_scenario** out);
NUSIM_API void nusim_scenario_free(nusim_scenario* scenario);
NUSIM_API const char* nusim_scenario_name(const nusim_scenario* scenario);
/* horizon > 0; +inf removes the horizon. */
NUSIM_API nusim_status nusim_scenario_set_horizon(nusim_scenario* scenario, double horizon);
NUSIM_API nusim_status nusim_scenario_set_blocking(nusim_scenario* scenario, int enabled);
NUSIM_API nusim_status nusim_scenario_export(const nusim_scenario* scenario, const char* path);
NUSIM_API size_t nusim_scenario_component_count(const nusim_scenario* scenario);
NUSIM_API const char* nusim_scenario_component_id(const nusim_scenario* scenario, size_t index);

/* Ensembles */
typedef struct nusim_run_options {
  uint64_t trials;
  uint64_t master_seed;
  unsigned parallelism;   /* 0: NUSIM_PARALLELISM, else 1 */
  double sample_interval; /* > 0: dense weight samples in every trajectory */
  int keep_outcomes;
} nusim_run_options;

NUSIM_API void nusim_run_options_init(nusim_run_options* options);
NUSIM_API nusim_status nusim_run(const nusim_scenario* scenario, const nusim_run_options* options,
                                 nusim_report** out);
NUSIM_API void nusim_report_free(nusim_report* report);
NUSIM_API size_t nusim_report_label_count(const nusim_report* report);
NUSIM_API nusim_status nusim_report_label(const nusim_report* report, size_t index, const char** label,
                                          uint64_t* count, double* frequency, double* std_error);
NUSIM_API uint64_t nusim_report_trials(const nusim_report* report);
NUSIM_API unsigned nusim_report_parallelism(const nusim_report* report);
NUSIM_API double nusim_report_wall_seconds(const nusim_report* report);
/* Sum of all invariant counters (negative weights, realized-to-ready,
 * modulus drift, blocked weight, failed trajectories). */
NUSIM_API uint64_t nusim_report_invariant_violations(const nusim_report* report);
NUSIM_API double nusim_report_max_drift(const nusim_report* report);
NUSIM_API nusim_status nusim_report_write_csv(const nusim_report* report, const char* path);
/* exact may be NULL. */
NUSIM_API nusim_status nusim_report_write_json(const nusim_report* report, const nusim_law* exact,
                                               const char* path);

/* Exact outcome law */
NUSIM_API nusim_status nusim_oracle_law(const nusim_scenario* scenario, int fine_grid, nusim_law** out);
NUSIM_API void nusim_law_free(nusim_law* law);
NUSIM_API size_t nusim_law_count(const nusim_law* law);
NUSIM_API nusim_status nusim_law_entry(const nusim_law* law, size_t index, const char** label,
                                       double* probability);
NUSIM_API nusim_status nusim_law_write_json(const nusim_law* law, const char* path);
/* CDF of "the first collapse chooses `component` by time t", evaluated at
 * times[0..n). With `from` non-NULL the start is a lone realized instance of
 * that component at t = 0. limit and support_end may be NULL. */
NUSIM_API nusim_status nusim_oracle_hit_cdf(const nusim_scenario* scenario, const char* component, const char* from,
                                            size_t n, const double* times, double* values, double* limit,
                                            double* support_end);

/* Single trajectories */
NUSIM_API nusim_status nusim_trace(const nusim_scenario* scenario, uint64_t seed, double sample_interval,
                                   nusim_trajectory** out);
NUSIM_API void nusim_trajectory_free(nusim_trajectory* trajectory);
NUSIM_API const char* nusim_trajectory_outcome(const nusim_trajectory* trajectory);
NUSIM_API size_t nusim_trajectory_event_count(const nusim_trajectory* trajectory);
/* Non-NULL if the engine ended the trajectory on a contract violation. */
NUSIM_API const char* nusim_trajectory_failure(const nusim_trajectory* trajectory);
NUSIM_API nusim_status nusim_trajectory_write_jsonl(const nusim_trajectory* trajectory, int weights,
                                                    const char* path);

/* Acceptance suite */
typedef void (*nusim_criterion_callback)(int id, int passed, const char* line, void* user);

NUSIM_API nusim_status nusim_verify(uint64_t master_seed, unsigned parallelism, nusim_criterion_callback callback,
                                    void* user, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif
