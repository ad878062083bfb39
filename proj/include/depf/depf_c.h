/* C interface to the DEPF library. All handles are opaque; every call that
 * can fail returns a depf_status and leaves a message for depf_last_error().
 * Strings returned through char** are owned by the caller and released with
 * depf_string_free(). */
#ifndef DEPF_C_H
#define DEPF_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DEPF_API __declspec(dllexport)
#else
#define DEPF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum depf_status {
  DEPF_OK = 0,
  DEPF_ERR_CONFIG = 1,    /* invalid configuration or argument */
  DEPF_ERR_NUMERICAL = 2, /* non-PD covariance, non-finite state */
  DEPF_ERR_PROTOCOL = 3,  /* call sequence violated */
  DEPF_ERR_IO = 4,        /* file could not be read or written */
  DEPF_ERR_INTERNAL = 5
} depf_status;

typedef enum depf_termination {
  DEPF_TERM_AGDC = 0,
  DEPF_TERM_TIMEOUT = 1,
  DEPF_TERM_DEGENERATE = 2
} depf_termination;

typedef struct depf_config depf_config;
typedef struct depf_batch depf_batch;

typedef struct depf_episode_result {
  uint64_t seed;
  int success;
  int steps_used;
  double distance;
  double wall_seconds;
  double final_lps;
  depf_termination termination;
} depf_episode_result;

typedef struct depf_metrics {
  size_t episodes;
  size_t successes;
  double oce, oce_std;
  int ade_timeout; /* 1 when no episode succeeded; ade and rev are NaN then */
  double ade, ade_std;
  double rev, rev_std;
  double lps, lps_std;
  double steps, steps_std;
  double timeout_rate;
  double degenerate_rate;
} depf_metrics;

typedef struct depf_spsi_report {
  size_t episodes;
  size_t steps_checked;
  size_t violations; /* belief updates with a particle outside the prior box */
  size_t successes;
} depf_spsi_report;

/* Message for the most recent failure on the calling thread ("" if none). */
DEPF_API const char* depf_last_error(void);
DEPF_API const char* depf_version(void);
DEPF_API void depf_string_free(char* s);

DEPF_API depf_status depf_config_new(depf_config** out);
DEPF_API depf_status depf_config_from_json(const char* json, depf_config** out);
DEPF_API depf_status depf_config_load(const char* path, depf_config** out);
DEPF_API depf_status depf_config_clone(const depf_config* cfg, depf_config** out);
DEPF_API void depf_config_free(depf_config* cfg);
/* "key=value", nested keys dotted: "depf.delta_margin=0.5". */
DEPF_API depf_status depf_config_set(depf_config* cfg, const char* assignment);
/* Value of one (dotted) key as JSON text. */
DEPF_API depf_status depf_config_get(const depf_config* cfg, const char* key, char** out);
DEPF_API depf_status depf_config_to_json(const depf_config* cfg, char** out);
DEPF_API depf_status depf_config_validate(const depf_config* cfg);

DEPF_API depf_status depf_run_episode(const depf_config* cfg, uint64_t seed,
                                      depf_episode_result* out);

DEPF_API depf_status depf_run_batch(const depf_config* cfg, depf_batch** out);
DEPF_API void depf_batch_free(depf_batch* batch);
DEPF_API size_t depf_batch_size(const depf_batch* batch);
DEPF_API depf_status depf_batch_episode(const depf_batch* batch, size_t index,
                                        depf_episode_result* out);
DEPF_API depf_status depf_batch_metrics(const depf_batch* batch, depf_metrics* out);
DEPF_API depf_status depf_batch_summary_json(const depf_batch* batch, char** out);
DEPF_API depf_status depf_batch_episodes_csv(const depf_batch* batch, int include_wall,
                                             char** out);
/* One table1.csv row for this batch's (scale, scenario, method) cell. */
DEPF_API depf_status depf_batch_table1_row(const depf_batch* batch, char** out);
DEPF_API depf_status depf_table1_header(char** out);

/* Runs the configured batch with the bootstrap filter and checks that every
 * particle position stays inside the prior box at every step. */
DEPF_API depf_status depf_spsi_check(const depf_config* cfg, depf_spsi_report* out);

#ifdef __cplusplus
}
#endif

#endif /* DEPF_C_H */
