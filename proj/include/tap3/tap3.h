/* Stable C interface to the TAP3 simulator and protocol library.
 *
 * Every call returns a tap3_status. On failure, tap3_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * opaque and owned by the caller; release them with the matching _free. */

#ifndef TAP3_TAP3_H
#define TAP3_TAP3_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(TAP3_BUILDING_LIBRARY)
#define TAP3_API __attribute__((visibility("default")))
#else
#define TAP3_API
#endif

typedef enum tap3_status {
  TAP3_OK = 0,
  TAP3_ERR_ARGUMENT = 1,   /* null handle or malformed argument */
  TAP3_ERR_VALIDATION = 2, /* configuration rejected */
  TAP3_ERR_IO = 3,         /* file could not be read or written */
  TAP3_ERR_RUN = 4,        /* simulation or accounting failure */
  TAP3_ERR_AUDIT = 5       /* replayed audits disagree with the recording */
} tap3_status;

typedef struct tap3_scenario tap3_scenario;
typedef struct tap3_result tap3_result;

typedef struct tap3_metrics {
  const char* protocol; /* "tap3", "smprf" or "mprf"; owned by the library */
  double pause_time_s;
  uint64_t seed;
  int has_pdr; /* 0 when no data was sent */
  double pdr_percent;
  int has_delay; /* 0 when nothing was delivered */
  double avg_delay_s;
  double overhead_ratio; /* may be +inf */
  double detected_active;
  double detected_passive;
  double false_positives;
  uint64_t data_sent;
  uint64_t data_delivered;
  uint64_t control_tx;
  uint64_t privacy_leaks;
} tap3_metrics;

typedef struct tap3_audit_summary {
  uint64_t audits;
  uint64_t mismatches;
} tap3_audit_summary;

typedef void (*tap3_row_callback)(const char* row, void* user);

TAP3_API const char* tap3_version(void);
TAP3_API const char* tap3_last_error(void);

TAP3_API tap3_status tap3_scenario_load(const char* path, tap3_scenario** out);
TAP3_API tap3_status tap3_scenario_parse(const char* text, tap3_scenario** out);
TAP3_API tap3_status tap3_scenario_set_seed(tap3_scenario* scenario, uint64_t seed);
TAP3_API tap3_status tap3_scenario_set_pause(tap3_scenario* scenario, double pause_time_s);
TAP3_API tap3_status tap3_scenario_set_protocol(tap3_scenario* scenario, const char* name);
TAP3_API void tap3_scenario_free(tap3_scenario* scenario);

/* record_trace != 0 keeps the packet trace and audit evidence for
 * tap3_result_write_trace. */
TAP3_API tap3_status tap3_run(const tap3_scenario* scenario, int record_trace, tap3_result** out);
TAP3_API tap3_status tap3_result_metrics(const tap3_result* result, tap3_metrics* out);
/* Header line plus one metrics row; the string lives as long as the result. */
TAP3_API const char* tap3_result_csv(const tap3_result* result);
TAP3_API tap3_status tap3_result_write_csv(const tap3_result* result, const char* path);
/* Writes <path>, <path>.audit, <path>.reports and <path>.verdicts. */
TAP3_API tap3_status tap3_result_write_trace(const tap3_result* result, const char* path);
TAP3_API void tap3_result_free(tap3_result* result);

/* pauses: "start:stop:step" or a comma list; protocols: comma list;
 * seeds: "a..b" or a comma list. plots_dir may be NULL. */
TAP3_API tap3_status tap3_sweep(const tap3_scenario* base, const char* pauses,
                                const char* protocols, const char* seeds,
                                const char* csv_path, const char* plots_dir);

/* Replays the audits recorded next to a trace. Each recomputed report row is
 * passed to `on_row` when it is not NULL. Returns TAP3_ERR_AUDIT if any row
 * differs from the recording. */
TAP3_API tap3_status tap3_audit_trace(const char* trace_path, tap3_row_callback on_row,
                                      void* user, tap3_audit_summary* out);

#ifdef __cplusplus
}
#endif

#endif /* TAP3_TAP3_H */
