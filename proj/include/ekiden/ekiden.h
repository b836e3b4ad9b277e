/* C interface to the Ekiden simulation library.
 *
 * Opaque handles + status codes; every object returned through an out
 * parameter is owned by the caller and released with the matching
 * *_destroy(). Functions returning const char* keep ownership; the string
 * lives as long as the handle it came from. ekd_last_error() returns a
 * thread-local message for the most recent failure.
 */
#ifndef EKIDEN_H
#define EKIDEN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ekd_status {
  EKD_OK = 0,
  EKD_ERR_ARG = 1,     /* bad argument / null handle */
  EKD_ERR_CONFIG = 2,  /* scenario text failed to parse or validate */
  EKD_ERR_IO = 3,      /* file could not be read or written */
  EKD_ERR_RUNTIME = 4, /* simulation raised an internal error */
} ekd_status;

typedef struct ekd_sim ekd_sim;       /* a loaded scenario */
typedef struct ekd_report ekd_report; /* results of a run/bench/sweep/audit */

const char* ekd_version(void);
const char* ekd_last_error(void);

/* Scenario lifecycle. The JSON schema is documented in the README. */
ekd_status ekd_sim_create(const char* scenario_json, ekd_sim** out);
ekd_status ekd_sim_create_from_file(const char* path, ekd_sim** out);
void ekd_sim_destroy(ekd_sim* sim);

/* Executes the scenario workload and its closing audits. Audit verdicts are
 * part of the report: check ekd_report_ok(). */
ekd_status ekd_sim_run(const ekd_sim* sim, ekd_report** out);

/* Ledger writes per request for each batch size (the scenario's workload is
 * replayed per row, plus one cached read-only row). */
ekd_status ekd_sim_bench(const ekd_sim* sim, const uint64_t* batch_sizes, size_t n_batch_sizes,
                         ekd_report** out);

/* Monte Carlo sweep over the scenario's proof-of-publication grid. */
ekd_status ekd_sim_pop_sweep(const ekd_sim* sim, ekd_report** out);

/* Offline re-audit of a transcript produced by a run with "transcript": true. */
ekd_status ekd_audit_transcript_file(const char* path, ekd_report** out);

/* Report accessors. */
int ekd_report_ok(const ekd_report* report);          /* 1 iff every audit passed */
const char* ekd_report_text(const ekd_report* report);  /* human-readable summary */
const char* ekd_report_table(const ekd_report* report); /* tab-delimited rows */
const char* ekd_report_transcript(const ekd_report* report); /* "" unless recorded */
void ekd_report_destroy(ekd_report* report);

#ifdef __cplusplus
}
#endif

#endif /* EKIDEN_H */
