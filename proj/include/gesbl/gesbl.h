#ifndef GESBL_GESBL_H
#define GESBL_GESBL_H

#include <stdint.h>

#if defined(_WIN32)
#define GESBL_API __declspec(dllexport)
#else
#define GESBL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values are stable. */
typedef enum gesbl_status {
  GESBL_OK = 0,
  GESBL_ERR_INVALID_ARGUMENT = 1,
  GESBL_ERR_DIMENSION_MISMATCH = 2,
  GESBL_ERR_GENERATION_BUDGET = 3,
  GESBL_ERR_INSUFFICIENT_DATA = 4,
  GESBL_ERR_EMPTY_DICTIONARY = 5,
  GESBL_ERR_SINGULAR_SYSTEM = 6,
  GESBL_ERR_DEGENERATE_TRUTH = 7,
  GESBL_ERR_IO = 8,
  GESBL_ERR_PARSE = 9,
  GESBL_ERR_MISMATCHED_MANIFEST = 10,
  GESBL_ERR_INTERNAL = 100
} gesbl_status;

typedef struct gesbl_config gesbl_config;
typedef struct gesbl_report gesbl_report;

GESBL_API const char* gesbl_status_name(gesbl_status status);
/* Message of the last failure on the calling thread; "" if none. */
GESBL_API const char* gesbl_last_error(void);
GESBL_API const char* gesbl_version(void);

/* Experiment configuration. */
GESBL_API gesbl_status gesbl_config_default(gesbl_config** out);
GESBL_API gesbl_status gesbl_config_from_json(const char* text, gesbl_config** out);
GESBL_API gesbl_status gesbl_config_from_file(const char* path, gesbl_config** out);
GESBL_API void gesbl_config_free(gesbl_config* cfg);
/* Setters leave the config unchanged when they fail. */
GESBL_API gesbl_status gesbl_config_set_seed(gesbl_config* cfg, uint64_t seed);
GESBL_API gesbl_status gesbl_config_set_runs(gesbl_config* cfg, int runs);
GESBL_API gesbl_status gesbl_config_set_solver(gesbl_config* cfg, const char* solver);
/* Comma-separated list of gesbl, sbl, gsbl. */
GESBL_API gesbl_status gesbl_config_set_modes(gesbl_config* cfg, const char* modes);
GESBL_API gesbl_status gesbl_config_set_jobs(gesbl_config* cfg, int jobs);
GESBL_API gesbl_status gesbl_config_set_fix_lambda(gesbl_config* cfg, int fix);
GESBL_API gesbl_status gesbl_config_set_emit_curves(gesbl_config* cfg, int emit);
/* *out is released with gesbl_string_free. */
GESBL_API gesbl_status gesbl_config_to_json(const gesbl_config* cfg, char** out);
GESBL_API void gesbl_string_free(char* s);

/* Campaign commands. Per-run failures are recorded in the outputs and do not
 * produce an error status. */
GESBL_API gesbl_status gesbl_simulate(const gesbl_config* cfg, const char* out_dir);
GESBL_API gesbl_status gesbl_infer(const gesbl_config* cfg, const char* dir);
GESBL_API gesbl_status gesbl_evaluate(const gesbl_config* cfg, const char* dir, gesbl_report** out);
GESBL_API gesbl_status gesbl_montecarlo(const gesbl_config* cfg, const char* out_dir,
                                        gesbl_report** out);

/* Report accessors. Returned strings live as long as the report. */
GESBL_API const char* gesbl_report_json(const gesbl_report* report);
GESBL_API const char* gesbl_report_table(const gesbl_report* report);
GESBL_API int gesbl_report_failed_runs(const gesbl_report* report);
GESBL_API void gesbl_report_free(gesbl_report* report);

#ifdef __cplusplus
}
#endif

#endif /* GESBL_GESBL_H */
