#ifndef KDVLAB_KDVLAB_H
#define KDVLAB_KDVLAB_H

#include <stddef.h>

#if defined(_WIN32)
#define KDVLAB_API __declspec(dllexport)
#else
#define KDVLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kdvlab_status {
    KDVLAB_OK = 0,
    KDVLAB_INVALID_PARAMETER = 1,
    KDVLAB_DOMAIN_TOO_SMALL = 2,
    KDVLAB_GRID_TOO_COARSE = 3,
    KDVLAB_NO_THREE_REAL_ROOTS = 4,
    KDVLAB_SOLVER_FAILURE = 5,
    KDVLAB_ACCURACY_FAILURE = 6,
    KDVLAB_UNSUPPORTED_RATIO = 7,
    KDVLAB_CERTIFICATE_VOID = 8,
    KDVLAB_NEAR_SINGULAR = 9,
    KDVLAB_PRECONDITION_UNSATISFIED = 10,
    KDVLAB_BLOW_UP_DETECTED = 11,
    KDVLAB_FIT_FAILURE = 12,
    KDVLAB_QUADRATURE_FAILURE = 13,
    KDVLAB_EIGENSOLVER_FAILURE = 14,
    KDVLAB_INCONCLUSIVE = 15,
    KDVLAB_CONFIG_ERROR = 16,
    KDVLAB_IO_ERROR = 17,
    KDVLAB_CHECK_FAILED = 18,
    KDVLAB_WEIGHT_MISMATCH = 19,
    KDVLAB_NULL_ARGUMENT = 100,
    KDVLAB_OUT_OF_RANGE = 101,
    KDVLAB_INTERNAL_ERROR = 102
} kdvlab_status;

/* Result of one command: checks, a JSON summary and CSV tables. */
typedef struct kdvlab_report kdvlab_report;

KDVLAB_API const char* kdvlab_version(void);
KDVLAB_API const char* kdvlab_status_name(int status);

/* Message of the last failing call on this thread, "" if none. */
KDVLAB_API const char* kdvlab_last_error(void);

/* Runs the command named in the JSON configuration. On success *out owns a report that must
   be released with kdvlab_report_free. An invalid configuration returns KDVLAB_CONFIG_ERROR;
   numerical failures inside a command are recorded as failing checks, not as errors. */
KDVLAB_API int kdvlab_run(const char* config_json, kdvlab_report** out);

KDVLAB_API void kdvlab_report_free(kdvlab_report* report);

/* 1 if every check passed, 0 otherwise. */
KDVLAB_API int kdvlab_report_passed(const kdvlab_report* report);

/* Full report document; the string lives as long as the report. */
KDVLAB_API int kdvlab_report_json(const kdvlab_report* report, const char** json);

/* Number at an RFC 6901 pointer into the report document, e.g. "/results/single/phase_error". */
KDVLAB_API int kdvlab_report_number(const kdvlab_report* report, const char* pointer, double* value);

KDVLAB_API size_t kdvlab_report_check_count(const kdvlab_report* report);
KDVLAB_API int kdvlab_report_check(const kdvlab_report* report, size_t index, const char** name, int* passed,
                                   double* value, const char** detail);

KDVLAB_API size_t kdvlab_report_table_count(const kdvlab_report* report);
/* Table name (file stem, may contain a subdirectory) and its CSV text. */
KDVLAB_API int kdvlab_report_table(const kdvlab_report* report, size_t index, const char** name, const char** csv);

#ifdef __cplusplus
}
#endif

#endif
