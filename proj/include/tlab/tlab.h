/* C interface of the tracer library. Everything crosses the boundary as opaque
 * handles, status codes and NUL-terminated UTF-8 strings (JSON for structured data).
 * Strings returned by a handle stay valid until that handle is freed. */
#ifndef TLAB_H
#define TLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define TLAB_API __declspec(dllexport)
#else
#define TLAB_API __attribute__((visibility("default")))
#endif

typedef enum {
    TLAB_OK = 0,
    TLAB_ERR_ARGUMENT = 1, /* null handle or pointer, bad enum */
    TLAB_ERR_CONFIG = 2,   /* invalid configuration or parameters */
    TLAB_ERR_RUNTIME = 3   /* numeric failure, I/O, internal error */
} tlab_status;

typedef struct tlab_config tlab_config;
typedef struct tlab_result tlab_result;

typedef struct {
    uint64_t seed;
    int workers;                /* <= 0 means 1 */
    const char* out_dir;        /* NULL or "": runs/<run id> */
    const char* const* inputs;  /* report: run directories */
    size_t n_inputs;
} tlab_run_options;

TLAB_API const char* tlab_version(void);
/* Message of the last failure on this thread ("" if none). */
TLAB_API const char* tlab_last_error(void);

TLAB_API tlab_status tlab_config_new(tlab_config** out);
TLAB_API void tlab_config_free(tlab_config* cfg);
/* Both merge into cfg; later keys win. "[section]" lines prefix the keys that follow. */
TLAB_API tlab_status tlab_config_load(tlab_config* cfg, const char* path);
TLAB_API tlab_status tlab_config_parse(tlab_config* cfg, const char* text);
TLAB_API tlab_status tlab_config_set(tlab_config* cfg, const char* key, const char* value);

/* kind: field-cov, tracer-sim, hurst, diagrams, moments, limit-sim, rosenblatt-check, report.
 * cfg may be NULL (all defaults). */
TLAB_API tlab_status tlab_run(const char* kind, const tlab_config* cfg, const tlab_run_options* opts,
                              tlab_result** out);
TLAB_API const char* tlab_result_manifest(const tlab_result* r);
TLAB_API const char* tlab_result_payload(const tlab_result* r);
TLAB_API const char* tlab_result_out_dir(const tlab_result* r);
/* 1 if every mandatory check passed, 0 otherwise. */
TLAB_API int tlab_result_passed(const tlab_result* r);
TLAB_API void tlab_result_free(tlab_result* r);

/* Self-similar covariance (s^2H + t^2H - |t-s|^2H) c_var / 2. */
TLAB_API tlab_status tlab_cov_selfsimilar(double s, double t, double H, double c_var, double* out);

#ifdef __cplusplus
}
#endif

#endif
