/*
 * pasem: blind AWGN decoding-metric estimation for probabilistically shaped
 * QAM. C interface to the shared library.
 *
 * Every object is an opaque handle released with its *_free function. Calls
 * return a pasem_status; on failure pasem_last_error() describes the cause
 * (thread-local, valid until the next failing call on the same thread).
 * Strings returned through char** are released with pasem_string_free.
 */
#ifndef PASEM_PASEM_H
#define PASEM_PASEM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PASEM_BUILDING_LIBRARY)
#    define PASEM_API __declspec(dllexport)
#  else
#    define PASEM_API __declspec(dllimport)
#  endif
#else
#  define PASEM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pasem_status {
    PASEM_OK = 0,
    PASEM_ERR_INVALID_ARGUMENT = 2, /* validation failure */
    PASEM_ERR_IO = 3,
    PASEM_ERR_NUMERIC = 4,          /* numeric degeneracy, failed fit */
    PASEM_ERR_OUT_OF_RANGE = 5,     /* root-finding target unreachable */
    PASEM_ERR_INVALID_MODEL = 6,    /* model cannot produce a metric */
    PASEM_ERR_INTERNAL = 9
} pasem_status;

typedef enum pasem_sample_format {
    PASEM_FORMAT_AUTO = 0, /* from the file extension */
    PASEM_FORMAT_BINARY = 1,
    PASEM_FORMAT_CSV = 2
} pasem_sample_format;

typedef enum pasem_distribution_mode {
    PASEM_DIST_GENERAL = 0,
    PASEM_DIST_MAXWELL_BOLTZMANN = 1
} pasem_distribution_mode;

typedef enum pasem_selection {
    PASEM_SELECT_AUTO = 0,        /* uncertainty if symbols are present, else likelihood */
    PASEM_SELECT_UNCERTAINTY = 1,
    PASEM_SELECT_LIKELIHOOD = 2
} pasem_selection;

typedef struct pasem_constellation pasem_constellation;
typedef struct pasem_params pasem_params;
typedef struct pasem_samples pasem_samples;
typedef struct pasem_em_result pasem_em_result;
typedef struct pasem_report pasem_report;

typedef struct pasem_em_config {
    size_t max_iters;      /* >= 1, default 100 */
    double ll_rel_tol;     /* > 0, default 1e-8 */
    int distribution_mode; /* pasem_distribution_mode */
    double prob_floor;     /* default 0 */
} pasem_em_config;

PASEM_API const char* pasem_last_error(void);
PASEM_API const char* pasem_status_string(pasem_status status);
PASEM_API void pasem_string_free(char* s);
PASEM_API const char* pasem_version(void);

/* Constellations */
PASEM_API pasem_status pasem_constellation_square_qam(int m, pasem_constellation** out);
PASEM_API pasem_status pasem_constellation_restrict(const pasem_constellation* c, const size_t* active, size_t count,
                                                    pasem_constellation** out);
PASEM_API pasem_status pasem_constellation_inner_grid(const pasem_constellation* c, size_t side,
                                                      pasem_constellation** out);
PASEM_API void pasem_constellation_free(pasem_constellation* c);
PASEM_API int pasem_constellation_bits(const pasem_constellation* c);
PASEM_API size_t pasem_constellation_size(const pasem_constellation* c);
PASEM_API pasem_status pasem_constellation_point(const pasem_constellation* c, size_t j, double* re, double* im);
PASEM_API pasem_status pasem_constellation_to_json(const pasem_constellation* c, char** json);

/* Channel parameters (delta, sigma2, distribution) */
PASEM_API pasem_status pasem_params_create(const pasem_constellation* c, double delta, double sigma2,
                                           const double* pmf, size_t count, pasem_params** out);
PASEM_API pasem_status pasem_params_create_mb(const pasem_constellation* c, double delta, double sigma2, double nu,
                                              pasem_params** out);
/* Named shaping preset ("mode1".."mode4") at an SNR in dB. */
PASEM_API pasem_status pasem_params_create_preset(const pasem_constellation* c, const char* mode, double delta,
                                                  double snr_db, pasem_params** out);
/* Accepts {delta, sigma2, pmf|nu}, an estimate report, or a simulation sidecar. */
PASEM_API pasem_status pasem_params_from_json(const pasem_constellation* c, const char* json, pasem_params** out);
PASEM_API pasem_status pasem_params_to_json(const pasem_params* p, char** json);
PASEM_API void pasem_params_free(pasem_params* p);
PASEM_API double pasem_params_delta(const pasem_params* p);
PASEM_API double pasem_params_sigma2(const pasem_params* p);
/* Copies min(count, M) pmf entries into pmf and returns M. */
PASEM_API size_t pasem_params_pmf(const pasem_params* p, double* pmf, size_t count);
PASEM_API int pasem_params_nu(const pasem_params* p, double* nu);
PASEM_API double pasem_params_entropy(const pasem_params* p);
PASEM_API pasem_status pasem_params_snr_db(const pasem_params* p, const pasem_constellation* c, double* snr_db);
/* sigma2 for a target SNR given delta and pmf or nu (pmf may be NULL with has_nu). */
PASEM_API pasem_status pasem_sigma2_for_snr(const pasem_constellation* c, double snr_db, double delta,
                                            const double* pmf, size_t count, int has_nu, double nu,
                                            double* sigma2);

/* Sample batches */
PASEM_API pasem_status pasem_simulate(const pasem_constellation* c, const pasem_params* truth, size_t n,
                                      uint64_t seed, pasem_samples** out);
/* iq: 2n interleaved doubles; symbols (point indices) may be NULL. */
PASEM_API pasem_status pasem_samples_create(const double* iq, size_t n, const size_t* symbols,
                                            pasem_samples** out);
/* symbols_path may be NULL. format applies to both files. */
PASEM_API pasem_status pasem_samples_load(const pasem_constellation* c, const char* observations_path,
                                          const char* symbols_path, int format, pasem_samples** out);
PASEM_API pasem_status pasem_samples_save(const pasem_samples* s, const pasem_constellation* c,
                                          const char* observations_path, const char* symbols_path, int format);
/* Rounds observations to float32 precision in place (the binary file content). */
PASEM_API pasem_status pasem_samples_quantize(pasem_samples* s);
PASEM_API void pasem_samples_free(pasem_samples* s);
PASEM_API size_t pasem_samples_count(const pasem_samples* s);
PASEM_API int pasem_samples_has_symbols(const pasem_samples* s);
PASEM_API pasem_status pasem_samples_observation(const pasem_samples* s, size_t i, double* re, double* im);
PASEM_API pasem_status pasem_samples_symbol(const pasem_samples* s, size_t i, size_t* j);

/* Estimation */
PASEM_API void pasem_em_config_default(pasem_em_config* cfg);
PASEM_API pasem_status pasem_kmeans_init(const pasem_samples* s, const pasem_constellation* c, size_t k,
                                         pasem_params** out);
/* init NULL selects a K-Means start with k = kmeans_k (0 = M). */
PASEM_API pasem_status pasem_em_fit(const pasem_samples* s, const pasem_constellation* c, const pasem_em_config* cfg,
                                    const pasem_params* init, size_t kmeans_k, pasem_em_result** out);
PASEM_API pasem_status pasem_multi_init_em(const pasem_samples* s, const pasem_constellation* c, const size_t* ks,
                                           size_t count, const pasem_em_config* cfg, int selection,
                                           pasem_em_result** out);
PASEM_API pasem_status pasem_da_fit(const pasem_samples* s, const pasem_constellation* c, pasem_params** out);
PASEM_API pasem_status pasem_log_likelihood(const pasem_samples* s, const pasem_constellation* c,
                                            const pasem_params* p, double* ll);

PASEM_API void pasem_em_result_free(pasem_em_result* r);
PASEM_API pasem_status pasem_em_result_params(const pasem_em_result* r, pasem_params** out);
PASEM_API size_t pasem_em_result_iterations(const pasem_em_result* r);
PASEM_API int pasem_em_result_converged(const pasem_em_result* r);
/* 0 when the result did not come from a multi-start run. */
PASEM_API size_t pasem_em_result_chosen_k(const pasem_em_result* r);
/* Copies min(count, len) trace values and returns len. */
PASEM_API size_t pasem_em_result_trace(const pasem_em_result* r, double* trace, size_t count);
PASEM_API pasem_status pasem_em_result_to_json(const pasem_em_result* r, char** json);

/* Metrics */
PASEM_API pasem_status pasem_evaluate(const pasem_samples* s, const pasem_constellation* c, const pasem_params* p,
                                      pasem_report** out);
PASEM_API void pasem_report_free(pasem_report* r);
PASEM_API double pasem_report_s_opt(const pasem_report* r);
PASEM_API double pasem_report_u_s(const pasem_report* r);
PASEM_API double pasem_report_r_abc(const pasem_report* r);
PASEM_API double pasem_report_r_a(const pasem_report* r);
PASEM_API double pasem_report_h_x(const pasem_report* r);
PASEM_API size_t pasem_report_per_bit(const pasem_report* r, double* values, size_t count);
PASEM_API pasem_status pasem_report_to_json(const pasem_report* r, char** json);

#ifdef __cplusplus
}
#endif

#endif /* PASEM_PASEM_H */
