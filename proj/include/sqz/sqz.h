/*
 * C interface to the squeezed-vacuum OPO modelling library.
 *
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Every call that can fail returns an sqz_status; on failure
 * sqz_last_error() describes the problem (per thread).
 */
#ifndef SQZ_H
#define SQZ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SQZ_BUILDING_LIBRARY)
#    define SQZ_API __declspec(dllexport)
#  else
#    define SQZ_API __declspec(dllimport)
#  endif
#else
#  define SQZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sqz_status
{
    SQZ_OK = 0,
    SQZ_ERROR_DOMAIN = 1,          /* parameter outside the model's domain */
    SQZ_ERROR_ABOVE_THRESHOLD = 2, /* pump power at or above oscillation threshold */
    SQZ_ERROR_PARSE = 3,           /* malformed config or trace text */
    SQZ_ERROR_ARGUMENT = 4,        /* null pointer, empty list, too few samples */
    SQZ_ERROR_IO = 5,
    SQZ_ERROR_INTERNAL = 6
} sqz_status;

typedef struct sqz_config sqz_config;
typedef struct sqz_trace sqz_trace;

typedef struct sqz_levels
{
    double s_min;    /* linear, relative to shot noise */
    double s_max;
    double s_min_db;
    double s_max_db;
} sqz_levels;

SQZ_API const char *sqz_version(void);
SQZ_API const char *sqz_last_error(void);
/* 1-based line of the last parse error, 0 if none or not line-specific. */
SQZ_API size_t sqz_last_error_line(void);
SQZ_API void sqz_string_free(char *text);

/* ---- configuration ---------------------------------------------------- */

SQZ_API sqz_status sqz_config_parse(const char *text, sqz_config **out);
SQZ_API sqz_status sqz_config_load(const char *path, sqz_config **out);
SQZ_API sqz_status sqz_config_serialize(const sqz_config *config, char **out_text);
SQZ_API double sqz_config_circuit_noise_clearance_db(const sqz_config *config);
SQZ_API void sqz_config_free(sqz_config *config);

/* ---- closed-form model -------------------------------------------------- */

/* Quadrature variance at LO phase theta (0 = anti-squeezed quadrature). */
SQZ_API double sqz_quadrature_variance(double theta, double alpha, double rho, double x, double omega);
SQZ_API sqz_status sqz_jitter_averaged_variance(double theta0, double sigma, double alpha, double rho, double x,
                                                double omega, double *out);
SQZ_API sqz_status sqz_apply_circuit_noise(double s_linear, double clearance_db, double *out_db);

typedef struct sqz_prediction
{
    double threshold_power_w;
    double escape_efficiency;
    double detection_efficiency;
    double decay_rate;       /* 1/s */
    double detuning;         /* Omega */
    double pump_parameter;   /* x */
    double parametric_gain;  /* G */
    sqz_levels intrinsic;    /* intrinsic extrema */
    sqz_levels observed;     /* with the circuit-noise floor */
} sqz_prediction;

SQZ_API sqz_status sqz_predict(const sqz_config *config, sqz_prediction *out);

/* ---- traces ------------------------------------------------------------- */

SQZ_API sqz_status sqz_synthesize(const sqz_config *config, uint64_t seed, sqz_trace **out);
SQZ_API sqz_status sqz_synthesize_shot_reference(const sqz_config *config, uint64_t seed, sqz_trace **out);
SQZ_API sqz_status sqz_trace_parse(const char *text, sqz_trace **out);
SQZ_API sqz_status sqz_trace_load(const char *path, sqz_trace **out);
SQZ_API sqz_status sqz_trace_save(const sqz_trace *trace, const char *path);
SQZ_API sqz_status sqz_trace_serialize(const sqz_trace *trace, char **out_text);
SQZ_API size_t sqz_trace_size(const sqz_trace *trace);
SQZ_API sqz_status sqz_trace_sample(const sqz_trace *trace, size_t index, double *time_s, double *power_db);
SQZ_API void sqz_trace_free(sqz_trace *trace);

/* ---- fitting ------------------------------------------------------------ */

typedef struct sqz_fit_options
{
    int fit_jitter;     /* nonzero: LO phase jitter is a free parameter */
    int weighted;       /* nonzero: second pass with model variance weights */
    int max_iterations;
} sqz_fit_options;

SQZ_API void sqz_fit_options_default(sqz_fit_options *options);

#define SQZ_MAX_FIT_PARAMETERS 5

typedef struct sqz_fit_report
{
    sqz_levels levels; /* intrinsic, circuit floor removed */
    double s_min_sigma_db;
    double s_max_sigma_db;
    sqz_levels observed; /* as the analyzer shows them */
    double observed_s_min_sigma_db;
    double observed_s_max_sigma_db;
    double theta0;
    double theta0_sigma;
    double scan_rate;
    double scan_rate_sigma;
    double jitter;
    double jitter_sigma;
    double residual_rms_db;
    int iterations;
    int converged;
    int identifiable;
    int parameter_count; /* 4 or 5: s_min_db, s_max_db, theta0, scan_rate[, jitter] */
    double covariance[SQZ_MAX_FIT_PARAMETERS * SQZ_MAX_FIT_PARAMETERS]; /* row-major, parameter_count^2 used */
} sqz_fit_report;

/* Fits the scanned-phase model; the circuit-noise clearance comes from the config. */
SQZ_API sqz_status sqz_fit(const sqz_trace *trace, const sqz_config *config, const sqz_fit_options *options,
                           sqz_fit_report *out);

typedef struct sqz_extrema_report
{
    double observed_min_db;
    double observed_max_db;
    double observed_min_sigma_db;
    double observed_max_sigma_db;
    sqz_levels levels;
    size_t window;
} sqz_extrema_report;

/* Model-free cross-check; window 0 picks a default from the scan settings. */
SQZ_API sqz_status sqz_extract_extrema(const sqz_trace *trace, const sqz_config *config, size_t window,
                                       sqz_extrema_report *out);

/* ---- pump sweep and discrepancy analysis -------------------------------- */

typedef enum sqz_pump_kind
{
    SQZ_PUMP_POWER = 0,     /* watts */
    SQZ_PUMP_GAIN = 1,      /* classical parametric gain */
    SQZ_PUMP_PARAMETER = 2  /* x */
} sqz_pump_kind;

typedef struct sqz_measured_point
{
    double pump_power_w;
    double s_min_db;
    double s_max_db;
} sqz_measured_point;

typedef struct sqz_sweep_row
{
    int primary; /* sqz_pump_kind that was supplied */
    double pump_power_w;
    double parametric_gain;
    double pump_parameter;
    int valid;
    sqz_levels predicted;
    sqz_levels predicted_observed;
    int has_measured;
    sqz_levels measured;
    char note[192];
} sqz_sweep_row;

/* rows must hold count entries; they come back ordered by pump power. */
SQZ_API sqz_status sqz_sweep(const sqz_config *config, sqz_pump_kind kind, const double *values, size_t count,
                             const sqz_measured_point *measured, size_t measured_count, sqz_sweep_row *rows);

typedef struct sqz_reconcile_report
{
    double gain_scale;
    double efficiency_scale;
    double residual_db;
    int exact;
    int iterations;
    sqz_levels predicted;
} sqz_reconcile_report;

SQZ_API sqz_status sqz_reconcile(const sqz_config *config, double s_min_db, double s_max_db,
                                 sqz_reconcile_report *out);

typedef struct sqz_loss_only_report
{
    double efficiency_scale;
    double s_max_mismatch_db;
    double tolerance_db;
    int s_min_matchable;
    int feasible;
    sqz_levels predicted;
} sqz_loss_only_report;

SQZ_API sqz_status sqz_loss_only_check(const sqz_config *config, double s_min_db, double s_max_db,
                                       double tolerance_db, sqz_loss_only_report *out);

#ifdef __cplusplus
}
#endif

#endif /* SQZ_H */
