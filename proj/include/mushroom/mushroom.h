/*
 * C interface to the oscillating-mushroom billiard library.
 *
 * All functions return a mushroom_status. On failure the message for the
 * calling thread is available from mushroom_last_error() until the next call
 * on that thread. Handles are opaque and must be released with the matching
 * *_free function; passing NULL to a *_free function is a no-op.
 *
 * Array outputs follow one convention: pass NULL buffers to query the
 * required length through the count argument, then call again with buffers
 * of at least that length.
 */
#ifndef MUSHROOM_H
#define MUSHROOM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MUSHROOM_API __declspec(dllexport)
#else
#define MUSHROOM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mushroom_status {
    MUSHROOM_OK = 0,
    MUSHROOM_ERR_INTERNAL = 1,
    MUSHROOM_ERR_CONFIG = 2,   /* invalid shape, protocol or argument */
    MUSHROOM_ERR_TOPOLOGY = 3, /* protocol has more than one capture interval */
    MUSHROOM_ERR_QUALITY = 4,  /* too many aborted trajectories */
    MUSHROOM_ERR_BUFFER = 5    /* caller buffer too small */
} mushroom_status;

typedef struct mushroom_protocol mushroom_protocol;
typedef struct mushroom_theory mushroom_theory;
typedef struct mushroom_ensemble mushroom_ensemble;

MUSHROOM_API const char* mushroom_version(void);
MUSHROOM_API const char* mushroom_last_error(void);
/* Releases strings returned through char** outputs. */
MUSHROOM_API void mushroom_string_free(char* s);

/* ---- geometry ---------------------------------------------------------- */

typedef struct mushroom_shape {
    double r;
    double w;
    double h;
    double tan_theta;
} mushroom_shape;

typedef struct mushroom_volumes {
    double v_cap;
    double v_stem;
    double v_ell;
    double v_cha;
    double delta;
    double area;
} mushroom_volumes;

MUSHROOM_API mushroom_status mushroom_compute_volumes(const mushroom_shape* shape, mushroom_volumes* out);

/* ---- protocols --------------------------------------------------------- */

/* default_e0 > 0 lets a rectangle without "period" derive one. */
MUSHROOM_API mushroom_status mushroom_protocol_from_json(const char* json, double default_e0,
                                                         mushroom_protocol** out);
MUSHROOM_API void mushroom_protocol_free(mushroom_protocol* p);
MUSHROOM_API mushroom_status mushroom_protocol_to_json(const mushroom_protocol* p, char** json);
MUSHROOM_API mushroom_status mushroom_protocol_period(const mushroom_protocol* p, double* period);
/* Writes the shape at time t and its time derivatives (tan_theta rate is 0). */
MUSHROOM_API mushroom_status mushroom_protocol_shape_at(const mushroom_protocol* p, double t, mushroom_shape* shape,
                                                        mushroom_shape* rate);
/* Capture intervals in [0, T) as begin/end pairs. */
MUSHROOM_API mushroom_status mushroom_protocol_capture_intervals(const mushroom_protocol* p, double* begin,
                                                                 double* end, size_t* count);

/* ---- theory ------------------------------------------------------------ */

typedef struct mushroom_theory_options {
    size_t panels;
    size_t curve_samples;
    size_t bins;
} mushroom_theory_options;

typedef struct mushroom_prediction {
    double m1;
    double p_nc;
    double ln_e_nc;
    double loop_area;
    double capture_begin;
    double capture_end;
    size_t capture_intervals;
} mushroom_prediction;

typedef enum mushroom_curve {
    MUSHROOM_CURVE_P_CHA = 0,
    MUSHROOM_CURVE_P_ELL = 1,
    MUSHROOM_CURVE_G = 2,
    MUSHROOM_CURVE_LN_E1 = 3,
    MUSHROOM_CURVE_PREDICTED_DENSITY = 4 /* x = bin center */
} mushroom_curve;

MUSHROOM_API void mushroom_theory_options_default(mushroom_theory_options* options);
/* options may be NULL for defaults. */
MUSHROOM_API mushroom_status mushroom_theory_create(const mushroom_protocol* p, const mushroom_theory_options* options,
                                                    mushroom_theory** out);
MUSHROOM_API void mushroom_theory_free(mushroom_theory* t);
/* Scalars that do not need a single capture interval: m1 (when defined),
 * ln_e_nc, loop_area. p_nc and the capture bounds are filled only for a
 * single interval; otherwise MUSHROOM_ERR_TOPOLOGY is returned after the
 * other fields are set. */
MUSHROOM_API mushroom_status mushroom_theory_predict(mushroom_theory* t, mushroom_prediction* out);
MUSHROOM_API mushroom_status mushroom_theory_curve(mushroom_theory* t, mushroom_curve which, double* x, double* y,
                                                   size_t* count);
/* Predicted atom of never-captured particles: value ln(E1/E0) and mass. */
MUSHROOM_API mushroom_status mushroom_theory_atom(mushroom_theory* t, double* value, double* mass);

/* ---- ensembles --------------------------------------------------------- */

typedef struct mushroom_ensemble_config {
    size_t particles;
    double e0;
    size_t cycles;
    uint64_t seed;
    size_t bins;
    unsigned threads; /* 0: all hardware threads */
} mushroom_ensemble_config;

typedef struct mushroom_ensemble_summary {
    size_t completed;
    size_t aborted;
    size_t captured;
    double m1_star;
    double sigma_n;
    double p_nc_star;
    double p_nc_sigma;
    double mean_collisions;
    double aborted_fraction;
    double period;
} mushroom_ensemble_summary;

typedef struct mushroom_particle {
    size_t index;
    int aborted;
    int captured;
    uint64_t collisions;
    size_t cycles_completed;
    double log_ratio; /* ln(E_n/E0) at the last completed cycle */
    double t_in;      /* NaN when not captured in the first cycle */
    double t_out;
} mushroom_particle;

typedef struct mushroom_moments {
    size_t count;
    double mean;
    double variance;
    double std_error;
} mushroom_moments;

typedef struct mushroom_chi_square {
    double statistic;
    size_t dof;
    double p_value;
    size_t bins_used;
} mushroom_chi_square;

typedef enum mushroom_histogram_kind {
    MUSHROOM_HIST_LOG_ENERGY = 0,
    MUSHROOM_HIST_CAPTURE_TIMES = 1
} mushroom_histogram_kind;

typedef void (*mushroom_progress_fn)(size_t done, size_t total, void* user);

MUSHROOM_API void mushroom_ensemble_config_default(mushroom_ensemble_config* config);
/* Runs the ensemble. The handle is produced even when the aborted fraction
 * exceeds 1e-3; the status is then MUSHROOM_ERR_QUALITY. */
MUSHROOM_API mushroom_status mushroom_ensemble_run(const mushroom_protocol* p, const mushroom_ensemble_config* config,
                                                   mushroom_progress_fn progress, void* user,
                                                   mushroom_ensemble** out);
MUSHROOM_API void mushroom_ensemble_free(mushroom_ensemble* e);
MUSHROOM_API mushroom_status mushroom_ensemble_get_summary(const mushroom_ensemble* e,
                                                           mushroom_ensemble_summary* out);
/* edges has count + 1 entries, density count. */
MUSHROOM_API mushroom_status mushroom_ensemble_histogram(const mushroom_ensemble* e, mushroom_histogram_kind kind,
                                                         double* edges, double* density, size_t* count);
/* Histogram of (1/n) ln(E_n/E0) with the given bin count over the observed
 * range, plus its moments. 1 <= n <= cycles. */
MUSHROOM_API mushroom_status mushroom_ensemble_normalized(const mushroom_ensemble* e, size_t n, size_t bins,
                                                          double* edges, double* density, mushroom_moments* moments);
MUSHROOM_API mushroom_status mushroom_ensemble_particle(const mushroom_ensemble* e, size_t index,
                                                        mushroom_particle* out);
/* ln(E_k/E0) for k = 1..cycles_completed of one particle. */
MUSHROOM_API mushroom_status mushroom_ensemble_log_ratios(const mushroom_ensemble* e, size_t index, double* values,
                                                          size_t* count);
/* First-cycle capture times of all completed particles, in particle order. */
MUSHROOM_API mushroom_status mushroom_ensemble_capture_times(const mushroom_ensemble* e, double* times,
                                                             size_t* count);
MUSHROOM_API mushroom_status mushroom_ensemble_chi_square(const mushroom_ensemble* e, const mushroom_theory* t,
                                                          size_t bins, mushroom_chi_square* out);

/* ---- single trajectories ----------------------------------------------- */

typedef struct mushroom_state {
    double x;
    double y;
    double vx;
    double vy;
    double t;
} mushroom_state;

typedef struct mushroom_trace_result {
    mushroom_state final_state;
    int outcome; /* 0 completed, 1 corner hit, 2 penetration, 3 solver failure */
    uint64_t collisions;
    size_t captures;
} mushroom_trace_result;

/* Simulates one particle to t_end. When csv_path is not NULL every wall
 * event is written there (time, wall, impact_angle, speed_before,
 * speed_after). */
MUSHROOM_API mushroom_status mushroom_trace(const mushroom_protocol* p, const mushroom_state* initial, double t_end,
                                            const char* csv_path, mushroom_trace_result* out);

/* Initial state of particle `index` of an ensemble with the given seed. */
MUSHROOM_API mushroom_status mushroom_sample_particle(const mushroom_protocol* p, double e0, uint64_t seed,
                                                      size_t index, mushroom_state* out);

#ifdef __cplusplus
}
#endif

#endif /* MUSHROOM_H */
