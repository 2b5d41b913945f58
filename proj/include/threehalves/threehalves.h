#ifndef THREEHALVES_H
#define THREEHALVES_H

/* C interface to the 3/2 stochastic volatility engine.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * call that can fail returns a th_status; on failure th_last_error() gives a
 * message for the calling thread, prefixed with the module and operation. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TH_API __declspec(dllexport)
#else
#define TH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum th_status {
    TH_OK = 0,
    TH_ERR_INVALID_ARGUMENT = 1,
    TH_ERR_DOMAIN = 2,
    TH_ERR_POLE = 3,
    TH_ERR_NON_CONVERGENCE = 4,
    TH_ERR_OVERFLOW = 5,
    TH_ERR_PRECISION_LOSS = 6,
    TH_ERR_CONTOUR = 7,
    TH_ERR_TERMINAL_REGIME = 8,
    TH_ERR_CONSTRAINT = 9,
    TH_ERR_UNKNOWN_KEY = 10,
    TH_ERR_INTERNAL = 99
} th_status;

typedef struct th_model th_model;
typedef struct th_quad_config th_quad_config;
typedef struct th_sim_config th_sim_config;

TH_API const char* th_version(void);
TH_API const char* th_last_error(void);
TH_API const char* th_status_name(th_status s);

/* ---- model ----
 * Keys: kappa, theta, epsilon, rho, r, q, s0, v0, jump_lambda, jump_mu,
 * jump_sigma. Setting theta replaces the curve with a constant. Setting any
 * jump key turns the jump extension on. */
TH_API th_status th_model_create(th_model** out); /* reference S&P 500 calibration */
TH_API void th_model_destroy(th_model* m);
TH_API th_status th_model_set(th_model* m, const char* key, double value);
TH_API th_status th_model_get(const th_model* m, const char* key, double* out);
/* Piecewise-constant theta: values[i] on [breaks[i], breaks[i+1]); n values,
 * n + 1 breaks starting at 0. */
TH_API th_status th_model_set_theta_curve(th_model* m, const double* breaks, const double* values, size_t n);
/* TH_OK if admissible, TH_ERR_CONSTRAINT otherwise. Each violation is written
 * as one "name: detail" line into buf (truncated to buflen). */
TH_API th_status th_model_check(const th_model* m, char* buf, size_t buflen);

/* ---- quadrature controls ----
 * Keys are the field names of the library's quadrature config, e.g.
 * fourier_nodes, damping_omega, timer_eta_truncation. Integer fields take
 * integral values. */
TH_API th_status th_quad_config_create(th_quad_config** out);
TH_API void th_quad_config_destroy(th_quad_config* c);
TH_API th_status th_quad_config_set(th_quad_config* c, const char* key, double value);
TH_API th_status th_quad_config_get(const th_quad_config* c, const char* key, double* out);

/* ---- simulation controls ----
 * Keys: n_paths, steps_per_year, seed, scheme (0 exact transition, 1 Euler). */
TH_API th_status th_sim_config_create(th_sim_config** out);
TH_API void th_sim_config_destroy(th_sim_config* c);
TH_API th_status th_sim_config_set(th_sim_config* c, const char* key, double value);
TH_API th_status th_sim_config_set_seed(th_sim_config* c, uint64_t seed);
TH_API th_status th_sim_config_get(const th_sim_config* c, const char* key, double* out);

/* ---- transforms ---- */
TH_API th_status th_transition_density_v(const th_model* m, double t, double v, double t_prime, double v_prime,
                                         double* out);
/* int density dv' over (0, inf) with its quadrature error. */
TH_API th_status th_density_normalization(const th_model* m, const th_quad_config* c, double t, double v,
                                          double t_prime, double* out, double* err);
/* h(t, v; t', omega, eta) */
TH_API th_status th_joint_cf(const th_model* m, double t, double v, double t_prime, double omega_re,
                             double omega_im, double eta_re, double eta_im, double* out_re, double* out_im);
/* g(t, v; t', omega, eta, v') */
TH_API th_status th_partial_transform(const th_model* m, double t, double v, double t_prime, double omega_re,
                                      double omega_im, double eta_re, double eta_im, double v_prime, double* out_re,
                                      double* out_im);
/* E[exp(i xi int V) | V_t = v, V_t' = v'] */
TH_API th_status th_conditional_cf(const th_model* m, double xi_re, double xi_im, double t, double t_prime,
                                   double v, double v_prime, double* out_re, double* out_im);

/* ---- pricers ---- */
typedef struct th_price {
    double value;
    double err_estimate;
    double imag_residual;
    int truncation_warning;
} th_price;

TH_API th_status th_price_european(const th_model* m, const th_quad_config* c, double strike, double maturity,
                                   int is_call, th_price* out);

/* One grid for n_quotes (strike, budget) pairs sharing T and N. The grid's
 * tail terms are part of err_estimate, so truncation_warning stays 0. */
TH_API th_status th_price_timer_calls(const th_model* m, const th_quad_config* c, double maturity, int n_monitoring,
                                      const double* strikes, const double* budgets, size_t n_quotes, th_price* out);

typedef enum th_weight {
    TH_WEIGHT_CONSTANT = 0,
    TH_WEIGHT_PRICE_RATIO = 1,
    TH_WEIGHT_CORRIDOR = 2,
    TH_WEIGHT_TERMINAL_PRICE = 3
} th_weight;

typedef enum th_lag { TH_LAG_SAME_PERIOD = 0, TH_LAG_PREVIOUS_PERIOD = 1 } th_lag;

typedef enum th_derivative { TH_DERIVATIVE_CONTOUR = 0, TH_DERIVATIVE_FINITE_DIFFERENCE = 1 } th_derivative;

typedef struct th_swap_spec {
    const double* schedule; /* t_0 = 0 < ... < t_N */
    size_t n_times;         /* N + 1 */
    int m;
    th_weight weight;
    th_lag lag;
    double corridor_lower;
    double corridor_upper;
    th_derivative derivative;
} th_swap_spec;

/* Fair strike of a weighted moment swap. The self-quantoed swap is the
 * terminal-price weight with m = 2 and uses its dedicated routine. */
TH_API th_status th_fair_strike(const th_model* m, const th_quad_config* c, const th_swap_spec* spec, th_price* out);

/* ---- Monte Carlo oracle ---- */
typedef struct th_estimate {
    double value;
    double std_error;
    long n_paths;
} th_estimate;

TH_API th_status th_mc_european(const th_model* m, const th_sim_config* s, double strike, double maturity,
                                int is_call, th_estimate* out);
/* Timer call under the quadratic-variation proxy and the discrete realized
 * variance; gap is discrete minus proxy. Any output pointer may be NULL. */
TH_API th_status th_mc_timer(const th_model* m, const th_sim_config* s, double strike, double maturity,
                             int n_monitoring, double budget, th_estimate* proxy, th_estimate* discrete,
                             th_estimate* gap);
TH_API th_status th_mc_fair_strike(const th_model* m, const th_sim_config* s, const th_swap_spec* spec,
                                   th_estimate* out);
/* n exact draws of U_{t+dt} | U_t = u, from the stream of (seed, stream). */
TH_API th_status th_mc_sample_u(const th_model* m, double u, double t, double dt, uint64_t seed, uint64_t stream,
                                double* out, size_t n);

#ifdef __cplusplus
}
#endif

#endif
