#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "model.hpp"
#include "quadrature.hpp"

namespace threehalves::pricers {

using cplx = std::complex<double>;
using model::ModelParams;
using quadrature::QuadratureConfig;

struct PriceResult {
    double value = 0.0;
    double err_estimate = 0.0;
    double imag_residual = 0.0;
    bool truncation_warning = false;
};

// ---------------------------------------------------------------- European

struct EuropeanSpec {
    double strike = 100.0;
    double maturity = 1.0;
    bool is_call = true;
};

// -K^{1-iw} / (iw + w^2), valid for Im w < -1.
cplx payoff_transform_call(cplx omega, double strike);

// Damped-contour inversion of h(0, V0; T, w, 0); puts by parity.
PriceResult price_european(const EuropeanSpec& spec, const ModelParams& p, const QuadratureConfig& cfg);

// ------------------------------------------------------------------- Timer

struct TimerOptionSpec {
    double strike = 100.0;
    double mandatory_maturity = 1.0;
    int n_monitoring = 100;
    double variance_budget = 0.1;
};

// K^{1-iw} e^{-i eta B} / ((iw + w^2) i eta). Throws a contour error unless
// Im w < -1 and Im eta > 0; the lower-contour pricer uses the unchecked form.
cplx payoff_transform_timer(cplx omega, cplx eta, double strike, double budget);
cplx payoff_transform_timer_unchecked(cplx omega, cplx eta, double strike, double budget);

struct TimerDiagnostics {
    double omega_damping = 0.0;
    double eta_damping = 0.0;
    double omega_truncation = 0.0;
    double eta_truncation = 0.0;
    double eta_period = 0.0;   // 2 pi / eta spacing, in budget units
    double anchor = 0.0;       // European price added analytically
    double anchor_err = 0.0;
    std::size_t v_nodes = 0;   // total v' nodes over all timerlets
    quadrature::ParsevalResult parseval;
    bool jump_branch_warning = false;
};

struct TimerResult {
    double value = 0.0;
    double err_estimate = 0.0;
    TimerDiagnostics diag;
};

// Quadratic-variation-monitored timer call. With the lower eta contour
// (default) the budget indicator is inverted as 1 - 1{I >= B}: the constant
// part telescopes to the European call at T and the Parseval integral only
// carries paths that exhaust the budget.
TimerResult price_timer_call(const TimerOptionSpec& spec, const ModelParams& p, const QuadratureConfig& cfg);

// One H grid for several (strike, budget) pairs sharing T and N.
struct TimerQuote {
    double strike;
    double budget;
};
std::vector<TimerResult> price_timer_calls(double maturity, int n_monitoring, std::span<const TimerQuote> quotes,
                                           const ModelParams& p, const QuadratureConfig& cfg);

// ------------------------------------------------------------- Moment swaps

enum class WeightKind { constant, price_ratio, corridor, terminal_price };

// Where the weight observes the price: i_k = k or i_k = k - 1.
enum class WeightLag { same_period, previous_period };

struct MomentSwapSpec {
    std::vector<double> schedule;  // t_0 = 0 < t_1 < ... < t_N
    int m = 2;
    WeightKind weight = WeightKind::constant;
    WeightLag lag = WeightLag::same_period;
    double corridor_lower = 0.0;  // price units, l < u
    double corridor_upper = 0.0;
};

// t_j = j T / N, computed per index so the grid has no accumulated drift.
std::vector<double> uniform_schedule(double maturity, int n);

enum class DerivativeMethod {
    contour,            // Cauchy integral on a circle of radius 0.5 in phi
    finite_difference,  // central differences at cfg.derivative_step + one Richardson level
};

struct StrikeResult {
    double value = 0.0;
    double err_estimate = 0.0;
    std::vector<double> per_period;  // L_k / T
};

StrikeResult fair_strike_deterministic_weight(const MomentSwapSpec& spec, const ModelParams& p,
                                              const QuadratureConfig& cfg,
                                              DerivativeMethod method = DerivativeMethod::contour);

StrikeResult fair_strike_weighted(const MomentSwapSpec& spec, const ModelParams& p, const QuadratureConfig& cfg,
                                  DerivativeMethod method = DerivativeMethod::contour);

StrikeResult fair_strike_self_quantoed(std::span<const double> schedule, const ModelParams& p,
                                       const QuadratureConfig& cfg);

// E[I_T] / T from -i dh/deta at the origin, by the same differentiation
// machinery. The continuous-monitoring limit of the variance swap strike.
double expected_quadratic_variation_rate(double maturity, const ModelParams& p, const QuadratureConfig& cfg,
                                         DerivativeMethod method = DerivativeMethod::contour);

// Internal pieces exposed for tests.
namespace detail {

// m-th derivative at 0 of a function analytic near 0 that is real-symmetric
// (f(-conj z) = conj f(z)).
cplx derivative_at_zero(const std::function<cplx(cplx)>& f, int m, DerivativeMethod method, double fd_step);

// General double-integral forms of E[e^{i w X_{t_i} + i phi (X_{t_k} - X_{t_{k-1}})}],
// differentiated m times in phi at 0 (i^{-m} applied). Used to check the
// collapsed single-integral forms.
cplx moment_general_forward(int i, int k, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                            const QuadratureConfig& cfg);
cplx moment_collapsed_same(int k, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                           const QuadratureConfig& cfg);
cplx moment_collapsed_previous(int k, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                               const QuadratureConfig& cfg);
// The timer transform H''(w, eta) = e^{i w X0} sum_{j=1}^{N-1} [e^{-r t_{j+1}} J_j - e^{-r t_j} h(0, V0; t_j)]
// with J_j = int g(0, V0; t_j, w, eta, v') h(t_j, v'; t_{j+1}, w, 0) dv', from
// the same fixed v' rules the pricer uses.
cplx timer_transform(double maturity, int n_monitoring, cplx omega, cplx eta, const ModelParams& p,
                     const QuadratureConfig& cfg);

// Previous-period form with the weight leg split at an intermediate time s:
// g1(0, V0; t_{k-1}) written as int g1(0, V0; s) g1(s, v; t_{k-1}) dv.
cplx moment_previous_split(int k, double s, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                           const QuadratureConfig& cfg);

}  // namespace detail

}  // namespace threehalves::pricers
