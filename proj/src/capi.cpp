#include "threehalves/threehalves.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "mc_oracle.hpp"
#include "model.hpp"
#include "pricers.hpp"
#include "quadrature.hpp"
#include "transforms.hpp"

using namespace threehalves;

struct th_model {
    model::ModelParams p;
};
struct th_quad_config {
    quadrature::QuadratureConfig c;
};
struct th_sim_config {
    mc::SimulationConfig c;
};

namespace {

thread_local std::string last_error;

th_status status_of(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return TH_ERR_INVALID_ARGUMENT;
        case ErrorKind::domain: return TH_ERR_DOMAIN;
        case ErrorKind::pole: return TH_ERR_POLE;
        case ErrorKind::non_convergence: return TH_ERR_NON_CONVERGENCE;
        case ErrorKind::overflow: return TH_ERR_OVERFLOW;
        case ErrorKind::precision_loss: return TH_ERR_PRECISION_LOSS;
        case ErrorKind::contour: return TH_ERR_CONTOUR;
        case ErrorKind::terminal_regime: return TH_ERR_TERMINAL_REGIME;
        case ErrorKind::constraint: return TH_ERR_CONSTRAINT;
    }
    return TH_ERR_INTERNAL;
}

th_status set_error(th_status s, std::string msg) {
    last_error = std::move(msg);
    return s;
}

// Runs fn and turns every exception into a status code.
template <class F>
th_status guarded(F&& fn) {
    try {
        last_error.clear();
        fn();
        return TH_OK;
    } catch (const NumericError& e) {
        return set_error(status_of(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(TH_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(TH_ERR_INTERNAL, e.what());
    }
}

th_status null_arg(const char* what) { return set_error(TH_ERR_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

th_status unknown_key(const char* key) {
    return set_error(TH_ERR_UNKNOWN_KEY, std::string("unknown key '") + (key ? key : "(null)") + "'");
}

bool integral(double v) { return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 2e9; }

model::JumpParams& jumps_of(model::ModelParams& p) {
    if (!p.jumps) p.jumps = model::JumpParams{};
    return *p.jumps;
}

// Quadrature config fields by name.
struct QuadField {
    const char* name;
    double quadrature::QuadratureConfig::*d = nullptr;
    int quadrature::QuadratureConfig::*i = nullptr;
    bool quadrature::QuadratureConfig::*b = nullptr;
};

using QC = quadrature::QuadratureConfig;
const QuadField kQuadFields[] = {
    {"v_nodes", nullptr, &QC::v_nodes},
    {"v_upper_mass_tol", &QC::v_upper_mass_tol},
    {"fourier_nodes", nullptr, &QC::fourier_nodes},
    {"fourier_truncation", &QC::fourier_truncation},
    {"damping_omega", &QC::damping_omega},
    {"damping_eta", &QC::damping_eta},
    {"rel_tol", &QC::rel_tol},
    {"abs_tol", &QC::abs_tol},
    {"max_refinements", nullptr, &QC::max_refinements},
    {"timer_omega_damping", &QC::timer_omega_damping},
    {"timer_omega_nodes", nullptr, &QC::timer_omega_nodes},
    {"timer_omega_truncation", &QC::timer_omega_truncation},
    {"timer_eta_truncation", &QC::timer_eta_truncation},
    {"timer_lower_contour", nullptr, nullptr, &QC::timer_lower_contour},
    {"timer_eta_damping_lower", &QC::timer_eta_damping_lower},
    {"filter_alpha", &QC::filter_alpha},
    {"filter_order", nullptr, &QC::filter_order},
    {"derivative_step", &QC::derivative_step},
    {"corridor_damping", &QC::corridor_damping},
};

const QuadField* quad_field(const char* key) {
    if (!key) return nullptr;
    for (const auto& f : kQuadFields)
        if (std::strcmp(f.name, key) == 0) return &f;
    return nullptr;
}

pricers::MomentSwapSpec swap_spec(const th_swap_spec& s) {
    if (!s.schedule && s.n_times > 0) fail(ErrorKind::invalid_argument, "capi.swap_spec", "schedule is NULL");
    pricers::MomentSwapSpec out;
    out.schedule.assign(s.schedule, s.schedule + s.n_times);
    out.m = s.m;
    switch (s.weight) {
        case TH_WEIGHT_CONSTANT: out.weight = pricers::WeightKind::constant; break;
        case TH_WEIGHT_PRICE_RATIO: out.weight = pricers::WeightKind::price_ratio; break;
        case TH_WEIGHT_CORRIDOR: out.weight = pricers::WeightKind::corridor; break;
        case TH_WEIGHT_TERMINAL_PRICE: out.weight = pricers::WeightKind::terminal_price; break;
        default: fail(ErrorKind::invalid_argument, "capi.swap_spec", "unknown weight");
    }
    if (s.lag != TH_LAG_SAME_PERIOD && s.lag != TH_LAG_PREVIOUS_PERIOD)
        fail(ErrorKind::invalid_argument, "capi.swap_spec", "unknown lag");
    out.lag = s.lag == TH_LAG_SAME_PERIOD ? pricers::WeightLag::same_period : pricers::WeightLag::previous_period;
    out.corridor_lower = s.corridor_lower;
    out.corridor_upper = s.corridor_upper;
    return out;
}

th_estimate to_c(const mc::Estimate& e) { return {e.value, e.std_error, e.n_paths}; }

}  // namespace

extern "C" {

const char* th_version(void) { return "1.0.0"; }

const char* th_last_error(void) { return last_error.c_str(); }

const char* th_status_name(th_status s) {
    switch (s) {
        case TH_OK: return "ok";
        case TH_ERR_INVALID_ARGUMENT: return "invalid argument";
        case TH_ERR_DOMAIN: return "domain error";
        case TH_ERR_POLE: return "pole";
        case TH_ERR_NON_CONVERGENCE: return "non-convergence";
        case TH_ERR_OVERFLOW: return "overflow";
        case TH_ERR_PRECISION_LOSS: return "precision loss";
        case TH_ERR_CONTOUR: return "contour violation";
        case TH_ERR_TERMINAL_REGIME: return "terminal regime";
        case TH_ERR_CONSTRAINT: return "constraint violation";
        case TH_ERR_UNKNOWN_KEY: return "unknown key";
        case TH_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

// ------------------------------------------------------------------ model

th_status th_model_create(th_model** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new th_model{model::reference_params()}; });
}

void th_model_destroy(th_model* m) { delete m; }

th_status th_model_set(th_model* m, const char* key, double value) {
    if (!m) return null_arg("model");
    if (!key) return unknown_key(key);
    const std::string_view k(key);
    auto& p = m->p;
    if (k == "kappa") p.kappa = value;
    else if (k == "theta") return guarded([&] { p.theta = model::ThetaCurve::constant(value); });
    else if (k == "epsilon") p.epsilon = value;
    else if (k == "rho") p.rho = value;
    else if (k == "r") p.r = value;
    else if (k == "q") p.q = value;
    else if (k == "s0") p.s0 = value;
    else if (k == "v0") p.v0 = value;
    else if (k == "jump_lambda") jumps_of(p).lambda = value;
    else if (k == "jump_mu") jumps_of(p).mu = value;
    else if (k == "jump_sigma") jumps_of(p).sigma = value;
    else return unknown_key(key);
    return TH_OK;
}

th_status th_model_get(const th_model* m, const char* key, double* out) {
    if (!m) return null_arg("model");
    if (!out) return null_arg("out");
    if (!key) return unknown_key(key);
    const std::string_view k(key);
    const auto& p = m->p;
    const model::JumpParams j = p.jumps.value_or(model::JumpParams{});
    if (k == "kappa") *out = p.kappa;
    else if (k == "theta") {
        if (!p.theta.is_constant())
            return set_error(TH_ERR_INVALID_ARGUMENT, "theta is a piecewise curve, not a constant");
        *out = p.theta.values().front();
    } else if (k == "epsilon") *out = p.epsilon;
    else if (k == "rho") *out = p.rho;
    else if (k == "r") *out = p.r;
    else if (k == "q") *out = p.q;
    else if (k == "s0") *out = p.s0;
    else if (k == "v0") *out = p.v0;
    else if (k == "jump_lambda") *out = j.lambda;
    else if (k == "jump_mu") *out = j.mu;
    else if (k == "jump_sigma") *out = j.sigma;
    else return unknown_key(key);
    return TH_OK;
}

th_status th_model_set_theta_curve(th_model* m, const double* breaks, const double* values, size_t n) {
    if (!m) return null_arg("model");
    if (!breaks || !values) return null_arg("theta curve");
    return guarded([&] {
        m->p.theta = model::ThetaCurve(std::vector<double>(breaks, breaks + n + 1), std::vector<double>(values, values + n));
    });
}

th_status th_model_check(const th_model* m, char* buf, size_t buflen) {
    if (!m) return null_arg("model");
    const auto v = model::validate(m->p);
    std::string text;
    for (const auto& x : v) text += x.constraint + ": " + x.detail + "\n";
    if (buf && buflen > 0) {
        const std::size_t n = std::min(buflen - 1, text.size());
        std::memcpy(buf, text.data(), n);
        buf[n] = '\0';
    }
    if (v.empty()) return TH_OK;
    return set_error(TH_ERR_CONSTRAINT, "model parameters are not admissible");
}

// ----------------------------------------------------------------- configs

th_status th_quad_config_create(th_quad_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new th_quad_config{}; });
}

void th_quad_config_destroy(th_quad_config* c) { delete c; }

th_status th_quad_config_set(th_quad_config* c, const char* key, double value) {
    if (!c) return null_arg("config");
    const QuadField* f = quad_field(key);
    if (!f) return unknown_key(key);
    if (f->d) {
        c->c.*(f->d) = value;
    } else {
        if (!integral(value)) return set_error(TH_ERR_INVALID_ARGUMENT, std::string(key) + " must be an integer");
        if (f->i) c->c.*(f->i) = static_cast<int>(value);
        else c->c.*(f->b) = value != 0.0;
    }
    return TH_OK;
}

th_status th_quad_config_get(const th_quad_config* c, const char* key, double* out) {
    if (!c) return null_arg("config");
    if (!out) return null_arg("out");
    const QuadField* f = quad_field(key);
    if (!f) return unknown_key(key);
    if (f->d) *out = c->c.*(f->d);
    else if (f->i) *out = c->c.*(f->i);
    else *out = (c->c.*(f->b)) ? 1.0 : 0.0;
    return TH_OK;
}

th_status th_sim_config_create(th_sim_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new th_sim_config{}; });
}

void th_sim_config_destroy(th_sim_config* c) { delete c; }

th_status th_sim_config_set(th_sim_config* c, const char* key, double value) {
    if (!c) return null_arg("config");
    if (!key) return unknown_key(key);
    const std::string_view k(key);
    if (k != "n_paths" && k != "steps_per_year" && k != "seed" && k != "scheme") return unknown_key(key);
    if (!std::isfinite(value) || value != std::floor(value))
        return set_error(TH_ERR_INVALID_ARGUMENT, std::string(key) + " must be an integer");
    if (k == "seed") {
        if (value < 0.0 || value > 9007199254740992.0)
            return set_error(TH_ERR_INVALID_ARGUMENT, "seed must be in [0, 2^53]; use th_sim_config_set_seed");
        c->c.seed = static_cast<std::uint64_t>(value);
    } else if (k == "scheme") {
        if (value != 0.0 && value != 1.0) return set_error(TH_ERR_INVALID_ARGUMENT, "scheme must be 0 or 1");
        c->c.scheme = value == 0.0 ? mc::Scheme::exact_variance_transition : mc::Scheme::euler_full_truncation;
    } else {
        if (std::abs(value) > 2e9) return set_error(TH_ERR_INVALID_ARGUMENT, std::string(key) + " is out of range");
        if (k == "n_paths") c->c.n_paths = static_cast<long>(value);
        else c->c.steps_per_year = static_cast<int>(value);
    }
    return TH_OK;
}

th_status th_sim_config_set_seed(th_sim_config* c, uint64_t seed) {
    if (!c) return null_arg("config");
    c->c.seed = seed;
    return TH_OK;
}

th_status th_sim_config_get(const th_sim_config* c, const char* key, double* out) {
    if (!c) return null_arg("config");
    if (!out) return null_arg("out");
    if (!key) return unknown_key(key);
    const std::string_view k(key);
    if (k == "n_paths") *out = static_cast<double>(c->c.n_paths);
    else if (k == "steps_per_year") *out = c->c.steps_per_year;
    else if (k == "seed") *out = static_cast<double>(c->c.seed);
    else if (k == "scheme") *out = c->c.scheme == mc::Scheme::exact_variance_transition ? 0.0 : 1.0;
    else return unknown_key(key);
    return TH_OK;
}

// -------------------------------------------------------------- transforms

th_status th_transition_density_v(const th_model* m, double t, double v, double t_prime, double v_prime,
                                  double* out) {
    if (!m || !out) return null_arg("model or out");
    return guarded([&] { *out = transforms::transition_density_v(t, v, t_prime, v_prime, m->p); });
}

th_status th_density_normalization(const th_model* m, const th_quad_config* c, double t, double v, double t_prime,
                                   double* out, double* err) {
    if (!m || !c || !out) return null_arg("model, config or out");
    return guarded([&] {
        model::require_valid(m->p);
        quadrature::validate_config(c->c);
        auto f = [&](double vp) { return quadrature::cplx(transforms::transition_density_v(t, v, t_prime, vp, m->p)); };
        const auto r = quadrature::integrate_semi_infinite(f, c->c, transforms::v_prime_hint(t, v, t_prime, m->p));
        *out = r.value.real();
        if (err) *err = r.err_estimate;
    });
}

th_status th_joint_cf(const th_model* m, double t, double v, double t_prime, double omega_re, double omega_im,
                      double eta_re, double eta_im, double* out_re, double* out_im) {
    if (!m || !out_re || !out_im) return null_arg("model or out");
    return guarded([&] {
        const auto h = transforms::joint_cf_h(t, v, t_prime, {{omega_re, omega_im}, {eta_re, eta_im}}, m->p);
        *out_re = h.real();
        *out_im = h.imag();
    });
}

th_status th_partial_transform(const th_model* m, double t, double v, double t_prime, double omega_re,
                               double omega_im, double eta_re, double eta_im, double v_prime, double* out_re,
                               double* out_im) {
    if (!m || !out_re || !out_im) return null_arg("model or out");
    return guarded([&] {
        const auto g =
            transforms::partial_transform_g(t, v, t_prime, {{omega_re, omega_im}, {eta_re, eta_im}}, v_prime, m->p);
        *out_re = g.real();
        *out_im = g.imag();
    });
}

th_status th_conditional_cf(const th_model* m, double xi_re, double xi_im, double t, double t_prime, double v,
                            double v_prime, double* out_re, double* out_im) {
    if (!m || !out_re || !out_im) return null_arg("model or out");
    return guarded([&] {
        const auto c = transforms::conditional_cf_integrated_variance({xi_re, xi_im}, t, t_prime, v, v_prime, m->p);
        *out_re = c.real();
        *out_im = c.imag();
    });
}

// ----------------------------------------------------------------- pricers

th_status th_price_european(const th_model* m, const th_quad_config* c, double strike, double maturity, int is_call,
                            th_price* out) {
    if (!m || !c || !out) return null_arg("model, config or out");
    return guarded([&] {
        const auto r = pricers::price_european({strike, maturity, is_call != 0}, m->p, c->c);
        *out = {r.value, r.err_estimate, r.imag_residual, r.truncation_warning ? 1 : 0};
    });
}

th_status th_price_timer_calls(const th_model* m, const th_quad_config* c, double maturity, int n_monitoring,
                               const double* strikes, const double* budgets, size_t n_quotes, th_price* out) {
    if (!m || !c || !out || !strikes || !budgets) return null_arg("argument");
    return guarded([&] {
        std::vector<pricers::TimerQuote> q;
        for (size_t k = 0; k < n_quotes; ++k) q.push_back({strikes[k], budgets[k]});
        const auto r = pricers::price_timer_calls(maturity, n_monitoring, q, m->p, c->c);
        for (size_t k = 0; k < n_quotes; ++k)
            out[k] = {r[k].value, r[k].err_estimate, r[k].diag.parseval.imag_residual, 0};
    });
}

th_status th_fair_strike(const th_model* m, const th_quad_config* c, const th_swap_spec* spec, th_price* out) {
    if (!m || !c || !spec || !out) return null_arg("argument");
    return guarded([&] {
        const auto s = swap_spec(*spec);
        if (spec->derivative != TH_DERIVATIVE_CONTOUR && spec->derivative != TH_DERIVATIVE_FINITE_DIFFERENCE)
            fail(ErrorKind::invalid_argument, "capi.fair_strike", "unknown derivative method");
        const auto method = spec->derivative == TH_DERIVATIVE_CONTOUR ? pricers::DerivativeMethod::contour
                                                                      : pricers::DerivativeMethod::finite_difference;
        pricers::StrikeResult r;
        if (s.weight == pricers::WeightKind::terminal_price && s.m == 2 && method == pricers::DerivativeMethod::contour)
            r = pricers::fair_strike_self_quantoed(s.schedule, m->p, c->c);
        else
            r = pricers::fair_strike_weighted(s, m->p, c->c, method);
        *out = {r.value, r.err_estimate, 0.0, 0};
    });
}

// --------------------------------------------------------------------- MC

th_status th_mc_european(const th_model* m, const th_sim_config* s, double strike, double maturity, int is_call,
                         th_estimate* out) {
    if (!m || !s || !out) return null_arg("model, config or out");
    return guarded([&] { *out = to_c(mc::price_european({strike, maturity, is_call != 0}, m->p, s->c)); });
}

th_status th_mc_timer(const th_model* m, const th_sim_config* s, double strike, double maturity, int n_monitoring,
                      double budget, th_estimate* proxy, th_estimate* discrete, th_estimate* gap) {
    if (!m || !s) return null_arg("model or config");
    return guarded([&] {
        const auto r = mc::price_timer({strike, maturity, n_monitoring, budget}, m->p, s->c);
        if (proxy) *proxy = to_c(r.proxy);
        if (discrete) *discrete = to_c(r.discrete);
        if (gap) *gap = to_c(r.gap);
    });
}

th_status th_mc_fair_strike(const th_model* m, const th_sim_config* s, const th_swap_spec* spec, th_estimate* out) {
    if (!m || !s || !spec || !out) return null_arg("argument");
    return guarded([&] { *out = to_c(mc::fair_strike(swap_spec(*spec), m->p, s->c)); });
}

th_status th_mc_sample_u(const th_model* m, double u, double t, double dt, uint64_t seed, uint64_t stream,
                         double* out, size_t n) {
    if (!m || (!out && n > 0)) return null_arg("model or out");
    return guarded([&] {
        auto rng = mc::path_rng(seed, stream);
        for (size_t k = 0; k < n; ++k) out[k] = mc::sample_variance_transition(u, t, dt, m->p, rng);
    });
}

}  // extern "C"
