#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "errors.hpp"
#include "pricers.hpp"
#include "specfun.hpp"
#include "transforms.hpp"

namespace threehalves::pricers {

namespace {

constexpr cplx kI(0.0, 1.0);
constexpr double kPi = std::numbers::pi;

// Everything about timerlet j that does not depend on (omega, eta).
struct Timerlet {
    double t = 0.0, t_next = 0.0;
    double log_x0 = 0.0, x0 = 0.0;  // x = 1 / (C(0, t_j) V0) for h(0, V0; t_j)
    std::size_t begin = 0, end = 0;  // node range in the flattened arrays
};

struct NodeData {
    std::vector<double> z;       // Bessel argument of g(0, V0; t_j, ., v')
    std::vector<double> stat;    // omega-free part of log g, plus log weight
    std::vector<double> lpow;    // multiplies (1/2 + kappa~/eps^2)
    std::vector<double> x2;      // 1 / (C(t_j, t_{j+1}) v') for the second leg
    std::vector<double> log_x2;
    std::vector<int> owner;      // timerlet index
};

struct Grid {
    quadrature::FourierAxis omega_axis;
    quadrature::FourierAxis eta_axis;
};

double eta_strip_bound(const ModelParams& p, double omega_damping) {
    // On omega = i w_I, eta = -i y every coefficient is real and
    // c^2(y) = c^2(0) - 2y / eps^2. The strip ends where c^2 reaches 0.
    const double c2 = transforms::c_squared({cplx(0.0, omega_damping), 0.0}, p).real();
    if (!(c2 > 0.0)) {
        std::ostringstream os;
        os << "omega damping " << omega_damping << " is outside the moment strip (c^2 = " << c2 << ")";
        fail(ErrorKind::contour, "pricers.price_timer_call", os.str());
    }
    double y = 0.5 * c2 * p.epsilon * p.epsilon;
    if (p.jumps && p.jumps->lambda > 0.0 && p.jumps->sigma > 0.0)
        y = std::min(y, 0.5 / (p.jumps->sigma * p.jumps->sigma));
    return y;
}

// Largest oscillation rate (radians per unit of ln v') of the timerlet
// integrand over the grid: the power of v', the Bessel order and the
// second-leg Kummer exponent.
double oscillation_rate(const ModelParams& p, const Grid& g) {
    const double e = p.epsilon;
    const double lw = g.omega_axis.truncation, le = g.eta_axis.truncation;
    double rate = lw * std::abs(p.rho) / e;
    double worst_c = 0.0;
    for (double sw : {-1.0, 1.0})
        for (double se : {-1.0, 0.0, 1.0}) {
            const cplx w(sw * lw, g.omega_axis.damping), eta(se * le, g.eta_axis.damping);
            worst_c = std::max(worst_c, std::abs(std::sqrt(transforms::c_squared({w, eta}, p)).imag()));
        }
    const cplx w(lw, g.omega_axis.damping);
    const cplx c0 = std::sqrt(transforms::c_squared({w, 0.0}, p));
    const cplx hp = 0.5 + (p.kappa - kI * w * p.rho * e) / (e * e);
    rate += worst_c + std::abs((c0 - hp).imag());
    return rate;
}

struct Engine {
    const ModelParams& p;
    Grid grid;
    std::vector<Timerlet> lets;
    NodeData nodes;
    double x_start = 0.0;  // ln S0

    Engine(const ModelParams& params, double maturity, int n, const Grid& g, const QuadratureConfig& cfg)
        : p(params), grid(g), x_start(std::log(params.s0)) {
        const double rate = oscillation_rate(p, grid);
        const double v0 = p.v0;
        for (int j = 1; j < n; ++j) {
            Timerlet tl;
            tl.t = maturity * j / n;
            tl.t_next = maturity * (j + 1) / n;
            const double A = model::coef_A(p.theta, 0.0, tl.t);
            const double C = model::coef_C(p.theta, p.epsilon, 0.0, tl.t);
            const double Cd = model::coef_C(p.theta, p.epsilon, tl.t, tl.t_next);
            tl.x0 = 1.0 / (C * v0);
            tl.log_x0 = std::log(tl.x0);

            const auto hint = transforms::v_prime_hint(0.0, v0, tl.t, p);
            // Resolve the Gaussian bulk and the oscillation together: the
            // trapezoid error is about exp(-((2 pi / du - rate) sd)^2 / 2).
            const double max_step = 2.0 * kPi / (rate + 7.0 / hint.width);
            auto density = [&](double v) { return transforms::transition_density_v(0.0, v0, tl.t, v, p); };
            const auto rule = quadrature::make_log_uniform_rule(density, hint, std::min(1e-14, cfg.v_upper_mass_tol),
                                                                cfg.v_nodes, 2.0, max_step);
            tl.begin = nodes.z.size();
            const double lA = std::log(A), lC = std::log(C), lv0 = std::log(v0);
            for (std::size_t k = 0; k < rule.size(); ++k) {
                const double v = rule.v[k];
                const double lv = std::log(v);
                nodes.z.push_back(2.0 / C * std::sqrt(A / (v0 * v)));
                nodes.stat.push_back(lA - lC - (A * v0 + v) / (C * v0 * v) - 2.0 * lv + std::log(rule.w[k]));
                nodes.lpow.push_back(lA + lv0 - lv);
                nodes.x2.push_back(1.0 / (Cd * v));
                nodes.log_x2.push_back(-std::log(Cd * v));
                nodes.owner.push_back(static_cast<int>(lets.size()));
            }
            tl.end = nodes.z.size();
            lets.push_back(tl);
        }
    }

    // H''(omega, eta) for every eta of the column:
    //   e^{i w X0} sum_{j >= 1} [e^{-r t_{j+1}} J_j - e^{-r t_j} h(0, V0; t_j)]
    void column(cplx w, std::span<const cplx> etas, std::vector<cplx>& out, bool& branch_warning) const {
        const double e2 = p.epsilon * p.epsilon;
        const cplx hp = 0.5 + (p.kappa - kI * w * p.rho * p.epsilon) / e2;
        const cplx c0 = std::sqrt(transforms::c_squared({w, 0.0}, p));
        const cplx a0 = model::drift_a(w, 0.0, p).value;
        const cplx alpha0 = c0 - hp, beta0 = 1.0 + 2.0 * c0;
        const cplx gamma0 = specfun::log_gamma(beta0 - alpha0) - specfun::log_gamma(beta0);
        specfun::KummerFixedParams second_leg(alpha0, beta0);

        const std::size_t nn = nodes.z.size();
        std::vector<cplx> base(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            const Timerlet& tl = lets[nodes.owner[i]];
            base[i] = nodes.stat[i] + hp * nodes.lpow[i] + a0 * (tl.t_next - tl.t) + gamma0 +
                      alpha0 * nodes.log_x2[i] + second_leg.log_value_neg(nodes.x2[i]) - p.r * tl.t_next;
        }
        const cplx lead = kI * w * x_start;
        out.resize(etas.size());
        for (std::size_t m = 0; m < etas.size(); ++m) {
            const cplx eta = etas[m];
            const cplx c = std::sqrt(transforms::c_squared({w, eta}, p));
            const auto drift = model::drift_a(w, eta, p);
            branch_warning = branch_warning || drift.branch_warning;
            const cplx a = drift.value;
            specfun::BesselIFixedOrder bessel(2.0 * c);
            const cplx alpha = c - hp, beta = 1.0 + 2.0 * c;
            const cplx gam = specfun::log_gamma(beta - alpha) - specfun::log_gamma(beta);
            specfun::KummerFixedParams first_leg(alpha, beta);
            quadrature::CompensatedComplexSum sum;
            for (const Timerlet& tl : lets) {
                const cplx shift = a * tl.t;
                for (std::size_t i = tl.begin; i < tl.end; ++i)
                    sum.add(std::exp(shift + base[i] + bessel.log_value(nodes.z[i])));
                sum.add(-std::exp(shift - p.r * tl.t + gam + alpha * tl.log_x0 + first_leg.log_value_neg(tl.x0)));
            }
            out[m] = std::exp(lead) * sum.value();
        }
    }
};

// Spacing 2 pi / period; the node count is rounded up so the truncation is
// at least the configured one.
quadrature::FourierAxis eta_axis(double damping, double period, const QuadratureConfig& cfg) {
    const double h = 2.0 * kPi / period;
    const int nodes = std::max(16, 4 * static_cast<int>(std::ceil(cfg.timer_eta_truncation / (2.0 * h))));
    return {damping, 0.5 * h * nodes, nodes, cfg.filter_alpha, cfg.filter_order};
}

// Lower contour: one eta grid for every budget. Aliased copies sit at
// B + n P with weight e^{-y n P}.
quadrature::FourierAxis lower_eta_axis(const ModelParams& p, const QuadratureConfig& cfg) {
    const double y = std::min(cfg.timer_eta_damping_lower, 0.5 * eta_strip_bound(p, cfg.timer_omega_damping));
    return eta_axis(-y, std::max(3.0, 28.0 / y), cfg);
}

void check_quotes(double maturity, int n, std::span<const TimerQuote> quotes) {
    constexpr const char* where = "pricers.price_timer_call";
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        fail(ErrorKind::invalid_argument, where, "mandatory maturity must be positive");
    if (n < 1) fail(ErrorKind::invalid_argument, where, "n_monitoring must be >= 1");
    if (quotes.empty()) fail(ErrorKind::invalid_argument, where, "no quotes");
    for (const auto& q : quotes) {
        if (!(q.strike > 0.0) || !std::isfinite(q.strike))
            fail(ErrorKind::invalid_argument, where, "strike must be positive");
        if (!(q.budget > 0.0) || !std::isfinite(q.budget))
            fail(ErrorKind::invalid_argument, where, "variance budget must be positive");
    }
}

// Prices quotes on one grid. `anchor_time` is T (lower contour) or t_1.
std::vector<TimerResult> run_grid(double maturity, int n, std::span<const TimerQuote> quotes, const ModelParams& p,
                                  const QuadratureConfig& cfg, const Grid& grid, double anchor_time, bool lower) {
    const int nq = static_cast<int>(quotes.size());
    std::vector<TimerResult> results(nq);
    std::vector<PriceResult> anchors(nq);
    for (int q = 0; q < nq; ++q) anchors[q] = price_european({quotes[q].strike, anchor_time, true}, p, cfg);

    quadrature::ParsevalResult empty;
    std::vector<quadrature::ParsevalResult> pr(nq, empty);
    std::size_t total_nodes = 0;
    bool branch = false;
    if (n > 1) {
        const Engine engine(p, maturity, n, grid, cfg);
        total_nodes = engine.nodes.z.size();
        auto column = [&](cplx w, std::span<const cplx> etas, std::span<cplx> out) {
            std::vector<cplx> h;
            bool br = false;
            engine.column(w, etas, h, br);
            if (br) branch = true;  // benign race: only ever set to true
            const std::size_t ne = etas.size();
            for (int q = 0; q < nq; ++q)
                for (std::size_t m = 0; m < ne; ++m) {
                    const cplx f = lower ? payoff_transform_timer_unchecked(w, etas[m], quotes[q].strike,
                                                                            quotes[q].budget)
                                         : payoff_transform_timer(w, etas[m], quotes[q].strike, quotes[q].budget);
                    out[q * ne + m] = f * h[m];
                }
        };
        pr = quadrature::parseval_double_multi(column, nq, grid.omega_axis, grid.eta_axis, true, false);
    }

    // The coarse-omega check is skipped on this grid (it would cost half the
    // grid again). Its size is bounded analytically: the omega period in
    // log-price is 2 pi / h and the call side decays like e^{-(|w_I| - 1) x}.
    const double omega_period = 2.0 * kPi / grid.omega_axis.spacing();
    const double omega_alias = p.s0 * std::exp(-(std::abs(grid.omega_axis.damping) - 1.0) * omega_period);

    for (int q = 0; q < nq; ++q) {
        auto& r = results[q];
        r.diag.omega_damping = grid.omega_axis.damping;
        r.diag.eta_damping = grid.eta_axis.damping;
        r.diag.omega_truncation = grid.omega_axis.truncation;
        r.diag.eta_truncation = grid.eta_axis.truncation;
        r.diag.eta_period = 2.0 * kPi / grid.eta_axis.spacing();
        r.diag.anchor = anchors[q].value;
        r.diag.anchor_err = anchors[q].err_estimate;
        r.diag.v_nodes = total_nodes;
        r.diag.jump_branch_warning = branch;
        r.diag.parseval = pr[q];
        if (n > 1) r.diag.parseval.omega_alias = omega_alias;
        r.value = anchors[q].value + pr[q].value;
        r.err_estimate = anchors[q].err_estimate + pr[q].err_estimate + (n > 1 ? omega_alias : 0.0);
        if (pr[q].imag_residual > 1e-8 * std::max(std::abs(r.value), cfg.abs_tol)) {
            std::ostringstream os;
            os << "imaginary residual " << pr[q].imag_residual << " exceeds 1e-8 of the price " << r.value;
            fail(ErrorKind::contour, "pricers.price_timer_call", os.str());
        }
    }
    return results;
}

}  // namespace

cplx payoff_transform_timer_unchecked(cplx omega, cplx eta, double strike, double budget) {
    return std::exp((1.0 - kI * omega) * std::log(strike) - kI * eta * budget) / ((kI * omega + omega * omega) * kI * eta);
}

cplx payoff_transform_timer(cplx omega, cplx eta, double strike, double budget) {
    if (!(omega.imag() < -1.0) || !(eta.imag() > 0.0)) {
        std::ostringstream os;
        os << "timer payoff transform needs Im omega < -1 and Im eta > 0 (got " << omega.imag() << ", " << eta.imag()
           << ")";
        fail(ErrorKind::contour, "pricers.payoff_transform_timer", os.str());
    }
    return payoff_transform_timer_unchecked(omega, eta, strike, budget);
}

std::vector<TimerResult> price_timer_calls(double maturity, int n, std::span<const TimerQuote> quotes,
                                           const ModelParams& p, const QuadratureConfig& cfg) {
    check_quotes(maturity, n, quotes);
    model::require_valid(p);
    quadrature::validate_config(cfg);

    quadrature::FourierAxis wa{cfg.timer_omega_damping, cfg.timer_omega_truncation, cfg.timer_omega_nodes,
                               cfg.filter_alpha, cfg.filter_order};
    const double strip = eta_strip_bound(p, cfg.timer_omega_damping);

    if (cfg.timer_lower_contour)
        return run_grid(maturity, n, quotes, p, cfg, {wa, lower_eta_axis(p, cfg)}, maturity, true);

    // Upper contour: the damping shrinks with the budget, so each budget
    // gets its own grid.
    std::vector<TimerResult> out(quotes.size());
    std::map<double, std::vector<std::size_t>> by_budget;
    for (std::size_t q = 0; q < quotes.size(); ++q) by_budget[quotes[q].budget].push_back(q);
    for (const auto& [budget, idx] : by_budget) {
        const double y = std::min({cfg.damping_eta, 10.0 / budget, 0.5 * strip});
        const double period = std::max(budget + 1.0, 25.0 / y);
        const auto ea = eta_axis(y, period, cfg);
        std::vector<TimerQuote> group;
        for (std::size_t q : idx) group.push_back(quotes[q]);
        const auto res = run_grid(maturity, n, group, p, cfg, {wa, ea}, maturity / n, false);
        for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = res[i];
    }
    return out;
}

namespace detail {

cplx timer_transform(double maturity, int n, cplx omega, cplx eta, const ModelParams& p, const QuadratureConfig& cfg) {
    if (!(maturity > 0.0) || n < 1) fail(ErrorKind::invalid_argument, "pricers.timer_transform", "bad schedule");
    model::require_valid(p);
    quadrature::validate_config(cfg);
    const quadrature::FourierAxis wa{cfg.timer_omega_damping, cfg.timer_omega_truncation, cfg.timer_omega_nodes};
    const Engine engine(p, maturity, n, {wa, lower_eta_axis(p, cfg)}, cfg);
    std::vector<cplx> out;
    bool branch = false;
    engine.column(omega, std::span<const cplx>(&eta, 1), out, branch);
    return out.front();
}

}  // namespace detail

TimerResult price_timer_call(const TimerOptionSpec& spec, const ModelParams& p, const QuadratureConfig& cfg) {
    const TimerQuote q{spec.strike, spec.variance_budget};
    return price_timer_calls(spec.mandatory_maturity, spec.n_monitoring, std::span<const TimerQuote>(&q, 1), p, cfg)
        .front();
}

}  // namespace threehalves::pricers
