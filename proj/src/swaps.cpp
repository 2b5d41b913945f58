#include <algorithm>
#include <cmath>
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
constexpr int kContourPoints = 16;
constexpr double kContourRadius = 0.5;
constexpr double kRichardsonTol = 1e-5;

// ------------------------------------------------------------ differentiation

// A derivative at 0 as a linear combination of samples. `coarse` gives a
// second estimate from the same samples (or a subset) for the error.
struct Stencil {
    std::vector<cplx> points;
    std::vector<cplx> weights;
    std::vector<cplx> coarse;
    bool richardson = false;  // coarse is the unextrapolated level
};

double factorial(int m) {
    double f = 1.0;
    for (int k = 2; k <= m; ++k) f *= k;
    return f;
}

// f^(m)(0) = m! / (n r^m) sum_j f(r e^{i t_j}) e^{-i m t_j}. The even-indexed
// half of the circle is the coarse estimate.
Stencil contour_stencil(int m) {
    Stencil s;
    const int n = kContourPoints;
    const double scale = factorial(m) / std::pow(kContourRadius, m);
    for (int j = 0; j < n; ++j) {
        const double th = 2.0 * kPi * j / n;
        s.points.push_back(std::polar(kContourRadius, th));
        s.weights.push_back(scale / n * std::polar(1.0, -m * th));
        s.coarse.push_back(j % 2 == 0 ? scale / (n / 2) * std::polar(1.0, -m * th) : cplx(0.0));
    }
    return s;
}

// Central differences at h and h/2; the weights are the Richardson value
// (4 D(h/2) - D(h)) / 3 and coarse is D(h/2).
Stencil fd_stencil(int m, double h) {
    auto central = [m](double step) {
        std::vector<std::pair<double, double>> w;  // (offset, weight)
        switch (m) {
            case 1: w = {{-step, -0.5 / step}, {step, 0.5 / step}}; break;
            case 2: w = {{-step, 1.0 / (step * step)}, {0.0, -2.0 / (step * step)}, {step, 1.0 / (step * step)}}; break;
            case 3: {
                const double d = 0.5 / (step * step * step);
                w = {{-2 * step, -d}, {-step, 2 * d}, {step, -2 * d}, {2 * step, d}};
                break;
            }
            default: fail(ErrorKind::invalid_argument, "pricers.derivative", "moment order must be 1, 2 or 3");
        }
        return w;
    };
    Stencil s;
    s.richardson = true;
    auto add = [&](double off, double full, double coarse) {
        for (std::size_t j = 0; j < s.points.size(); ++j)
            if (s.points[j] == cplx(off)) {
                s.weights[j] += full;
                s.coarse[j] += coarse;
                return;
            }
        s.points.push_back(off);
        s.weights.push_back(full);
        s.coarse.push_back(coarse);
    };
    for (auto [off, w] : central(h)) add(off, -w / 3.0, 0.0);
    for (auto [off, w] : central(0.5 * h)) add(off, 4.0 * w / 3.0, w);
    return s;
}

Stencil make_stencil(int m, DerivativeMethod method, double fd_step) {
    return method == DerivativeMethod::contour ? contour_stencil(m) : fd_stencil(m, fd_step);
}

struct Derivative {
    cplx value;
    double err = 0.0;
};

Derivative apply(const Stencil& s, std::span<const cplx> samples, const char* where) {
    cplx fine = 0.0, coarse = 0.0;
    for (std::size_t j = 0; j < s.points.size(); ++j) {
        fine += s.weights[j] * samples[j];
        coarse += s.coarse[j] * samples[j];
    }
    const double diff = std::abs(fine - coarse);
    if (s.richardson && diff > kRichardsonTol * std::abs(fine)) {
        std::ostringstream os;
        os << "finite-difference levels disagree by " << diff / std::abs(fine) << " relative (limit 1e-5)";
        fail(ErrorKind::precision_loss, where, os.str());
    }
    // A 16-point circle converges geometrically, so the 8-point difference
    // overstates the error by orders of magnitude; keep it as a bound anyway.
    return {fine, diff};
}

// --------------------------------------------------------- kernels on a grid

// log h(t, v; t', w, 0) for many v at one (t, t', w).
class HKernel {
public:
    HKernel(cplx omega, double t, double t_prime, const ModelParams& p)
        : dt_(t_prime - t), kummer_(1.0, 2.0) {
        const auto k = transforms::coefficients({omega, 0.0}, p, t, t_prime);
        alpha_ = k.c - k.half_plus;
        const cplx beta = 1.0 + 2.0 * k.c;
        lead_ = k.a * dt_;
        if (dt_ <= 0.0 || alpha_ == cplx(0.0)) {
            trivial_ = true;
            return;
        }
        lead_ += specfun::log_gamma(beta - alpha_) - specfun::log_gamma(beta);
        C_ = k.C;
        kummer_ = specfun::KummerFixedParams(alpha_, beta);
    }
    cplx log_at(double v) {
        if (trivial_) return lead_;
        const double x = 1.0 / (C_ * v);
        return lead_ + alpha_ * std::log(x) + kummer_.log_value_neg(x);
    }

private:
    double dt_;
    cplx alpha_, lead_;
    double C_ = 1.0;
    bool trivial_ = false;
    specfun::KummerFixedParams kummer_;
};

// log g1(t, v; t', w, v') with the Bessel order fixed.
class G1Kernel {
public:
    G1Kernel(cplx omega, double t, double t_prime, const ModelParams& p)
        : bessel_(std::sqrt(transforms::c_squared({omega, 0.0}, p)) * 2.0) {
        if (!(t_prime - t >= transforms::kTerminalDelta))
            fail(ErrorKind::terminal_regime, "pricers.swaps", "g1 over an empty interval");
        const auto k = transforms::coefficients({omega, 0.0}, p, t, t_prime);
        A_ = k.A;
        C_ = k.C;
        hp_ = k.half_plus;
        lead_ = k.a * (t_prime - t) + std::log(A_) - std::log(C_) + hp_ * std::log(A_);
    }
    cplx log_at(double v, double v_prime) {
        const double lv = std::log(v), lvp = std::log(v_prime);
        const double z = 2.0 / C_ * std::sqrt(A_ / (v * v_prime));
        return lead_ - (A_ * v + v_prime) / (C_ * v * v_prime) - 2.0 * lvp + hp_ * (lv - lvp) + bessel_.log_value(z);
    }

private:
    specfun::BesselIFixedOrder bessel_;
    double A_ = 1.0, C_ = 1.0;
    cplx hp_, lead_;
};

// ------------------------------------------------------------ quadrature rules

// Fixed log-uniform rule for the V_{t} density started at V0 (or at v0 for a
// leg starting at `from`).
quadrature::LogUniformRule density_rule(double from, double v0, double t, const ModelParams& p,
                                        const QuadratureConfig& cfg) {
    const auto hint = transforms::v_prime_hint(from, v0, t, p);
    auto dens = [&](double v) { return transforms::transition_density_v(from, v0, t, v, p); };
    return quadrature::make_log_uniform_rule(dens, hint, std::min(1e-14, cfg.v_upper_mass_tol), cfg.v_nodes, 3.0,
                                             hint.width / 3.0);
}

// Same rule with every other node: the coarse-level estimate.
struct RuleSums {
    cplx full, coarse;
};

// Integrates sample values against a rule, returning fine and 2h sums.
// The coarse rule keeps the even nodes with doubled weights (trapezoid at 2h
// needs an odd count; the last node sits in the far tail either way).
template <class F>
RuleSums integrate_rule(const quadrature::LogUniformRule& rule, F&& f) {
    quadrature::CompensatedComplexSum full, coarse;
    const std::size_t n = rule.size();
    for (std::size_t k = 0; k < n; ++k) {
        const cplx v = f(k);
        full.add(rule.w[k] * v);
        if (k % 2 == 0) {
            const double w2 = rule.du * rule.v[k] * ((k == 0 || k + 1 >= n) ? 1.0 : 2.0);
            coarse.add(w2 * v);
        }
    }
    return {full.value(), coarse.value()};
}

double extrapolated(double d, double value) {
    const double a = std::abs(value);
    return a > 0.0 ? std::min(d, d * d / a) : d;
}

// --------------------------------------------------------------- validation

void check_schedule(std::span<const double> s, const char* where) {
    if (s.size() < 2) fail(ErrorKind::invalid_argument, where, "schedule needs t_0 = 0 and at least one date");
    if (s[0] != 0.0) fail(ErrorKind::invalid_argument, where, "schedule must start at 0");
    for (std::size_t k = 1; k < s.size(); ++k)
        if (!(s[k] > s[k - 1]) || !std::isfinite(s[k]))
            fail(ErrorKind::invalid_argument, where, "schedule must be strictly increasing and finite");
    if (s[1] - s[0] < transforms::kTerminalDelta)
        fail(ErrorKind::terminal_regime, where, "first period shorter than 1e-10");
}

void check_spec(const MomentSwapSpec& spec, const char* where) {
    check_schedule(spec.schedule, where);
    if (spec.m != 2 && spec.m != 3) fail(ErrorKind::invalid_argument, where, "moment order m must be 2 or 3");
    if (spec.weight == WeightKind::corridor &&
        !(spec.corridor_lower > 0.0 && spec.corridor_upper > spec.corridor_lower && std::isfinite(spec.corridor_upper)))
        fail(ErrorKind::invalid_argument, where, "corridor needs 0 < l < u < inf");
}

cplx i_pow_neg(int m) {
    // i^{-m}
    static const cplx table[4] = {1.0, -kI, -1.0, kI};
    return table[((m % 4) + 4) % 4];
}

// ------------------------------------------------------------ the L_k forms

// E[e^{i w X_{t_{k-1}}} * (stuff at phi)] with the phi leg starting from the
// V_{t_{k-1}} distribution. For each stencil point phi_j:
//   S_j = int g1(0, V0; t_{k-1}, w, v) * h(t_{k-1}, v; t_k, shift + phi_j, 0) dv
// with shift = w (same period) or 0 (previous period). k = 1 uses v = V0.
struct PeriodSums {
    std::vector<cplx> full, coarse;
};

PeriodSums collapsed_sums(int k, cplx omega, bool same_period, const Stencil& st, std::span<const double> sched,
                          const ModelParams& p, const QuadratureConfig& cfg) {
    const double t0 = sched[k - 1], t1 = sched[k];
    const std::size_t np = st.points.size();
    PeriodSums out{std::vector<cplx>(np), std::vector<cplx>(np)};
    const cplx shift = same_period ? omega : cplx(0.0);
    std::vector<HKernel> legs;
    legs.reserve(np);
    for (const cplx phi : st.points) legs.emplace_back(shift + phi, t0, t1, p);
    if (k == 1) {
        for (std::size_t j = 0; j < np; ++j) out.full[j] = out.coarse[j] = std::exp(legs[j].log_at(p.v0));
        return out;
    }
    const auto rule = density_rule(0.0, p.v0, t0, p, cfg);
    G1Kernel first(omega, 0.0, t0, p);
    std::vector<cplx> lw(rule.size());
    for (std::size_t n = 0; n < rule.size(); ++n) lw[n] = first.log_at(p.v0, rule.v[n]);
    for (std::size_t j = 0; j < np; ++j) {
        const auto s = integrate_rule(rule, [&](std::size_t n) { return std::exp(lw[n] + legs[j].log_at(rule.v[n])); });
        out.full[j] = s.full;
        out.coarse[j] = s.coarse;
    }
    return out;
}

// i_k >= k in general: int int h(t_k, v'; t_i, w, 0) g1(t_{k-1}, v; t_k, w + phi, v')
//                                 g1(0, V0; t_{k-1}, w, v) dv' dv
PeriodSums forward_sums(int i, int k, cplx omega, const Stencil& st, std::span<const double> sched,
                        const ModelParams& p, const QuadratureConfig& cfg) {
    const double ta = sched[k - 1], tb = sched[k], ti = sched[i];
    const std::size_t np = st.points.size();
    PeriodSums out{std::vector<cplx>(np, 0.0), std::vector<cplx>(np, 0.0)};
    HKernel tail(omega, tb, ti, p);
    std::vector<G1Kernel> mids;
    mids.reserve(np);
    for (const cplx phi : st.points) mids.emplace_back(omega + phi, ta, tb, p);

    // Outer nodes: the V_{t_{k-1}} distribution, or V0 alone for k = 1.
    std::vector<double> outer_v{p.v0};
    std::vector<double> outer_w{1.0}, outer_w2{1.0};
    std::vector<cplx> outer_log{0.0};
    if (k > 1) {
        const auto rule = density_rule(0.0, p.v0, ta, p, cfg);
        G1Kernel first(omega, 0.0, ta, p);
        outer_v = rule.v;
        outer_w = rule.w;
        outer_w2.assign(rule.size(), 0.0);
        outer_log.resize(rule.size());
        for (std::size_t n = 0; n < rule.size(); ++n) {
            outer_log[n] = first.log_at(p.v0, rule.v[n]);
            if (n % 2 == 0)
                outer_w2[n] = rule.du * rule.v[n] * ((n == 0 || n + 1 >= rule.size()) ? 1.0 : 2.0);
        }
    }
    for (std::size_t n = 0; n < outer_v.size(); ++n) {
        const double v = outer_v[n];
        const auto inner = density_rule(ta, v, tb, p, cfg);
        std::vector<cplx> lt(inner.size());
        for (std::size_t q = 0; q < inner.size(); ++q) lt[q] = tail.log_at(inner.v[q]);
        for (std::size_t j = 0; j < np; ++j) {
            const auto s = integrate_rule(inner, [&](std::size_t q) {
                return std::exp(outer_log[n] + lt[q] + mids[j].log_at(v, inner.v[q]));
            });
            out.full[j] += outer_w[n] * s.full;
            // The coarse level thins both rules at once.
            out.coarse[j] += outer_w2[n] * s.coarse;
        }
    }
    return out;
}

// Finishes one L_k from its per-point sums: i^{-m} f^(m)(0) plus errors from
// the quadrature (coarse rule) and the stencil.
Derivative finish(const PeriodSums& s, const Stencil& st, int m, const char* where) {
    const auto fine = apply(st, s.full, where);
    cplx coarse_q = 0.0;
    for (std::size_t j = 0; j < st.points.size(); ++j) coarse_q += st.weights[j] * s.coarse[j];
    const double quad_err = extrapolated(std::abs(fine.value - coarse_q), std::abs(fine.value));
    return {i_pow_neg(m) * fine.value, quad_err + fine.err};
}

void require_real(cplx value, double scale, const char* where) {
    if (std::abs(value.imag()) > 1e-8 * std::max(std::abs(value.real()), scale)) {
        std::ostringstream os;
        os << "imaginary residual " << value.imag() << " exceeds 1e-8 of " << value.real();
        fail(ErrorKind::contour, where, os.str());
    }
}

int i_index(const MomentSwapSpec& spec, int k) {
    return spec.lag == WeightLag::same_period ? k : k - 1;
}

}  // namespace

// ------------------------------------------------------------------ public

std::vector<double> uniform_schedule(double maturity, int n) {
    if (!(maturity > 0.0) || !std::isfinite(maturity) || n < 1)
        fail(ErrorKind::invalid_argument, "pricers.uniform_schedule", "need maturity > 0 and n >= 1");
    std::vector<double> s(n + 1);
    for (int j = 0; j <= n; ++j) s[j] = maturity * j / n;
    s[n] = maturity;
    return s;
}

namespace detail {

cplx derivative_at_zero(const std::function<cplx(cplx)>& f, int m, DerivativeMethod method, double fd_step) {
    const auto st = make_stencil(m, method, fd_step);
    std::vector<cplx> samples;
    samples.reserve(st.points.size());
    for (const cplx z : st.points) samples.push_back(f(z));
    return apply(st, samples, "pricers.derivative_at_zero").value;
}

cplx moment_general_forward(int i, int k, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                            const QuadratureConfig& cfg) {
    const auto st = contour_stencil(m);
    const auto s = forward_sums(i, k, omega, st, sched, p, cfg);
    return finish(s, st, m, "pricers.moment_general_forward").value;
}

cplx moment_collapsed_same(int k, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                           const QuadratureConfig& cfg) {
    const auto st = contour_stencil(m);
    return finish(collapsed_sums(k, omega, true, st, sched, p, cfg), st, m, "pricers.moment_collapsed_same").value;
}

cplx moment_collapsed_previous(int k, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                               const QuadratureConfig& cfg) {
    const auto st = contour_stencil(m);
    return finish(collapsed_sums(k, omega, false, st, sched, p, cfg), st, m, "pricers.moment_collapsed_previous")
        .value;
}

cplx moment_previous_split(int k, double s, cplx omega, int m, std::span<const double> sched, const ModelParams& p,
                           const QuadratureConfig& cfg) {
    constexpr const char* where = "pricers.moment_previous_split";
    if (k < 2 || k >= static_cast<int>(sched.size()) || !(s > 0.0) || !(s < sched[k - 1]))
        fail(ErrorKind::invalid_argument, where, "need k >= 2 and 0 < s < t_{k-1}");
    // g1(0, V0; t_{k-1}, w, v') = int g1(0, V0; s, w, v) g1(s, v; t_{k-1}, w, v') dv
    const double ta = sched[k - 1], tb = sched[k];
    const auto st = contour_stencil(m);
    const std::size_t np = st.points.size();
    PeriodSums out{std::vector<cplx>(np, 0.0), std::vector<cplx>(np, 0.0)};
    std::vector<HKernel> legs;
    legs.reserve(np);
    for (const cplx phi : st.points) legs.emplace_back(phi, ta, tb, p);
    const auto rule = density_rule(0.0, p.v0, s, p, cfg);
    G1Kernel first(omega, 0.0, s, p);
    G1Kernel middle(omega, s, ta, p);
    for (std::size_t n = 0; n < rule.size(); ++n) {
        const double v = rule.v[n];
        const cplx lf = first.log_at(p.v0, v);
        const auto inner = density_rule(s, v, ta, p, cfg);
        std::vector<cplx> lm(inner.size());
        for (std::size_t q = 0; q < inner.size(); ++q) lm[q] = middle.log_at(v, inner.v[q]);
        for (std::size_t j = 0; j < np; ++j) {
            const auto sum = integrate_rule(inner, [&](std::size_t q) {
                return std::exp(lf + lm[q] + legs[j].log_at(inner.v[q]));
            });
            out.full[j] += rule.w[n] * sum.full;
            out.coarse[j] += rule.w[n] * sum.coarse;
        }
    }
    return finish(out, st, m, where).value;
}

}  // namespace detail

StrikeResult fair_strike_deterministic_weight(const MomentSwapSpec& spec, const ModelParams& p,
                                              const QuadratureConfig& cfg, DerivativeMethod method) {
    constexpr const char* where = "pricers.fair_strike_deterministic_weight";
    check_spec(spec, where);
    if (spec.weight != WeightKind::constant)
        fail(ErrorKind::invalid_argument, where, "deterministic-weight strike needs weight = constant");
    model::require_valid(p);
    quadrature::validate_config(cfg);

    const auto& sched = spec.schedule;
    const int n = static_cast<int>(sched.size()) - 1;
    const double T = sched.back();
    const auto st = make_stencil(spec.m, method, cfg.derivative_step);
    StrikeResult out;
    quadrature::CompensatedSum total;
    double err = 0.0;
    for (int k = 1; k <= n; ++k) {
        // The forward CF: omega = 0 on the first leg leaves the V density.
        const auto s = collapsed_sums(k, 0.0, false, st, sched, p, cfg);
        const auto d = finish(s, st, spec.m, where);
        require_real(d.value, d.err + cfg.abs_tol, where);
        out.per_period.push_back(d.value.real() / T);
        total.add(d.value.real());
        err += d.err;
    }
    out.value = total.value() / T;
    out.err_estimate = err / T;
    return out;
}

StrikeResult fair_strike_weighted(const MomentSwapSpec& spec, const ModelParams& p, const QuadratureConfig& cfg,
                                  DerivativeMethod method) {
    constexpr const char* where = "pricers.fair_strike_weighted";
    check_spec(spec, where);
    if (spec.weight == WeightKind::constant) return fair_strike_deterministic_weight(spec, p, cfg, method);
    model::require_valid(p);
    quadrature::validate_config(cfg);

    const auto& sched = spec.schedule;
    const int n = static_cast<int>(sched.size()) - 1;
    const double T = sched.back();
    const auto st = make_stencil(spec.m, method, cfg.derivative_step);
    const cplx dirac(0.0, -1.0);  // f(x) = x / S0 puts all of f-hat at omega = -i
    StrikeResult out;
    quadrature::CompensatedSum total;
    double err = 0.0;

    for (int k = 1; k <= n; ++k) {
        Derivative d;
        if (spec.weight == WeightKind::terminal_price) {
            const auto s = k == n ? collapsed_sums(k, dirac, true, st, sched, p, cfg)
                                  : forward_sums(n, k, dirac, st, sched, p, cfg);
            d = finish(s, st, spec.m, where);
        } else if (spec.weight == WeightKind::price_ratio) {
            const bool same = spec.lag == WeightLag::same_period;
            if (!same && k == 1) {
                // i_k = 0: the weight is f(S0) = 1.
                d = finish(collapsed_sums(k, 0.0, false, st, sched, p, cfg), st, spec.m, where);
            } else {
                d = finish(collapsed_sums(k, dirac, same, st, sched, p, cfg), st, spec.m, where);
            }
        } else {
            // Corridor: (1/2pi) int f-hat(w) e^{i w X0} E-part(w) dw_R along Im w = corridor_damping.
            const double lo = std::log(spec.corridor_lower), hi = std::log(spec.corridor_upper);
            const double x0 = std::log(p.s0);
            const int ik = i_index(spec, k);
            if (ik == 0) {
                const double f0 = (p.s0 > spec.corridor_lower && p.s0 <= spec.corridor_upper) ? 1.0 : 0.0;
                d = finish(collapsed_sums(k, 0.0, false, st, sched, p, cfg), st, spec.m, where);
                d.value *= f0;
                d.err *= f0;
            } else {
                const bool same = spec.lag == WeightLag::same_period;
                auto fhat = [&](cplx w) {
                    return (std::exp(-kI * w * hi) - std::exp(-kI * w * lo)) / (-kI * w);
                };
                // The stencil error is bounded node by node: |f-hat| |e^{i w X0}| err h / pi.
                double stencil_err = 0.0;
                auto part = [&](cplx w) {
                    const auto e = finish(collapsed_sums(k, w, same, st, sched, p, cfg), st, spec.m, where);
                    const cplx lead = std::exp(kI * w * x0);
                    stencil_err += std::abs(fhat(w) * lead) * e.err;
                    return lead * e.value;
                };
                const quadrature::FourierAxis axis{cfg.corridor_damping, cfg.fourier_truncation, cfg.fourier_nodes};
                const auto inv = quadrature::fourier_invert_1d(part, fhat, axis, cfg, true);
                if (inv.imag_residual > 1e-8 * std::max(std::abs(inv.value), cfg.abs_tol)) {
                    std::ostringstream os;
                    os << "imaginary residual " << inv.imag_residual << " exceeds 1e-8 of " << inv.value;
                    fail(ErrorKind::contour, where, os.str());
                }
                d.value = inv.value;
                d.err = inv.err_estimate + stencil_err * axis.spacing() / kPi;
            }
        }
        require_real(d.value, d.err + cfg.abs_tol, where);
        out.per_period.push_back(d.value.real() / T);
        total.add(d.value.real());
        err += d.err;
    }
    out.value = total.value() / T;
    out.err_estimate = err / T;
    return out;
}

StrikeResult fair_strike_self_quantoed(std::span<const double> schedule, const ModelParams& p,
                                       const QuadratureConfig& cfg) {
    constexpr const char* where = "pricers.fair_strike_self_quantoed";
    check_schedule(schedule, where);
    model::require_valid(p);
    quadrature::validate_config(cfg);

    const int n = static_cast<int>(schedule.size()) - 1;
    const double T = schedule.back();
    const cplx dirac(0.0, -1.0);
    const auto st = contour_stencil(2);
    const std::size_t np = st.points.size();

    // Every period shares the phi - i Bessel orders; with a time-homogeneous
    // schedule the middle-leg coefficients repeat as well, so the kernels are
    // rebuilt only when the period length or start changes the coefficients.
    StrikeResult out;
    quadrature::CompensatedSum total;
    double err = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double ta = schedule[k - 1], tb = schedule[k];
        PeriodSums sums{std::vector<cplx>(np, 0.0), std::vector<cplx>(np, 0.0)};
        HKernel tail(dirac, tb, T, p);
        std::vector<G1Kernel> mids;
        mids.reserve(np);
        for (const cplx phi : st.points) mids.emplace_back(phi + dirac, ta, tb, p);

        std::vector<double> ov{p.v0}, ow{1.0}, ow2{1.0};
        std::vector<cplx> ol{0.0};
        if (k > 1) {
            const auto rule = density_rule(0.0, p.v0, ta, p, cfg);
            G1Kernel first(dirac, 0.0, ta, p);
            ov = rule.v;
            ow = rule.w;
            ow2.assign(rule.size(), 0.0);
            ol.resize(rule.size());
            for (std::size_t a = 0; a < rule.size(); ++a) {
                ol[a] = first.log_at(p.v0, rule.v[a]);
                if (a % 2 == 0) ow2[a] = rule.du * rule.v[a] * ((a == 0 || a + 1 >= rule.size()) ? 1.0 : 2.0);
            }
        }
        for (std::size_t a = 0; a < ov.size(); ++a) {
            const auto inner = density_rule(ta, ov[a], tb, p, cfg);
            std::vector<cplx> lt(inner.size());
            for (std::size_t b = 0; b < inner.size(); ++b) lt[b] = k == n ? cplx(0.0) : tail.log_at(inner.v[b]);
            for (std::size_t j = 0; j < np; ++j) {
                const auto s = integrate_rule(inner, [&](std::size_t b) {
                    return std::exp(ol[a] + lt[b] + mids[j].log_at(ov[a], inner.v[b]));
                });
                sums.full[j] += ow[a] * s.full;
                sums.coarse[j] += ow2[a] * s.coarse;
            }
        }
        const auto d = finish(sums, st, 2, where);
        require_real(d.value, d.err + cfg.abs_tol, where);
        out.per_period.push_back(d.value.real() / T);
        total.add(d.value.real());
        err += d.err;
    }
    out.value = total.value() / T;
    out.err_estimate = err / T;
    return out;
}

double expected_quadratic_variation_rate(double maturity, const ModelParams& p, const QuadratureConfig& cfg,
                                         DerivativeMethod method) {
    constexpr const char* where = "pricers.expected_quadratic_variation_rate";
    if (!(maturity > 0.0) || !std::isfinite(maturity)) fail(ErrorKind::invalid_argument, where, "maturity must be > 0");
    model::require_valid(p);
    quadrature::validate_config(cfg);
    auto f = [&](cplx eta) { return transforms::joint_cf_h(0.0, p.v0, maturity, {0.0, eta}, p); };
    const auto st = make_stencil(1, method, cfg.derivative_step);
    std::vector<cplx> samples;
    for (const cplx z : st.points) samples.push_back(f(z));
    const auto d = apply(st, samples, where);
    const cplx mean = -kI * d.value;
    require_real(mean, d.err + cfg.abs_tol, where);
    return mean.real() / maturity;
}

}  // namespace threehalves::pricers
