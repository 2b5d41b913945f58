#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"

namespace threehalves::quadrature {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::invalid_argument, "quadrature.config", what);
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Trapezoid aliasing error falls like exp(-const/h). Given the difference
// between the h and 2h rules (which is essentially the 2h error), the h error
// is about its square divided by the size of the aliased function. |value|
// stands in for the latter; capped at the raw difference.
double extrapolated_alias(double coarse_diff, double value) {
    const double scale = std::abs(value);
    if (!(scale > 0.0)) return coarse_diff;
    return std::min(coarse_diff, coarse_diff * coarse_diff / scale);
}

}  // namespace

void validate_config(const QuadratureConfig& c) {
    require(c.v_nodes >= 8, "v_nodes must be >= 8");
    require(c.v_upper_mass_tol > 0.0 && c.v_upper_mass_tol < 1e-2, "v_upper_mass_tol must be in (0, 1e-2)");
    require(c.fourier_nodes >= 16 && c.fourier_nodes % 4 == 0, "fourier_nodes must be a multiple of 4, >= 16");
    require(c.fourier_truncation > 0.0, "fourier_truncation must be positive");
    require(c.damping_omega < -1.0, "damping_omega must be < -1 (call transform strip)");
    require(c.damping_eta > 0.0, "damping_eta must be positive");
    require(c.rel_tol > 0.0 && c.rel_tol < 1.0, "rel_tol must be in (0, 1)");
    require(c.abs_tol > 0.0, "abs_tol must be positive");
    require(c.max_refinements >= 2 && c.max_refinements <= 30, "max_refinements must be in [2, 30]");
    require(c.timer_omega_nodes >= 16 && c.timer_omega_nodes % 4 == 0,
            "timer_omega_nodes must be a multiple of 4, >= 16");
    require(c.timer_omega_truncation > 0.0, "timer_omega_truncation must be positive");
    require(c.timer_omega_damping < -1.0, "timer_omega_damping must be < -1 (call transform strip)");
    require(c.timer_eta_truncation > 0.0, "timer_eta_truncation must be positive");
    require(c.timer_eta_damping_lower > 0.0, "timer_eta_damping_lower must be positive");
    require(c.filter_alpha >= 0.0 && c.filter_alpha <= 745.0, "filter_alpha must be in [0, 745]");
    require(c.filter_order >= 2 && c.filter_order % 2 == 0, "filter_order must be even, >= 2");
    require(c.derivative_step > 0.0 && c.derivative_step < 1.0, "derivative_step must be in (0, 1)");
    require(c.corridor_damping < 0.0 && c.corridor_damping > -1.0, "corridor_damping must be in (-1, 0)");
}

IntegralResult integrate_semi_infinite(const std::function<cplx(double)>& f, const QuadratureConfig& cfg,
                                       LogHint hint) {
    const double w = hint.width > 0.0 ? hint.width : 1.0;
    const double c = hint.center;
    constexpr double h0 = 0.5;
    constexpr double s_cap = 8.0;
    IntegralResult res;

    bool out_of_range = false;
    auto eval = [&](double s) -> cplx {
        const double u = c + w * std::sinh(s);
        const double v = std::exp(u);
        // Outside the double range; march() checks the integrand had decayed.
        out_of_range = (v == 0.0 || !std::isfinite(v));
        if (out_of_range) return 0.0;
        ++res.evaluations;
        cplx fv;
        try {
            fv = f(v);
        } catch (const NumericError& e) {
            std::ostringstream os;
            os.precision(17);
            os << "integrand failed at v' = " << v << ": " << e.what();
            throw NumericError(e.kind(), "quadrature.integrate_semi_infinite", os.str());
        }
        if (!finite(fv)) {
            std::ostringstream os;
            os.precision(17);
            os << "non-finite integrand at v' = " << v;
            fail(ErrorKind::overflow, "quadrature.integrate_semi_infinite", os.str());
        }
        return fv * v * w * std::cosh(s);
    };

    // Level 0: march outward until three consecutive terms are negligible.
    CompensatedComplexSum level0;
    level0.add(eval(0.0));
    auto not_decaying = [&](double s) {
        std::ostringstream os;
        os.precision(6);
        os << "integrand not decaying toward v' = " << (s < 0 ? "0" : "infinity") << " (s = " << s << ")";
        fail(ErrorKind::non_convergence, "quadrature.integrate_semi_infinite", os.str());
    };
    auto march = [&](double dir) {
        int small = 0;
        double s = 0.0;
        for (int k = 1;; ++k) {
            s = dir * k * h0;
            if (std::abs(s) > s_cap) {
                if (small == 0) not_decaying(s);
                return dir * s_cap;
            }
            const cplx t = eval(s);
            if (out_of_range) {
                if (small == 0) not_decaying(s);
                return s;
            }
            level0.add(t);
            const double thr = 1e-3 * std::max(cfg.abs_tol, cfg.rel_tol * std::abs(level0.value()));
            if (std::abs(t) * h0 < thr) {
                if (++small >= 3 && std::abs(s) >= 2.0) return s;
            } else {
                small = 0;
            }
        }
    };
    const double s_lo = march(-1.0);
    const double s_hi = march(1.0);

    cplx prev = h0 * level0.value();
    CompensatedComplexSum running = level0;  // sum of all node values so far
    double h = h0;
    for (int level = 1; level <= cfg.max_refinements; ++level) {
        h *= 0.5;
        for (double s = s_lo + h; s < s_hi; s += 2.0 * h) running.add(eval(s));
        const cplx cur = h * running.value();
        const double diff = std::abs(cur - prev);
        res.value = cur;
        res.err_estimate = diff;
        res.levels = level;
        res.level_differences.push_back(diff);
        if (level >= 2 && diff <= std::max(cfg.rel_tol * std::abs(cur), cfg.abs_tol)) return res;
        prev = cur;
    }
    std::ostringstream os;
    os.precision(3);
    os << "no convergence after " << cfg.max_refinements << " refinements (last difference " << res.err_estimate
       << ", value magnitude " << std::abs(res.value) << ")";
    fail(ErrorKind::non_convergence, "quadrature.integrate_semi_infinite", os.str());
}

LogUniformRule make_log_uniform_rule(const std::function<double(double)>& density, LogHint hint, double tail_tol,
                                     int min_nodes, double points_per_sd, double max_step) {
    if (!(hint.width > 0.0) || !(points_per_sd > 0.0) || !(max_step > 0.0) || min_nodes < 2)
        fail(ErrorKind::invalid_argument, "quadrature.make_log_uniform_rule", "bad rule parameters");
    // u-density: density(e^u) e^u.
    auto pu = [&](double u) {
        const double v = std::exp(u);
        const double d = density(v) * v;
        return std::isfinite(d) ? d : 0.0;
    };
    const double scan = hint.width / 16.0;
    double peak = pu(hint.center);
    double u_lo = hint.center, u_hi = hint.center;
    // Moments accumulated along the scan give the bulk width.
    double m0 = peak, m1 = peak * hint.center, m2 = peak * hint.center * hint.center;
    constexpr int kMaxScan = 200000;
    for (int dir : {-1, 1}) {
        double u = hint.center;
        int below = 0;
        for (int i = 0; i < kMaxScan; ++i) {
            u += dir * scan;
            const double d = pu(u);
            peak = std::max(peak, d);
            m0 += d;
            m1 += d * u;
            m2 += d * u * u;
            if (d < tail_tol * peak) {
                if (++below >= 8) break;
            } else {
                below = 0;
            }
        }
        (dir < 0 ? u_lo : u_hi) = u;
    }
    if (!(m0 > 0.0)) fail(ErrorKind::domain, "quadrature.make_log_uniform_rule", "reference density vanishes");
    const double mean = m1 / m0;
    const double sd = std::sqrt(std::max(m2 / m0 - mean * mean, 0.0));
    double step = std::min(max_step, sd / points_per_sd);
    if (!(step > 0.0)) step = max_step;
    const int n = std::max(min_nodes, static_cast<int>(std::ceil((u_hi - u_lo) / step)) + 1);

    LogUniformRule rule;
    rule.du = (u_hi - u_lo) / (n - 1);
    rule.u0 = u_lo;
    rule.v.resize(n);
    rule.w.resize(n);
    for (int k = 0; k < n; ++k) {
        const double v = std::exp(u_lo + k * rule.du);
        rule.v[k] = v;
        rule.w[k] = rule.du * v * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
    }
    return rule;
}

FourierResult fourier_invert_1d(const std::function<cplx(cplx)>& cf, const std::function<cplx(cplx)>& payoff,
                                const FourierAxis& axis, const QuadratureConfig& cfg, bool fold) {
    if (axis.nodes < 8 || axis.nodes % 4 != 0 || !(axis.truncation > 0.0))
        fail(ErrorKind::invalid_argument, "quadrature.fourier_invert_1d", "nodes must be a multiple of 4, >= 8");
    const double h = axis.spacing();
    const double L = axis.truncation;
    const double L_short = 0.8 * L;
    auto integrand = [&](cplx w) {
        const cplx v = payoff(w) * cf(w);
        if (!finite(v)) {
            std::ostringstream os;
            os.precision(17);
            os << "non-finite integrand at omega = " << w.real() << (w.imag() < 0 ? " - " : " + ")
               << std::abs(w.imag()) << "i";
            fail(ErrorKind::overflow, "quadrature.fourier_invert_1d", os.str());
        }
        return v;
    };

    CompensatedComplexSum full, shorter, coarse;
    const int half = axis.nodes / 2;
    const int first = fold ? half : 0;
    for (int k = first; k < axis.nodes; ++k) {
        const double re = axis.real_at(k);
        const cplx v = integrand({re, axis.damping});
        full.add(axis.filter(re, L) * v);
        shorter.add(axis.filter(re, L_short) * v);
    }
    // Coarse midpoint grid at spacing 2h: nodes at odd multiples of h.
    for (int m = fold ? 0 : -half / 2; m < half / 2; ++m) {
        const double re = (2 * m + 1) * h;
        coarse.add(axis.filter(re, L) * integrand({re, axis.damping}));
    }

    FourierResult out;
    const double scale = h / (2.0 * kPi);
    if (fold) {
        out.value = 2.0 * full.value().real() * scale;
        const double v_short = 2.0 * shorter.value().real() * scale;
        const double v_coarse = 2.0 * coarse.value().real() * 2.0 * scale;
        out.tail_estimate = std::abs(out.value - v_short);
        out.err_estimate = out.tail_estimate + extrapolated_alias(std::abs(out.value - v_coarse), out.value);
        // Spot-check the Hermitian symmetry on a handful of mirrored nodes.
        double worst = 0.0;
        for (int k : {half, half + half / 7, half + half / 3}) {
            const cplx w = axis.node(k);
            const cplx a = integrand(w);
            const cplx b = integrand({-w.real(), w.imag()});
            worst = std::max(worst, std::abs(b - std::conj(a)));
        }
        out.imag_residual = worst * L / (2.0 * kPi);
    } else {
        const cplx s = full.value() * scale;
        out.value = s.real();
        out.imag_residual = std::abs(s.imag());
        out.tail_estimate = std::abs(out.value - shorter.value().real() * scale);
        out.err_estimate =
            out.tail_estimate + extrapolated_alias(std::abs(out.value - coarse.value().real() * 2.0 * scale), out.value);
    }
    out.truncation_warning = out.tail_estimate > std::max(cfg.rel_tol * std::abs(out.value), cfg.abs_tol);
    return out;
}

std::vector<ParsevalResult> parseval_double_multi(const MultiColumnFn& column, int n_out, const FourierAxis& oa,
                                                 const FourierAxis& ea, bool fold, bool omega_alias_check) {
    if (oa.nodes < 8 || oa.nodes % 4 != 0 || ea.nodes < 8 || ea.nodes % 2 != 0)
        fail(ErrorKind::invalid_argument, "quadrature.parseval_double", "grid sizes must be even (omega: x4)");
    if (n_out < 1) fail(ErrorKind::invalid_argument, "quadrature.parseval_double", "need at least one output");
    const int half = oa.nodes / 2;
    const int first = fold ? half : 0;
    const int ncols = oa.nodes - first;
    const int ne = ea.nodes;

    std::vector<cplx> etas(ne);
    std::vector<double> f_eta(ne), f_eta_short(ne);
    for (int k = 0; k < ne; ++k) {
        etas[k] = ea.node(k);
        f_eta[k] = ea.filter(etas[k].real(), ea.truncation);
        f_eta_short[k] = ea.filter(etas[k].real(), 0.8 * ea.truncation);
    }

    auto run_column = [&](cplx omega, std::vector<cplx>& buf) {
        buf.assign(static_cast<std::size_t>(n_out) * ne, cplx(0.0));
        column(omega, etas, buf);
        for (std::size_t k = 0; k < buf.size(); ++k) {
            if (!finite(buf[k])) {
                std::ostringstream os;
                os.precision(17);
                os << "non-finite integrand at omega = " << omega << ", eta = " << etas[k % ne];
                fail(ErrorKind::overflow, "quadrature.parseval_double", os.str());
            }
        }
    };

    // Per column and output: full sum, even-eta sum (2h rule), short window.
    std::vector<cplx> sums(static_cast<std::size_t>(ncols) * n_out * 3);
    parallel_for(static_cast<std::size_t>(ncols), [&](std::size_t i) {
        std::vector<cplx> buf;
        run_column(oa.node(first + static_cast<int>(i)), buf);
        for (int m = 0; m < n_out; ++m) {
            const cplx* b = buf.data() + static_cast<std::size_t>(m) * ne;
            CompensatedComplexSum full, even, shorter;
            for (int k = 0; k < ne; ++k) {
                full.add(f_eta[k] * b[k]);
                shorter.add(f_eta_short[k] * b[k]);
                if (k % 2 == 0) even.add(2.0 * f_eta[k] * b[k]);
            }
            cplx* out = sums.data() + (i * n_out + m) * 3;
            out[0] = full.value();
            out[1] = even.value();
            out[2] = shorter.value();
        }
    });

    // Coarse omega grid: odd multiples of h_omega, which are not on the fine
    // grid, so these are extra columns (half as many).
    std::vector<cplx> coarse;
    int m_first = 0, m_count = 0;
    if (omega_alias_check) {
        const double h = oa.spacing();
        m_first = fold ? 0 : -half / 2;
        m_count = half / 2 - m_first;
        coarse.resize(static_cast<std::size_t>(m_count) * n_out);
        parallel_for(static_cast<std::size_t>(m_count), [&](std::size_t i) {
            const double re = (2 * (m_first + static_cast<int>(i)) + 1) * h;
            std::vector<cplx> buf;
            run_column({re, oa.damping}, buf);
            const double fo = oa.filter(re, oa.truncation);
            for (int m = 0; m < n_out; ++m) {
                CompensatedComplexSum acc;
                for (int k = 0; k < ne; ++k) acc.add(f_eta[k] * buf[static_cast<std::size_t>(m) * ne + k]);
                coarse[i * n_out + m] = fo * acc.value();
            }
        });
    }

    // Hermitian spot check: mirror two columns and compare with the conjugate.
    std::vector<double> mirror(n_out, 0.0);
    if (fold) {
        for (int j : {half, half + half / 5}) {
            const cplx w = oa.node(j);
            std::vector<cplx> a, b;
            run_column(w, a);
            run_column({-w.real(), w.imag()}, b);
            for (int m = 0; m < n_out; ++m) {
                double d = 0.0;
                const std::size_t off = static_cast<std::size_t>(m) * ne;
                for (int k = 0; k < ne; ++k) d += f_eta[k] * std::abs(b[off + ne - 1 - k] - std::conj(a[off + k]));
                mirror[m] = std::max(mirror[m], d);
            }
        }
    }

    const double scale = oa.spacing() * ea.spacing() / (4.0 * kPi * kPi);
    const double mult = fold ? 2.0 : 1.0;
    std::vector<ParsevalResult> results(n_out);
    for (int m = 0; m < n_out; ++m) {
        CompensatedComplexSum s, s_eta_alias, s_eta_short, s_omega_short, s_omega_alias;
        for (int i = 0; i < ncols; ++i) {
            const double re = oa.real_at(first + i);
            const double fo = oa.filter(re, oa.truncation);
            const double fo_short = oa.filter(re, 0.8 * oa.truncation);
            const cplx* c = sums.data() + (static_cast<std::size_t>(i) * n_out + m) * 3;
            s.add(fo * c[0]);
            s_eta_alias.add(fo * c[1]);
            s_eta_short.add(fo * c[2]);
            s_omega_short.add(fo_short * c[0]);
        }
        ParsevalResult& out = results[m];
        out.value = mult * s.value().real() * scale;
        out.eta_alias =
            extrapolated_alias(std::abs(out.value - mult * s_eta_alias.value().real() * scale), out.value);
        out.eta_tail = std::abs(out.value - mult * s_eta_short.value().real() * scale);
        out.omega_tail = std::abs(out.value - mult * s_omega_short.value().real() * scale);
        if (omega_alias_check) {
            for (int i = 0; i < m_count; ++i) s_omega_alias.add(coarse[static_cast<std::size_t>(i) * n_out + m]);
            out.omega_alias = extrapolated_alias(
                std::abs(out.value - mult * s_omega_alias.value().real() * 2.0 * scale), out.value);
        }
        out.imag_residual = fold ? mirror[m] * ncols * scale : std::abs(s.value().imag()) * scale;
        out.err_estimate = out.eta_alias + out.eta_tail + out.omega_tail + out.omega_alias;
    }
    return results;
}

ParsevalResult parseval_double(const ColumnFn& column, const FourierAxis& oa, const FourierAxis& ea, bool fold,
                               bool omega_alias_check) {
    return parseval_double_multi(column, 1, oa, ea, fold, omega_alias_check).front();
}

}  // namespace threehalves::quadrature
