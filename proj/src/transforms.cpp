#include "transforms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "specfun.hpp"

namespace threehalves::transforms {

namespace {

using specfun::log_bessel_i;
using specfun::log_gamma;
using specfun::log_kummer_m;

constexpr cplx kI(0.0, 1.0);
constexpr double kMaxLog = 709.78;

void check_times(double t, double t_prime, const char* where) {
    if (!(t <= t_prime) || !std::isfinite(t) || !std::isfinite(t_prime)) {
        std::ostringstream os;
        os << "need t <= t' (got t = " << t << ", t' = " << t_prime << ")";
        fail(ErrorKind::invalid_argument, where, os.str());
    }
}

void check_kernel(double t, double v, double t_prime, double v_prime, const char* where) {
    check_times(t, t_prime, where);
    if (!(v > 0.0) || !(v_prime > 0.0) || !std::isfinite(v) || !std::isfinite(v_prime))
        fail(ErrorKind::domain, where, "variance arguments must be positive and finite");
    if (t_prime - t < kTerminalDelta)
        fail(ErrorKind::terminal_regime, where,
             "t' - t below 1e-10: the kernel is a Dirac mass there and has no finite value");
}

cplx checked_exp(cplx z, const char* where) {
    if (z.real() > kMaxLog) {
        std::ostringstream os;
        os << "result overflows double (log magnitude " << z.real() << ")";
        fail(ErrorKind::overflow, where, os.str());
    }
    if (std::isnan(z.real()) || std::isnan(z.imag())) fail(ErrorKind::overflow, where, "NaN in log-domain result");
    return std::exp(z);
}

// Bessel argument z = (2/C) sqrt(A / (v v')), kept in log form too.
double bessel_arg(double A, double C, double v, double v_prime) { return 2.0 / C * std::sqrt(A / (v * v_prime)); }

}  // namespace

cplx c_squared(TransformPoint pt, const ModelParams& p) {
    const double e2 = p.epsilon * p.epsilon;
    const cplx kt = p.kappa - kI * pt.omega * p.rho * p.epsilon;
    const cplx hp = 0.5 + kt / e2;
    return hp * hp + (kI * pt.omega + pt.omega * pt.omega - 2.0 * kI * pt.eta) / e2;
}

TransformCoefficients coefficients(TransformPoint pt, const ModelParams& p, double t, double t_prime) {
    check_times(t, t_prime, "transforms.coefficients");
    if (!std::isfinite(pt.omega.real()) || !std::isfinite(pt.omega.imag()) || !std::isfinite(pt.eta.real()) ||
        !std::isfinite(pt.eta.imag()))
        fail(ErrorKind::invalid_argument, "transforms.coefficients", "non-finite transform point");
    const double e2 = p.epsilon * p.epsilon;
    TransformCoefficients k;
    k.kappa_tilde = p.kappa - kI * pt.omega * p.rho * p.epsilon;
    k.half_plus = 0.5 + k.kappa_tilde / e2;
    if (pt.omega == cplx(0.0) && pt.eta == cplx(0.0))
        k.c = k.half_plus;  // perfect square; avoid the sqrt round trip
    else
        k.c = std::sqrt(k.half_plus * k.half_plus + (kI * pt.omega + pt.omega * pt.omega - 2.0 * kI * pt.eta) / e2);
    const auto drift = model::drift_a(pt.omega, pt.eta, p);
    k.a = drift.value;
    k.branch_warning = drift.branch_warning;
    k.A = model::coef_A(p.theta, t, t_prime);
    k.C = model::coef_C(p.theta, p.epsilon, t, t_prime);
    return k;
}

cplx log_partial_transform_g(double t, double v, double t_prime, TransformPoint pt, double v_prime,
                             const ModelParams& p) {
    constexpr const char* where = "transforms.partial_transform_g";
    check_kernel(t, v, t_prime, v_prime, where);
    const auto k = coefficients(pt, p, t, t_prime);
    const double dt = t_prime - t;
    const double lA = std::log(k.A), lC = std::log(k.C);
    const double lv = std::log(v), lvp = std::log(v_prime);
    const double z = bessel_arg(k.A, k.C, v, v_prime);
    if (!(z > 0.0) || !std::isfinite(z)) fail(ErrorKind::overflow, where, "Bessel argument out of range");
    return k.a * dt + lA - lC - (k.A * v + v_prime) / (k.C * v * v_prime) - 2.0 * lvp +
           k.half_plus * (lA + lv - lvp) + log_bessel_i(2.0 * k.c, cplx(z));
}

cplx partial_transform_g(double t, double v, double t_prime, TransformPoint pt, double v_prime, const ModelParams& p) {
    return checked_exp(log_partial_transform_g(t, v, t_prime, pt, v_prime, p), "transforms.partial_transform_g");
}

cplx partial_transform_g1(double t, double v, double t_prime, cplx omega, double v_prime, const ModelParams& p) {
    return partial_transform_g(t, v, t_prime, {omega, 0.0}, v_prime, p);
}

cplx log_joint_cf_h(double t, double v, double t_prime, TransformPoint pt, const ModelParams& p) {
    constexpr const char* where = "transforms.joint_cf_h";
    check_times(t, t_prime, where);
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::domain, where, "v must be positive and finite");
    if (t == t_prime) return 0.0;
    const auto k = coefficients(pt, p, t, t_prime);
    const cplx alpha = k.c - k.half_plus;
    const cplx beta = 1.0 + 2.0 * k.c;
    const double x = 1.0 / (k.C * v);
    if (alpha == cplx(0.0)) return k.a * (t_prime - t);
    return k.a * (t_prime - t) + log_gamma(beta - alpha) - log_gamma(beta) + alpha * std::log(x) +
           log_kummer_m(alpha, beta, cplx(-x));
}

cplx joint_cf_h(double t, double v, double t_prime, TransformPoint pt, const ModelParams& p) {
    if (t == t_prime && v > 0.0) return 1.0;
    return checked_exp(log_joint_cf_h(t, v, t_prime, pt, p), "transforms.joint_cf_h");
}

double log_transition_density_v(double t, double v, double t_prime, double v_prime, const ModelParams& p) {
    constexpr const char* where = "transforms.transition_density_v";
    check_kernel(t, v, t_prime, v_prime, where);
    const double e2 = p.epsilon * p.epsilon;
    const double A = model::coef_A(p.theta, t, t_prime);
    const double C = model::coef_C(p.theta, p.epsilon, t, t_prime);
    const double nu0 = 1.0 + 2.0 * p.kappa / e2;
    const double lA = std::log(A), lC = std::log(C);
    const double lv = std::log(v), lvp = std::log(v_prime);
    const double z = bessel_arg(A, C, v, v_prime);
    return lA - lC - (A * v + v_prime) / (C * v * v_prime) - 2.0 * lvp + 0.5 * nu0 * (lA + lv - lvp) +
           log_bessel_i(cplx(nu0), cplx(z)).real();
}

double transition_density_v(double t, double v, double t_prime, double v_prime, const ModelParams& p) {
    const double l = log_transition_density_v(t, v, t_prime, v_prime, p);
    if (l > kMaxLog) fail(ErrorKind::overflow, "transforms.transition_density_v", "density overflows double");
    return std::exp(l);
}

double transition_density_u(double t, double u, double t_prime, double u_prime, const ModelParams& p) {
    constexpr const char* where = "transforms.transition_density_u";
    check_kernel(t, u, t_prime, u_prime, where);
    const double e2 = p.epsilon * p.epsilon;
    const double A = model::coef_A(p.theta, t, t_prime);
    const double C = model::coef_C(p.theta, p.epsilon, t, t_prime);
    const double nu0 = 1.0 + 2.0 * p.kappa / e2;
    const double z = 2.0 / C * std::sqrt(A * u * u_prime);
    const double l = std::log(A / C) - (A * u_prime + u) / C + 0.5 * nu0 * std::log(A * u_prime / u) +
                     log_bessel_i(cplx(nu0), cplx(z)).real();
    if (l > kMaxLog) fail(ErrorKind::overflow, where, "density overflows double");
    return std::exp(l);
}

cplx conditional_cf_integrated_variance(cplx xi, double t, double t_prime, double v, double v_prime,
                                        const ModelParams& p) {
    constexpr const char* where = "transforms.conditional_cf_integrated_variance";
    check_kernel(t, v, t_prime, v_prime, where);
    if (xi == cplx(0.0)) return 1.0;
    const double e2 = p.epsilon * p.epsilon;
    const double A = model::coef_A(p.theta, t, t_prime);
    const double C = model::coef_C(p.theta, p.epsilon, t, t_prime);
    const double nu0 = 1.0 + 2.0 * p.kappa / e2;
    const cplx nu_hat = std::sqrt(nu0 * nu0 - 8.0 * kI * xi / e2);
    const cplx z(bessel_arg(A, C, v, v_prime));
    // Both logs carry the same e^z growth, which cancels in the difference.
    return checked_exp(log_bessel_i(nu_hat, z) - log_bessel_i(cplx(nu0), z), where);
}

cplx factorization_xi(TransformPoint pt, const ModelParams& p) {
    const double e2 = p.epsilon * p.epsilon;
    const cplx w = pt.omega;
    return w * (p.rho * p.epsilon * (p.kappa / e2 + 0.5) - 0.5) + 0.5 * kI * (1.0 - p.rho * p.rho) * w * w + pt.eta;
}

cplx factorized_g(double t, double v, double t_prime, TransformPoint pt, double v_prime, const ModelParams& p) {
    constexpr const char* where = "transforms.factorized_g";
    check_kernel(t, v, t_prime, v_prime, where);
    const double dt = t_prime - t;
    const double A = model::coef_A(p.theta, t, t_prime);
    const cplx a = model::drift_a(pt.omega, pt.eta, p).value;
    const cplx tilt = kI * pt.omega * p.rho / p.epsilon * std::log(v_prime / (A * v));
    const cplx cond = conditional_cf_integrated_variance(factorization_xi(pt, p), t, t_prime, v, v_prime, p);
    const double dens = log_transition_density_v(t, v, t_prime, v_prime, p);
    return checked_exp(a * dt + tilt + dens, where) * cond;
}

quadrature::LogHint v_prime_hint(double t, double v, double t_prime, const ModelParams& p) {
    const double e2 = p.epsilon * p.epsilon;
    const double A = model::coef_A(p.theta, t, t_prime);
    const double C = model::coef_C(p.theta, p.epsilon, t, t_prime);
    if (!(C > 0.0)) return {std::log(v), 1e-3};
    // U' = C/(2A) chi'^2(k, lambda)
    const double k = 4.0 + 4.0 * p.kappa / e2;
    const double lambda = 2.0 / (v * C);
    const double mean_u = C / (2.0 * A) * (k + lambda);
    const double rel_sd = std::sqrt(2.0 * (k + 2.0 * lambda)) / (k + lambda);
    return {-std::log(mean_u), std::clamp(rel_sd, 1e-3, 1.5)};
}

PhiResult bivariate_cf_phi(double t, double x, double y, double v, double t1, double t2, cplx w1, cplx w2, cplx e1,
                           cplx e2, const ModelParams& p, const quadrature::QuadratureConfig& cfg) {
    constexpr const char* where = "transforms.bivariate_cf_phi";
    check_times(t, t1, where);
    check_times(t1, t2, where);
    const cplx lead = kI * (w1 + w2) * x + kI * (e1 + e2) * y;
    const TransformPoint first{w1 + w2, e1 + e2};
    const TransformPoint second{w2, e2};
    if (t1 - t < kTerminalDelta) {
        // First leg is a Dirac mass at v.
        return {checked_exp(lead + log_joint_cf_h(t1, v, t2, second, p), where), 0.0};
    }
    auto integrand = [&](double vp) {
        return std::exp(log_partial_transform_g(t, v, t1, first, vp, p) + log_joint_cf_h(t1, vp, t2, second, p));
    };
    const auto r = quadrature::integrate_semi_infinite(integrand, cfg, v_prime_hint(t, v, t1, p));
    const cplx scale = checked_exp(lead, where);
    return {scale * r.value, std::abs(scale) * r.err_estimate};
}

}  // namespace threehalves::transforms
