#include "specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace threehalves::specfun {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogPi = 1.1447298858494002;
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLn2 = std::numbers::ln2;
constexpr double kRescale = 1e150;
constexpr double kLogRescale = 345.38776394910684;
constexpr double kSeriesEps = 1e-16;
constexpr double kMaxLogDouble = 709.782712893384;
// log(1e-17): a subdominant exponential branch below this is dropped.
constexpr double kLogNegligible = -39.1439465808987;
constexpr double kStirlingMin = 15.0;

// Stirling coefficients B_2k / (2k (2k-1)), k = 1..8
constexpr double kStirling[] = {
    1.0 / 12.0,      -1.0 / 360.0,   1.0 / 1260.0,         -1.0 / 1680.0,
    1.0 / 1188.0,    -691.0 / 360360.0, 1.0 / 156.0,       -3617.0 / 122400.0,
};

inline double mag(cplx z) { return std::sqrt(z.real() * z.real() + z.imag() * z.imag()); }

bool is_nonpositive_integer(cplx z) {
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

void require_finite(cplx z, const char* where, const char* name) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        fail(ErrorKind::invalid_argument, where, std::string("non-finite ") + name);
}

// Principal Log sin(pi z), written so large |Im z| does not overflow.
cplx log_sin_pi(cplx z) {
    const double y = z.imag();
    const double xr = z.real() - 2.0 * std::round(z.real() / 2.0);
    if (std::abs(y) < 1.0) {
        return std::log(cplx(std::sin(kPi * xr) * std::cosh(kPi * y),
                             std::cos(kPi * xr) * std::sinh(kPi * y)));
    }
    const bool flip = y < 0.0;
    const cplx w(xr, std::abs(y));
    const cplx i(0.0, 1.0);
    // sin(pi w) = e^{-i pi w} (e^{2 i pi w} - 1) / (2i), and |e^{2 i pi w}| < 1
    cplx l = -i * kPi * w + std::log(std::exp(2.0 * i * kPi * w) - 1.0) - std::log(cplx(0.0, 2.0));
    double im = std::remainder(l.imag(), 2.0 * kPi);
    if (im <= -kPi) im += 2.0 * kPi;
    l = cplx(l.real(), im);
    return flip ? std::conj(l) : l;
}

// log of sum_k (x)^k / (k! (nu+1)_k) with rescaling. x = z^2 / 4.
cplx log_bessel_series_sum(cplx nu, cplx x, const char* where) {
    cplx sum = 1.0, term = 1.0;
    double abs_sum = 1.0, log_scale = 0.0;
    const double ax = mag(x);
    int small = 0;
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
        const double k1 = k + 1.0;
        term *= x / (k1 * (nu + k1));
        sum += term;
        const double at = mag(term);
        abs_sum += at;
        if (at < kSeriesEps * mag(sum)) {
            if (++small >= 2 && ax < (k1 + 1.0) * mag(nu + k1 + 1.0)) {
                if (abs_sum > kMaxCancellation * mag(sum))
                    fail(ErrorKind::precision_loss, where, "series cancellation too severe");
                return std::log(sum) + log_scale;
            }
        } else {
            small = 0;
        }
        if (abs_sum > kRescale) {
            sum /= kRescale;
            term /= kRescale;
            abs_sum /= kRescale;
            log_scale += kLogRescale;
        }
    }
    fail(ErrorKind::non_convergence, where, "Bessel series exceeded term budget");
}

// Large-argument expansion, Re z > 0. Returns false if it cannot reach full
// precision, in which case the caller falls back to the series.
bool log_bessel_asymptotic(cplx nu, cplx z, cplx& out) {
    if (z.real() <= 0.0) return false;
    if (2.0 * z.real() - kPi * std::abs(nu.imag()) < -kLogNegligible) return false;
    const cplx mu = 4.0 * nu * nu;
    cplx sum = 1.0, term = 1.0;
    double prev = 1.0;
    const cplx inv8z = 1.0 / (8.0 * z);
    for (int k = 0; k < 200; ++k) {
        const double odd = 2.0 * k + 1.0;
        term *= -(mu - odd * odd) * inv8z / (k + 1.0);
        const double at = mag(term);
        if (at > prev) return false;
        sum += term;
        if (at < 1e-17 * mag(sum)) {
            out = z - 0.5 * std::log(2.0 * kPi * z) + std::log(sum);
            return true;
        }
        prev = at;
    }
    return false;
}

cplx log_kummer_series(cplx a, cplx b, cplx z, const char* where) {
    cplx sum = 1.0, term = 1.0;
    double abs_sum = 1.0, log_scale = 0.0;
    const double az = mag(z);
    int small = 0;
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
        const double k1 = k + 1.0;
        term *= (a + double(k)) * z / ((b + double(k)) * k1);
        sum += term;
        const double at = mag(term);
        abs_sum += at;
        if (at == 0.0 || at < kSeriesEps * mag(sum)) {
            if (at == 0.0 ||
                (++small >= 2 && mag(a + k1) * az < mag(b + k1) * (k1 + 1.0))) {
                if (abs_sum > kMaxCancellation * mag(sum))
                    fail(ErrorKind::precision_loss, where, "series cancellation too severe");
                return std::log(sum) + log_scale;
            }
        } else {
            small = 0;
        }
        if (abs_sum > kRescale) {
            sum /= kRescale;
            term /= kRescale;
            abs_sum /= kRescale;
            log_scale += kLogRescale;
        }
    }
    fail(ErrorKind::non_convergence, where, "Kummer series exceeded term budget");
}

// Dominant large-|z| branch of M(a, b, z) for Re z > 0.
bool log_kummer_asymptotic(cplx a, cplx b, cplx z, cplx& out) {
    if (z.real() <= 0.0 || is_nonpositive_integer(a) || is_nonpositive_integer(b - a)) return false;
    const cplx lz = std::log(z);
    const cplx lg_a = log_gamma(a), lg_bma = log_gamma(b - a);
    // |subdominant / dominant| = |Gamma(a)/Gamma(b-a)| e^{-Re z} |z^{b-2a}| e^{pi |Im a|}
    const double sub = (lg_a - lg_bma).real() - z.real() + ((b - 2.0 * a) * lz).real() + kPi * std::abs(a.imag());
    if (sub > kLogNegligible) return false;
    cplx sum = 1.0, term = 1.0;
    double prev = 1.0;
    const cplx p = b - a, q = 1.0 - a;
    for (int k = 0; k < 200; ++k) {
        term *= (p + double(k)) * (q + double(k)) / ((k + 1.0) * z);
        const double at = mag(term);
        if (at > prev && at > 1e-17) return false;
        sum += term;
        if (at < 1e-17 * mag(sum)) {
            out = log_gamma(b) - lg_a + z + (a - b) * lz + std::log(sum);
            return true;
        }
        prev = at;
    }
    return false;
}

cplx log_kummer_nonneg(cplx a, cplx b, cplx z) {
    if (mag(z) > kKummerAsymptoticThreshold) {
        cplx out;
        if (log_kummer_asymptotic(a, b, z, out)) return out;
    }
    return log_kummer_series(a, b, z, "specfun::kummer_m");
}

cplx checked_exp(cplx l, const char* where) {
    if (l.real() > kMaxLogDouble) fail(ErrorKind::overflow, where, "result exceeds double range");
    return std::exp(l);
}

}  // namespace

cplx log_gamma(cplx z) {
    require_finite(z, "specfun::log_gamma", "argument");
    if (is_nonpositive_integer(z)) fail(ErrorKind::pole, "specfun::log_gamma", "pole at non-positive integer");
    if (z.real() < 0.5) {
        const double tmp = std::copysign(2.0 * kPi, z.imag()) * std::floor(0.5 * z.real() + 0.25);
        return cplx(kLogPi, tmp) - log_sin_pi(z) - log_gamma(1.0 - z);
    }
    cplx w = z, shift = 0.0;
    while (mag(w) < kStirlingMin) {
        shift += std::log(w);
        w += 1.0;
    }
    const cplx winv = 1.0 / w, w2inv = winv * winv;
    cplx corr = 0.0, t = winv;
    for (double c : kStirling) {
        corr += c * t;
        t *= w2inv;
    }
    const cplx r = (w - 0.5) * std::log(w) - w + kHalfLog2Pi + corr - shift;
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag()))
        fail(ErrorKind::overflow, "specfun::log_gamma", "result not representable");
    return r;
}

cplx log_bessel_i(cplx nu, cplx z) {
    constexpr const char* where = "specfun::bessel_i";
    require_finite(nu, where, "order");
    require_finite(z, where, "argument");
    if (is_nonpositive_integer(nu)) nu = -nu;  // I_{-n} = I_n
    if (z == 0.0) {
        if (nu == 0.0) return 0.0;
        if (nu.real() > 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
        fail(ErrorKind::domain, where, "z = 0 with Re(nu) <= 0");
    }
    if (mag(z) > kBesselAsymptoticThreshold) {
        cplx out;
        if (log_bessel_asymptotic(nu, z, out)) return out;
    }
    return nu * (std::log(z) - kLn2) - log_gamma(nu + 1.0) + log_bessel_series_sum(nu, 0.25 * z * z, where);
}

cplx log_bessel_i_series(cplx nu, cplx z) {
    if (z == 0.0 || is_nonpositive_integer(nu)) return log_bessel_i(nu, z);
    return nu * (std::log(z) - kLn2) - log_gamma(nu + 1.0) +
           log_bessel_series_sum(nu, 0.25 * z * z, "specfun::bessel_i");
}

bool log_bessel_i_asymptotic(cplx nu, cplx z, cplx& out) { return log_bessel_asymptotic(nu, z, out); }

cplx bessel_i(cplx nu, cplx z) { return checked_exp(log_bessel_i(nu, z), "specfun::bessel_i"); }

cplx bessel_i_scaled(cplx nu, cplx z) {
    return checked_exp(log_bessel_i(nu, z) - z.real(), "specfun::bessel_i_scaled");
}

cplx log_kummer_m(cplx a, cplx b, cplx z) {
    constexpr const char* where = "specfun::kummer_m";
    require_finite(a, where, "a");
    require_finite(b, where, "b");
    require_finite(z, where, "z");
    if (is_nonpositive_integer(b)) fail(ErrorKind::pole, where, "b is a non-positive integer");
    if (z == 0.0) return 0.0;
    if (z.real() < 0.0) return z + log_kummer_nonneg(b - a, b, -z);
    return log_kummer_nonneg(a, b, z);
}

cplx kummer_m(cplx a, cplx b, cplx z) { return checked_exp(log_kummer_m(a, b, z), "specfun::kummer_m"); }

cplx kummer_m_series(cplx a, cplx b, cplx z) {
    constexpr const char* where = "specfun::kummer_m_series";
    require_finite(a, where, "a");
    require_finite(b, where, "b");
    require_finite(z, where, "z");
    if (is_nonpositive_integer(b)) fail(ErrorKind::pole, where, "b is a non-positive integer");
    if (z == 0.0) return 1.0;
    return checked_exp(log_kummer_series(a, b, z, where), where);
}

// ---------------------------------------------------------------------------

BesselIFixedOrder::BesselIFixedOrder(cplx nu) : nu_(nu) {
    require_finite(nu, "specfun::BesselIFixedOrder", "order");
    if (nu.real() <= -1.0) fail(ErrorKind::domain, "specfun::BesselIFixedOrder", "Re(nu) must exceed -1");
    log_gamma_nu1_ = log_gamma(nu + 1.0);
    mu_ = 4.0 * nu * nu;
    inv_.reserve(256);
}

bool BesselIFixedOrder::try_asymptotic(double z, cplx& out) const {
    if (2.0 * z - kPi * std::abs(nu_.imag()) < -kLogNegligible) return false;
    cplx sum = 1.0, term = 1.0;
    double prev = 1.0;
    const double inv8z = 1.0 / (8.0 * z);
    for (int k = 0; k < 200; ++k) {
        const double odd = 2.0 * k + 1.0;
        term *= (odd * odd - mu_) * (inv8z / (k + 1.0));
        const double at = mag(term);
        if (at > prev) return false;
        sum += term;
        if (at < 1e-17 * mag(sum)) {
            out = z - 0.5 * std::log(2.0 * kPi * z) + std::log(sum);
            return true;
        }
        prev = at;
    }
    return false;
}

cplx BesselIFixedOrder::log_value(double z) {
    constexpr const char* where = "specfun::bessel_i";
    if (!(z > 0.0) || !std::isfinite(z)) fail(ErrorKind::domain, where, "argument must be positive and finite");
    if (z > kBesselAsymptoticThreshold) {
        cplx out;
        if (try_asymptotic(z, out)) return out;
    }
    const double x = 0.25 * z * z;
    cplx sum = 1.0, term = 1.0;
    double abs_sum = 1.0, log_scale = 0.0;
    int small = 0;
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
        while (static_cast<int>(inv_.size()) <= k + 1) {
            const double k1 = inv_.size() + 1.0;
            inv_.push_back(1.0 / (k1 * (nu_ + k1)));
        }
        term *= x * inv_[k];
        sum += term;
        const double at = mag(term);
        abs_sum += at;
        if (at < kSeriesEps * mag(sum)) {
            if (++small >= 2 && x * mag(inv_[k + 1]) < 1.0) {
                if (abs_sum > kMaxCancellation * mag(sum))
                    fail(ErrorKind::precision_loss, where, "series cancellation too severe");
                return nu_ * (std::log(z) - kLn2) - log_gamma_nu1_ + std::log(sum) + log_scale;
            }
        } else {
            small = 0;
        }
        if (abs_sum > kRescale) {
            sum /= kRescale;
            term /= kRescale;
            abs_sum /= kRescale;
            log_scale += kLogRescale;
        }
    }
    fail(ErrorKind::non_convergence, where, "Bessel series exceeded term budget");
}

KummerFixedParams::KummerFixedParams(cplx a, cplx b) : a_(a), b_(b) {
    constexpr const char* where = "specfun::KummerFixedParams";
    require_finite(a, where, "a");
    require_finite(b, where, "b");
    if (is_nonpositive_integer(b)) fail(ErrorKind::pole, where, "b is a non-positive integer");
    a_is_pole_ = is_nonpositive_integer(a) || is_nonpositive_integer(b - a);
    lg_b_ = log_gamma(b);
    if (!a_is_pole_) {
        lg_bma_ = log_gamma(b - a);
        lg_a_ = log_gamma(a);
    }
    ratio_.reserve(256);
}

bool KummerFixedParams::try_asymptotic(double x, cplx& out) const {
    if (a_is_pole_) return false;
    const double lx = std::log(x);
    const double sub = (lg_bma_ - lg_a_).real() - x + (2.0 * a_ - b_).real() * lx + kPi * std::abs((b_ - a_).imag());
    if (sub > kLogNegligible) return false;
    cplx sum = 1.0, term = 1.0;
    double prev = 1.0;
    const cplx q = 1.0 + a_ - b_;
    const double inv_x = 1.0 / x;
    for (int k = 0; k < 200; ++k) {
        term *= (a_ + double(k)) * (q + double(k)) * (inv_x / (k + 1.0));
        const double at = mag(term);
        if (at > prev && at > 1e-17) return false;
        sum += term;
        if (at < 1e-17 * mag(sum)) {
            out = lg_b_ - lg_bma_ - a_ * lx + std::log(sum);
            return true;
        }
        prev = at;
    }
    return false;
}

cplx KummerFixedParams::log_value_neg(double x) {
    constexpr const char* where = "specfun::kummer_m";
    if (!(x >= 0.0) || !std::isfinite(x)) fail(ErrorKind::domain, where, "argument must be finite and >= 0");
    if (x == 0.0) return 0.0;
    if (x > kKummerAsymptoticThreshold) {
        cplx out;
        if (try_asymptotic(x, out)) return out;
    }
    // M(a, b, -x) = e^{-x} M(b-a, b, x)
    const cplx p = b_ - a_;
    cplx sum = 1.0, term = 1.0;
    double abs_sum = 1.0, log_scale = 0.0;
    int small = 0;
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
        while (static_cast<int>(ratio_.size()) <= k + 1) {
            const double kk = static_cast<double>(ratio_.size());
            ratio_.push_back((p + kk) / ((b_ + kk) * (kk + 1.0)));
        }
        term *= x * ratio_[k];
        sum += term;
        const double at = mag(term);
        abs_sum += at;
        if (at == 0.0 || at < kSeriesEps * mag(sum)) {
            if (at == 0.0 || (++small >= 2 && x * mag(ratio_[k + 1]) < 1.0)) {
                if (abs_sum > kMaxCancellation * mag(sum))
                    fail(ErrorKind::precision_loss, where, "series cancellation too severe");
                return -x + std::log(sum) + log_scale;
            }
        } else {
            small = 0;
        }
        if (abs_sum > kRescale) {
            sum /= kRescale;
            term /= kRescale;
            abs_sum /= kRescale;
            log_scale += kLogRescale;
        }
    }
    fail(ErrorKind::non_convergence, where, "Kummer series exceeded term budget");
}

}  // namespace threehalves::specfun
