#pragma once

#include <complex>
#include <vector>

namespace threehalves::specfun {

using cplx = std::complex<double>;

// Above this |z| the Bessel evaluator tries the large-argument expansion.
// The expansion is only accepted when it converges to full precision and the
// exp(-z) branch is negligible, so the series still runs for large orders.
inline constexpr double kBesselAsymptoticThreshold = 30.0;
// Same idea for M(a, b, x) with large positive real part of x.
inline constexpr double kKummerAsymptoticThreshold = 40.0;
inline constexpr int kMaxSeriesTerms = 10000;
// Series whose sum of |terms| exceeds |sum| by more than this have lost too
// many digits to be trusted.
inline constexpr double kMaxCancellation = 1e8;

// Analytic continuation of log Gamma (mpmath/scipy convention). exp() of the
// result is Gamma(z). Throws on poles.
cplx log_gamma(cplx z);

// log I_nu(z). The imaginary part is determined only modulo 2 pi.
cplx log_bessel_i(cplx nu, cplx z);
cplx bessel_i(cplx nu, cplx z);
// exp(-Re z) * I_nu(z)
cplx bessel_i_scaled(cplx nu, cplx z);
// The two regimes on their own, for the threshold accuracy study. The
// asymptotic one returns false when it cannot reach full precision.
cplx log_bessel_i_series(cplx nu, cplx z);
bool log_bessel_i_asymptotic(cplx nu, cplx z, cplx& out);

// log M(a, b, z), with M(a,b,z) = e^z M(b-a, b, -z) applied for Re z < 0.
cplx log_kummer_m(cplx a, cplx b, cplx z);
cplx kummer_m(cplx a, cplx b, cplx z);
// Plain power series, never transformed. Used to check the transformation.
cplx kummer_m_series(cplx a, cplx b, cplx z);

// log I_nu(z) for one order and many real z > 0. The series ratios are
// cached, which matters on the timer grid where the same order is evaluated
// at thousands of arguments.
class BesselIFixedOrder {
public:
    explicit BesselIFixedOrder(cplx nu);
    cplx log_value(double z);
    cplx order() const { return nu_; }

private:
    bool try_asymptotic(double z, cplx& out) const;

    cplx nu_;
    cplx log_gamma_nu1_;
    cplx mu_;
    std::vector<cplx> inv_;  // 1 / ((k+1)(nu+k+1))
};

// log M(a, b, -x) for fixed (a, b) and many real x >= 0.
class KummerFixedParams {
public:
    KummerFixedParams(cplx a, cplx b);
    cplx log_value_neg(double x);

private:
    bool try_asymptotic(double x, cplx& out) const;

    cplx a_, b_;
    cplx lg_b_, lg_bma_, lg_a_;
    bool a_is_pole_;
    std::vector<cplx> ratio_;  // (b-a+k) / ((b+k)(k+1))
};

}  // namespace threehalves::specfun
