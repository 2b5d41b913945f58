#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "pricers.hpp"
#include "transforms.hpp"

namespace threehalves::pricers {

namespace {

constexpr cplx kI(0.0, 1.0);

}  // namespace

cplx payoff_transform_call(cplx omega, double strike) {
    return -std::exp((1.0 - kI * omega) * std::log(strike)) / (kI * omega + omega * omega);
}

PriceResult price_european(const EuropeanSpec& spec, const ModelParams& p, const QuadratureConfig& cfg) {
    constexpr const char* where = "pricers.price_european";
    if (!(spec.strike > 0.0) || !std::isfinite(spec.strike))
        fail(ErrorKind::invalid_argument, where, "strike must be positive");
    if (!(spec.maturity > 0.0) || !std::isfinite(spec.maturity))
        fail(ErrorKind::invalid_argument, where, "maturity must be positive");
    model::require_valid(p);
    quadrature::validate_config(cfg);

    const double T = spec.maturity;
    const double x0 = std::log(p.s0);
    auto cf = [&](cplx w) {
        return std::exp(kI * w * x0 + transforms::log_joint_cf_h(0.0, p.v0, T, {w, 0.0}, p) - p.r * T);
    };
    auto pay = [&](cplx w) { return payoff_transform_call(w, spec.strike); };
    const quadrature::FourierAxis axis{cfg.damping_omega, cfg.fourier_truncation, cfg.fourier_nodes};
    const auto inv = quadrature::fourier_invert_1d(cf, pay, axis, cfg, true);

    if (inv.imag_residual > 1e-8 * std::max(std::abs(inv.value), cfg.abs_tol)) {
        std::ostringstream os;
        os << "imaginary residual " << inv.imag_residual << " exceeds 1e-8 of the price " << inv.value;
        fail(ErrorKind::contour, where, os.str());
    }
    PriceResult out;
    out.value = inv.value;
    if (!spec.is_call) out.value += spec.strike * std::exp(-p.r * T) - p.s0 * std::exp(-p.q * T);
    out.err_estimate = inv.err_estimate;
    out.imag_residual = inv.imag_residual;
    out.truncation_warning = inv.truncation_warning;
    return out;
}

}  // namespace threehalves::pricers
