#include "model.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace threehalves::model {

ThetaCurve::ThetaCurve(std::vector<double> breakpoints, std::vector<double> values)
    : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    constexpr const char* where = "model::ThetaCurve";
    if (values_.empty() || breaks_.size() != values_.size() + 1)
        fail(ErrorKind::invalid_argument, where, "need one value per interval between breakpoints");
    if (breaks_.front() != 0.0) fail(ErrorKind::invalid_argument, where, "first breakpoint must be 0");
    for (std::size_t i = 1; i < breaks_.size(); ++i) {
        if (!(breaks_[i] > breaks_[i - 1]))
            fail(ErrorKind::invalid_argument, where, "breakpoints must be strictly increasing");
    }
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
        if (std::isnan(breaks_[i])) fail(ErrorKind::invalid_argument, where, "NaN breakpoint");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, where, "theta values must be finite");
    }
}

ThetaCurve ThetaCurve::constant(double value, double horizon) {
    return ThetaCurve({0.0, horizon}, {value});
}

void ThetaCurve::check_interval(double t, double t_prime, const char* where) const {
    if (!(t >= 0.0) || !(t_prime <= horizon()) || !(t <= t_prime)) {
        std::ostringstream os;
        os << "interval [" << t << ", " << t_prime << "] outside curve domain [0, " << horizon() << "]";
        fail(ErrorKind::domain, where, os.str());
    }
}

double ThetaCurve::integral(double t, double t_prime) const {
    check_interval(t, t_prime, "model::coef_A");
    if (t == t_prime) return 0.0;
    if (is_constant()) return values_[0] * (t_prime - t);
    double total = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double lo = std::max(t, breaks_[i]);
        const double hi = std::min(t_prime, breaks_[i + 1]);
        if (hi > lo) total += values_[i] * (hi - lo);
    }
    return total;
}

double ThetaCurve::value_at(double t) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (t < breaks_[i + 1]) return values_[i];
    }
    return values_.back();
}

ModelParams reference_params() {
    ModelParams p;
    p.kappa = 22.84;
    p.theta = ThetaCurve::constant(4.979);
    p.epsilon = 8.56;
    p.v0 = 0.060025;
    p.rho = -0.99;
    p.s0 = 100.0;
    p.r = 0.015;
    p.q = 0.0;
    return p;
}

std::vector<Violation> validate(const ModelParams& p) {
    std::vector<Violation> out;
    auto add = [&](const char* name, const std::string& detail) { out.push_back({name, detail}); };
    auto num = [](double x) {
        std::ostringstream os;
        os << x;
        return os.str();
    };
    for (auto [name, x] : {std::pair{"kappa", p.kappa}, {"epsilon", p.epsilon}, {"rho", p.rho},
                           {"r", p.r}, {"q", p.q}, {"s0", p.s0}, {"v0", p.v0}}) {
        if (!std::isfinite(x)) add("finite", std::string(name) + " is not finite");
    }
    if (!(p.epsilon > 0.0)) add("epsilon > 0", "epsilon = " + num(p.epsilon));
    if (!(p.s0 > 0.0)) add("s0 > 0", "s0 = " + num(p.s0));
    if (!(p.v0 > 0.0)) add("v0 > 0", "v0 = " + num(p.v0));
    if (!(p.rho >= -1.0 && p.rho <= 1.0)) add("rho in [-1, 1]", "rho = " + num(p.rho));
    const double lhs = p.kappa - p.rho * p.epsilon;
    const double rhs = -0.5 * p.epsilon * p.epsilon;
    if (!(lhs >= rhs)) {
        add("kappa - rho*epsilon >= -epsilon^2/2",
            "kappa - rho*epsilon = " + num(lhs) + " < " + num(rhs));
    }
    if (p.jumps) {
        if (!(p.jumps->lambda >= 0.0)) add("lambda >= 0", "lambda = " + num(p.jumps->lambda));
        if (!(p.jumps->sigma >= 0.0)) add("sigma >= 0", "sigma = " + num(p.jumps->sigma));
        if (!std::isfinite(p.jumps->mu)) add("finite", "mu is not finite");
    }
    return out;
}

void require_valid(const ModelParams& p) {
    const auto v = validate(p);
    if (v.empty()) return;
    std::string msg = "inadmissible parameters:";
    for (const auto& x : v) msg += " [" + x.constraint + ": " + x.detail + "]";
    fail(ErrorKind::constraint, "model::validate", msg);
}

double coef_A(const ThetaCurve& theta, double t, double t_prime) {
    return std::exp(theta.integral(t, t_prime));
}

namespace {
// int_0^len exp(th s) ds
double expint(double th, double len) {
    if (th == 0.0) return len;
    return std::expm1(th * len) / th;
}
}  // namespace

double coef_C(const ThetaCurve& theta, double epsilon, double t, double t_prime) {
    theta.check_interval(t, t_prime, "model::coef_C");
    if (t == t_prime) return 0.0;
    const double half_eps2 = 0.5 * epsilon * epsilon;
    if (theta.is_constant()) return half_eps2 * expint(theta.values_[0], t_prime - t);
    double total = 0.0, cum_log = 0.0;
    for (std::size_t i = 0; i < theta.values_.size(); ++i) {
        const double lo = std::max(t, theta.breaks_[i]);
        const double hi = std::min(t_prime, theta.breaks_[i + 1]);
        if (!(hi > lo)) continue;
        const double th = theta.values_[i];
        total += std::exp(cum_log) * expint(th, hi - lo);
        cum_log += th * (hi - lo);
    }
    return half_eps2 * total;
}

double jump_compensator(const JumpParams& j) { return std::expm1(j.mu + 0.5 * j.sigma * j.sigma); }

DriftResult drift_a(cplx omega, cplx eta, const ModelParams& p) {
    const cplx i(0.0, 1.0);
    if (!p.jumps || p.jumps->lambda == 0.0) return {i * omega * (p.r - p.q), false};
    const JumpParams& j = *p.jumps;
    const double s2 = j.sigma * j.sigma;
    const cplx d = 1.0 - 2.0 * i * eta * s2;
    DriftResult out;
    out.branch_warning = d.real() <= 0.0;
    const cplx expo = (2.0 * i * j.mu * (omega + eta * j.mu) - omega * omega * s2) / (2.0 * d);
    out.value = i * omega * (p.r - p.q - j.lambda * jump_compensator(j)) +
                j.lambda * std::exp(expo) / std::sqrt(d) - j.lambda;
    return out;
}

}  // namespace threehalves::model
