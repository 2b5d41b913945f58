#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>

#include "errors.hpp"
#include "quadrature.hpp"
#include "test_util.hpp"

using namespace threehalves;
using namespace threehalves::quadrature;
using testutil::rel_err;

namespace {

constexpr double kPi = std::numbers::pi;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double black_scholes_call(double s0, double k, double r, double q, double sigma, double t) {
    const double sd = sigma * std::sqrt(t);
    const double d1 = (std::log(s0 / k) + (r - q) * t) / sd + 0.5 * sd;
    return s0 * std::exp(-q * t) * norm_cdf(d1) - k * std::exp(-r * t) * norm_cdf(d1 - sd);
}

// -K^{1-iw} / (iw + w^2), the call transform for Im w < -1.
cplx call_transform(cplx w, double k) {
    const cplx i(0.0, 1.0);
    return -std::exp((1.0 - i * w) * std::log(k)) / (i * w + w * w);
}

double lognormal_pdf(double v, double m, double s) {
    const double z = (std::log(v) - m) / s;
    return std::exp(-0.5 * z * z) / (v * s * std::sqrt(2.0 * kPi));
}

}  // namespace

TEST_CASE("config validation") {
    QuadratureConfig cfg;
    CHECK_NOTHROW(validate_config(cfg));
    auto bad = [](auto mutate) {
        QuadratureConfig c;
        mutate(c);
        try {
            validate_config(c);
        } catch (const NumericError& e) {
            return e.kind() == ErrorKind::invalid_argument;
        }
        return false;
    };
    CHECK(bad([](QuadratureConfig& c) { c.fourier_nodes = 4; }));
    CHECK(bad([](QuadratureConfig& c) { c.fourier_nodes = 4098; }));
    CHECK(bad([](QuadratureConfig& c) { c.v_nodes = 7; }));
    CHECK(bad([](QuadratureConfig& c) { c.damping_omega = -0.5; }));
    CHECK(bad([](QuadratureConfig& c) { c.damping_eta = 0.0; }));
    CHECK(bad([](QuadratureConfig& c) { c.rel_tol = 0.0; }));
    CHECK(bad([](QuadratureConfig& c) { c.abs_tol = -1.0; }));
    CHECK(bad([](QuadratureConfig& c) { c.filter_order = 3; }));
}

TEST_CASE("compensated summation") {
    CompensatedSum s;
    for (double x : {1.0, 1e100, 1.0, -1e100}) s.add(x);
    CHECK(s.value() == 2.0);

    // Order-insensitive to 1e-14 on a badly scaled set.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> xs(20000);
    for (auto& x : xs) x = u(rng) * std::pow(10.0, 8.0 * u(rng));
    CompensatedSum a;
    for (double x : xs) a.add(x);
    std::shuffle(xs.begin(), xs.end(), rng);
    CompensatedSum b;
    for (double x : xs) b.add(x);
    double mag = 0.0;
    for (double x : xs) mag += std::abs(x);
    CHECK(std::abs(a.value() - b.value()) <= 1e-14 * std::abs(a.value()) + 1e-16 * mag);
}

TEST_CASE("semi-infinite integrals with known values") {
    QuadratureConfig cfg;
    SUBCASE("exponential") {
        auto r = integrate_semi_infinite([](double v) { return cplx(std::exp(-v)); }, cfg);
        CHECK(std::abs(r.value - 1.0) <= 1e-10);
        CHECK(r.err_estimate <= 1e-9);
    }
    SUBCASE("Gamma(0.3), integrable singularity at 0") {
        auto r = integrate_semi_infinite([](double v) { return cplx(std::pow(v, -0.7) * std::exp(-v)); }, cfg);
        CHECK(rel_err(r.value, cplx(std::tgamma(0.3))) <= 1e-10);
    }
    SUBCASE("complex exponential") {
        const cplx a(1.0, -2.0);
        auto r = integrate_semi_infinite([&](double v) { return std::exp(-a * v); }, cfg);
        CHECK(rel_err(r.value, 1.0 / a) <= 1e-10);
    }
    SUBCASE("narrow lognormal with a hint") {
        auto f = [](double v) { return cplx(lognormal_pdf(v, -2.8, 0.05)); };
        auto r = integrate_semi_infinite(f, cfg, {-2.8, 0.05});
        CHECK(std::abs(r.value - 1.0) <= 1e-10);
        // Without the hint the default scale still finds the mass.
        auto r2 = integrate_semi_infinite(f, cfg);
        CHECK(std::abs(r2.value - 1.0) <= 1e-8);
    }
}

TEST_CASE("refinement differences shrink") {
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-13;
    for (double a : {0.3, 1.0, 4.0}) {
        auto r = integrate_semi_infinite([&](double v) { return cplx(std::pow(v, a - 1.0) * std::exp(-v)); }, cfg);
        REQUIRE(r.level_differences.size() >= 2);
        for (std::size_t i = 1; i < r.level_differences.size(); ++i)
            CHECK(r.level_differences[i] <= r.level_differences[i - 1]);
        CHECK(r.err_estimate <= 1e-13 * std::abs(r.value));
    }
}

TEST_CASE("integrand failures are reported with the node") {
    QuadratureConfig cfg;
    try {
        integrate_semi_infinite(
            [](double v) -> cplx {
                if (v > 2.0) fail(ErrorKind::overflow, "test", "boom");
                return std::exp(-v);
            },
            cfg);
        FAIL("expected an exception");
    } catch (const NumericError& e) {
        CHECK(e.kind() == ErrorKind::overflow);
        CHECK(std::string(e.what()).find("v' =") != std::string::npos);
    }
    try {
        integrate_semi_infinite([](double v) { return cplx(1.0 / (1.0 + v)); }, cfg);
        FAIL("expected an exception");
    } catch (const NumericError& e) {
        CHECK(e.kind() == ErrorKind::non_convergence);
    }
    cfg.max_refinements = 2;
    cfg.rel_tol = 1e-15;
    cfg.abs_tol = 1e-300;
    CHECK_THROWS_AS(integrate_semi_infinite([](double v) { return cplx(std::exp(-v) * std::cos(40.0 * v)); }, cfg),
                    NumericError);
}

TEST_CASE("log-uniform rule") {
    auto pdf = [](double v) { return lognormal_pdf(v, -2.5, 0.4); };
    auto rule = make_log_uniform_rule(pdf, {-2.5, 0.4}, 1e-14, 8, 3.0, 0.5);
    double mass = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        mass += rule.w[k] * pdf(rule.v[k]);
        mean += rule.w[k] * rule.v[k] * pdf(rule.v[k]);
    }
    CHECK(std::abs(mass - 1.0) <= 1e-10);
    CHECK(std::abs(mean / std::exp(-2.5 + 0.08) - 1.0) <= 1e-10);
    for (std::size_t k = 1; k < rule.size(); ++k)
        CHECK(std::log(rule.v[k]) - std::log(rule.v[k - 1]) == doctest::Approx(rule.du).epsilon(1e-12));
    CHECK(rule.du <= 0.4 / 3.0 + 1e-12);
}

TEST_CASE("1-D inversion: Gaussian density") {
    QuadratureConfig cfg;
    const double x = 0.7;
    FourierAxis axis{0.0, 40.0, 1024};
    auto cf = [](cplx w) { return std::exp(-0.5 * w * w); };
    auto pay = [&](cplx w) { return std::exp(cplx(0.0, -1.0) * w * x); };
    auto folded = fourier_invert_1d(cf, pay, axis, cfg, true);
    auto full = fourier_invert_1d(cf, pay, axis, cfg, false);
    const double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    CHECK(std::abs(folded.value - exact) <= 1e-13);
    CHECK(std::abs(folded.value - full.value) <= 1e-12 * exact);
    CHECK(full.imag_residual <= 1e-14);
    CHECK(folded.imag_residual <= 1e-14);
    CHECK_FALSE(folded.truncation_warning);

    auto zero = fourier_invert_1d(cf, [](cplx) { return cplx(0.0); }, axis, cfg);
    CHECK(zero.value == 0.0);
}

TEST_CASE("1-D inversion: Black-Scholes call from a lognormal CF") {
    QuadratureConfig cfg;
    const double s0 = 100.0, r = 0.015, q = 0.0, sigma = 0.3, t = 0.5;
    auto cf = [&](cplx w) {
        const cplx i(0.0, 1.0);
        return std::exp(i * w * (std::log(s0) + (r - q - 0.5 * sigma * sigma) * t) - 0.5 * sigma * sigma * w * w * t -
                        r * t);
    };
    FourierAxis axis{cfg.damping_omega, cfg.fourier_truncation, cfg.fourier_nodes};
    for (double k : {60.0, 80.0, 100.0, 130.0, 200.0}) {
        auto res = fourier_invert_1d(cf, [&](cplx w) { return call_transform(w, k); }, axis, cfg);
        const double bs = black_scholes_call(s0, k, r, q, sigma, t);
        CAPTURE(k);
        CHECK(std::abs(res.value - bs) <= 1e-6 * std::max(1.0, bs));
        CHECK(res.err_estimate <= 1e-6);
    }
}

TEST_CASE("2-D Parseval on a separable integrand") {
    // (1/4pi^2) int int e^{-iwx - w^2/2} e^{-iey - s^2 e^2/2} = phi(x) phi_s(y)
    const double x = 0.4, y = -0.3, s = 0.7;
    const cplx i(0.0, 1.0);
    auto column = [&](cplx w, std::span<const cplx> etas, std::span<cplx> out) {
        const cplx fw = std::exp(-i * w * x - 0.5 * w * w);
        for (std::size_t k = 0; k < etas.size(); ++k)
            out[k] = fw * std::exp(-i * etas[k] * y - 0.5 * s * s * etas[k] * etas[k]);
    };
    const double exact =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi) * std::exp(-0.5 * y * y / (s * s)) / (s * std::sqrt(2.0 * kPi));
    for (double alpha : {0.0, 36.0}) {
        FourierAxis wa{-0.3, 30.0, 256, alpha, 8};
        FourierAxis ea{0.2, 40.0, 256, alpha, 8};
        auto folded = parseval_double(column, wa, ea, true);
        auto full = parseval_double(column, wa, ea, false);
        CAPTURE(alpha);
        CHECK(rel_err(folded.value, exact) <= 1e-6);
        CHECK(std::abs(folded.value - full.value) <= 1e-12 * exact);
        CHECK(folded.imag_residual <= 1e-12);
        CHECK(full.imag_residual <= 1e-12);
        CHECK(folded.err_estimate <= 1e-6);
    }
    FourierAxis wa{-0.3, 30.0, 64};
    FourierAxis ea{0.2, 40.0, 64};
    auto zero = parseval_double([](cplx, std::span<const cplx>, std::span<cplx> out) {
        std::fill(out.begin(), out.end(), cplx(0.0));
    }, wa, ea);
    CHECK(zero.value == 0.0);
    CHECK(zero.err_estimate == 0.0);
}

TEST_CASE("2-D Parseval is independent of the worker count") {
    const cplx i(0.0, 1.0);
    auto column = [&](cplx w, std::span<const cplx> etas, std::span<cplx> out) {
        for (std::size_t k = 0; k < etas.size(); ++k)
            out[k] = std::exp(-i * w * 0.2 - 0.5 * w * w - i * etas[k] * 0.1 - 0.3 * etas[k] * etas[k]);
    };
    FourierAxis wa{-0.3, 20.0, 128, 36.0, 8};
    FourierAxis ea{0.2, 20.0, 128, 36.0, 8};
    ::setenv("THREE_HALVES_THREADS", "1", 1);
    const auto one = parseval_double(column, wa, ea);
    ::setenv("THREE_HALVES_THREADS", "4", 1);
    const auto four = parseval_double(column, wa, ea);
    ::unsetenv("THREE_HALVES_THREADS");
    CHECK(one.value == four.value);
    CHECK(one.err_estimate == four.err_estimate);
}

TEST_CASE("2-D Parseval with several outputs matches single runs") {
    const cplx i(0.0, 1.0);
    const double ys[] = {-0.2, 0.0, 0.35};
    auto multi = [&](cplx w, std::span<const cplx> etas, std::span<cplx> out) {
        const std::size_t n = etas.size();
        for (int m = 0; m < 3; ++m)
            for (std::size_t k = 0; k < n; ++k)
                out[m * n + k] = std::exp(-i * w * 0.2 - 0.5 * w * w - i * etas[k] * ys[m] - 0.3 * etas[k] * etas[k]);
    };
    FourierAxis wa{-0.3, 20.0, 128, 36.0, 8};
    FourierAxis ea{0.2, 20.0, 128, 36.0, 8};
    const auto all = parseval_double_multi(multi, 3, wa, ea);
    REQUIRE(all.size() == 3);
    for (int m = 0; m < 3; ++m) {
        auto single = [&](cplx w, std::span<const cplx> etas, std::span<cplx> out) {
            for (std::size_t k = 0; k < etas.size(); ++k)
                out[k] = std::exp(-i * w * 0.2 - 0.5 * w * w - i * etas[k] * ys[m] - 0.3 * etas[k] * etas[k]);
        };
        const auto one = parseval_double(single, wa, ea);
        CHECK(all[m].value == one.value);
        CHECK(all[m].err_estimate == one.err_estimate);
    }
}
