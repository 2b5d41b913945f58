#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "doctest.h"
#include "errors.hpp"
#include "model.hpp"
#include "test_util.hpp"

using namespace threehalves;
using namespace threehalves::model;
using testutil::rel_err;

namespace {

ThetaCurve two_piece() { return ThetaCurve({0.0, 1.0, 2.0}, {1.0, 3.0}); }

// Gauss-Hermite nodes/weights (weight e^{-x^2}) via Golub-Welsch.
void gauss_hermite(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    x = es.eigenvalues();
    w = std::sqrt(M_PI) * es.eigenvectors().row(0).array().square().matrix().transpose();
}

}  // namespace

TEST_CASE("validate: reference calibration is admissible") {
    CHECK(validate(reference_params()).empty());
}

TEST_CASE("validate: admissibility inequality") {
    ModelParams p = reference_params();
    p.kappa = 0.0;
    p.rho = 1.0;
    p.epsilon = 1.0;
    auto v = validate(p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].constraint == "kappa - rho*epsilon >= -epsilon^2/2");
    CHECK_THROWS_AS(require_valid(p), NumericError);

    p.kappa = 1.0;
    p.rho = 0.0;
    p.epsilon = 2.0;
    CHECK(validate(p).empty());
}

TEST_CASE("validate names every violated constraint and does not mutate") {
    ModelParams p = reference_params();
    p.epsilon = -1.0;
    p.v0 = 0.0;
    p.rho = 1.5;
    p.jumps = JumpParams{-0.1, 0.0, -0.2};
    const ModelParams before = p;
    const auto v = validate(p);
    CHECK(v.size() >= 5);
    CHECK(p.epsilon == before.epsilon);
    CHECK(p.rho == before.rho);
}

TEST_CASE("ThetaCurve rejects malformed input") {
    CHECK_THROWS_AS(ThetaCurve({0.0, 1.0}, {1.0, 2.0}), NumericError);
    CHECK_THROWS_AS(ThetaCurve({0.0, 1.0, 1.0}, {1.0, 2.0}), NumericError);
    CHECK_THROWS_AS(ThetaCurve({0.5, 1.0}, {1.0}), NumericError);
    CHECK_THROWS_AS(coef_A(two_piece(), 0.5, 2.5), NumericError);
    CHECK_THROWS_AS(coef_C(two_piece(), 1.0, 1.5, 0.5), NumericError);
}

TEST_CASE("coef_A closed forms") {
    CHECK(rel_err(coef_A(ThetaCurve::constant(2.0), 0.3, 0.8), std::exp(1.0)) < 1e-15);
    CHECK(coef_A(ThetaCurve::constant(0.0), 0.0, 7.0) == 1.0);
    CHECK(coef_A(two_piece(), 0.7, 0.7) == 1.0);
}

TEST_CASE("coef_C closed forms") {
    CHECK(rel_err(coef_C(ThetaCurve::constant(0.0), 2.0, 0.0, 1.0), 2.0) < 1e-15);
    CHECK(rel_err(coef_C(ThetaCurve::constant(2.0), 1.0, 0.0, 0.5), 0.5 * (std::exp(1.0) - 1.0) / 2.0) < 1e-15);
    CHECK(coef_C(two_piece(), 3.0, 1.2, 1.2) == 0.0);
}

TEST_CASE("two-piece curve against numeric-integration oracles") {
    using boost::math::quadrature::gauss_kronrod;
    const ThetaCurve th = two_piece();
    auto theta = [](double s) { return s < 1.0 ? 1.0 : 3.0; };
    const double t = 0.5, tp = 1.5;
    // adaptive quadrature on each smooth piece; recursing across the jump
    // never meets a relative tolerance
    auto gk = [](auto f, double a, double b) {
        if (b <= a) return 0.0;
        return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
    };
    auto inner = [&](double s) { return gk(theta, t, std::min(s, 1.0)) + gk(theta, 1.0, s); };
    const double A_oracle = std::exp(inner(tp));
    CHECK(rel_err(coef_A(th, t, tp), A_oracle) < 1e-12);

    const double eps = 1.7;
    auto outer = [&](double s) { return std::exp(inner(s)); };
    const double C_oracle = 0.5 * eps * eps * (gk(outer, t, 1.0) + gk(outer, 1.0, tp));
    CHECK(rel_err(coef_C(th, eps, t, tp), C_oracle) < 1e-10);
}

TEST_CASE("A and C monotone in t_prime for nonnegative theta") {
    const ThetaCurve th({0.0, 0.4, 1.0, 3.0}, {0.5, 0.0, 2.0});
    double prevA = 1.0, prevC = 0.0;
    for (double tp = 0.1; tp <= 3.0; tp += 0.05) {
        const double A = coef_A(th, 0.1, tp), C = coef_C(th, 2.0, 0.1, tp);
        CHECK(A >= prevA);
        CHECK(C >= prevC);
        prevA = A;
        prevC = C;
    }
    // continuity across a breakpoint
    CHECK(std::abs(coef_C(th, 2.0, 0.0, 1.0 - 1e-12) - coef_C(th, 2.0, 0.0, 1.0 + 1e-12)) < 1e-10);
}

TEST_CASE("drift_a without jumps") {
    ModelParams p = reference_params();
    CHECK(drift_a(0.0, 0.0, p).value == cplx(0.0));
    CHECK(rel_err(drift_a(1.0, 0.0, p).value, cplx(0.0, 0.015)) < 1e-15);
}

TEST_CASE("drift_a with zero intensity equals the no-jump value exactly") {
    ModelParams p = reference_params();
    const cplx om(1.3, -1.5), et(0.4, 2.0);
    const cplx base = drift_a(om, et, p).value;
    p.jumps = JumpParams{0.0, -0.1, 0.2};
    CHECK(drift_a(om, et, p).value == base);
}

TEST_CASE("drift_a jump term against Gauss-Hermite quadrature") {
    ModelParams p = reference_params();
    const JumpParams j{0.5, -0.1, 0.2};
    p.jumps = j;
    Eigen::VectorXd x, w;
    gauss_hermite(80, x, w);
    const cplx i(0.0, 1.0);
    for (auto [om, et] : {std::pair<cplx, cplx>{1.0, 0.0}, {cplx(2.0, -1.5), cplx(0.5, 0.3)}, {-3.0, 1.0}}) {
        cplx mean = 0.0;
        for (int k = 0; k < x.size(); ++k) {
            const double J = j.mu + std::sqrt(2.0) * j.sigma * x[k];
            mean += w[k] * std::exp(i * om * J + i * et * J * J);
        }
        mean /= std::sqrt(M_PI);
        const cplx want = i * om * (p.r - p.q - j.lambda * jump_compensator(j)) + j.lambda * (mean - 1.0);
        const auto got = drift_a(om, et, p);
        CHECK(std::abs(got.value - want) < 1e-8);
        CHECK_FALSE(got.branch_warning);
    }
}

TEST_CASE("drift_a flags the square-root branch hazard") {
    ModelParams p = reference_params();
    p.jumps = JumpParams{0.5, -0.1, 0.2};
    // 1 - 2 i eta sigma^2 has real part 1 + 2 sigma^2 Im(eta)
    CHECK(drift_a(1.0, cplx(0.0, -13.0), p).branch_warning);
    CHECK_FALSE(drift_a(1.0, cplx(0.0, -12.0), p).branch_warning);
}
