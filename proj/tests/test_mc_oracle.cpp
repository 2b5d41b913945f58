#include <doctest.h>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <cmath>
#include <cstdlib>

#include "mc_gate.hpp"
#include "mc_oracle.hpp"
#include "pricers.hpp"
#include "test_util.hpp"
#include "transforms.hpp"

using namespace threehalves;
using testutil::cplx;
using testutil::error_kind;

namespace {

const model::ModelParams P = model::reference_params();

mc::SimulationConfig sim(long paths, std::uint64_t seed = 7) {
    mc::SimulationConfig c;
    c.n_paths = paths;
    c.seed = seed;
    return c;
}

bool within(double got, double want, double se, double k = 3.0) { return std::abs(got - want) <= k * se; }

}  // namespace

TEST_CASE("transition law matches the closed-form U density") {
    // Pointwise: scale * chi'^2 pdf(x / scale) against transition_density_u.
    for (double dt : {1.0 / 512, 0.1, 0.5, 2.0}) {
        const double u = 1.0 / P.v0;
        const auto law = mc::variance_transition_law(u, 0.0, dt, P);
        const boost::math::non_central_chi_squared dist(law.df, law.noncentrality);
        for (double q : {0.01, 0.2, 0.5, 0.8, 0.99}) {
            const double x = law.scale * boost::math::quantile(dist, q);
            const double want = transforms::transition_density_u(0.0, u, dt, x, P);
            CAPTURE(dt);
            CAPTURE(q);
            CHECK(testutil::rel_err(boost::math::pdf(dist, x / law.scale) / law.scale, want) <= 1e-9);
        }
    }
}

TEST_CASE("exact U draws: 20-bin density gate") {
    const auto r = testutil::density_bins(1.0 / P.v0, 0.0, 0.5, P, 1000000, 11);
    for (std::size_t b = 0; b < r.expected.size(); ++b) {
        CAPTURE(b);
        CHECK(std::abs(r.empirical[b] / r.expected[b] - 1.0) <= 0.05);
    }
    // A fine-grid step too, where the noncentrality is large.
    CHECK(testutil::density_bins(1.0 / P.v0, 0.0, 1.0 / 512, P, 200000, 12).worst_rel <= 0.05);
}

TEST_CASE("U transition limits") {
    auto rng = mc::path_rng(3, 0);
    SUBCASE("short step stays near the start") {
        const double u = 1.0 / P.v0;
        double s = 0.0;
        for (int k = 0; k < 20000; ++k) s += mc::sample_variance_transition(u, 0.0, 1e-4, P, rng);
        CHECK(std::abs(s / 20000 / u - 1.0) <= 0.01);
    }
    SUBCASE("small vol-of-vol follows the drift ODE") {
        auto p = P;
        p.epsilon = 0.05;
        p.rho = 0.0;
        const double u = 1.0 / p.v0, dt = 0.01, th = 4.979;
        const double ode = u * std::exp(-th * dt) + (p.kappa + p.epsilon * p.epsilon) * (1 - std::exp(-th * dt)) / th;
        for (int k = 0; k < 100; ++k)
            CHECK(std::abs(mc::sample_variance_transition(u, 0.0, dt, p, rng) / ode - 1.0) <= 0.01);
    }
    SUBCASE("bad input") {
        CHECK(error_kind([&] { mc::sample_variance_transition(-1.0, 0.0, 0.1, P, rng); }) ==
              ErrorKind::invalid_argument);
        CHECK(error_kind([&] { mc::sample_variance_transition(1.0, 0.0, 0.0, P, rng); }) ==
              ErrorKind::invalid_argument);
    }
}

TEST_CASE("path ensembles are reproducible") {
    const double times[] = {0.0, 0.1, 0.25, 0.5};
    auto c = sim(64, 99);
    const auto a = mc::simulate_paths(times, P, c);
    const auto b = mc::simulate_paths(times, P, c);
    bool same = true;
    for (std::size_t k = 0; k < a.size(); ++k) same = same && a[k].x == b[k].x && a[k].i == b[k].i && a[k].v == b[k].v;
    CHECK(same);

    SUBCASE("thread count does not matter") {
        setenv("THREE_HALVES_THREADS", "3", 1);
        const auto t3 = mc::simulate_paths(times, P, c);
        unsetenv("THREE_HALVES_THREADS");
        bool eq = true;
        for (std::size_t k = 0; k < a.size(); ++k) eq = eq && a[k].x == t3[k].x && a[k].i_discrete == t3[k].i_discrete;
        CHECK(eq);
    }
    SUBCASE("zero jump intensity is the no-jump ensemble") {
        auto pj = P;
        pj.jumps = model::JumpParams{0.0, -0.1, 0.2};
        const auto j = mc::simulate_paths(times, pj, c);
        bool eq = true;
        for (std::size_t k = 0; k < a.size(); ++k) eq = eq && a[k].x == j[k].x && a[k].i == j[k].i;
        CHECK(eq);
    }
    SUBCASE("a different seed gives different paths") {
        const auto d = mc::simulate_paths(times, P, sim(64, 100));
        CHECK(d[0].x != a[0].x);
    }
    SUBCASE("path invariants") {
        for (const auto& s : a) {
            CHECK(s.times.size() == 4);
            for (std::size_t j = 0; j < 4; ++j) CHECK(s.v[j] > 0.0);
            for (std::size_t j = 1; j < 4; ++j) {
                CHECK(s.i[j] >= s.i[j - 1]);
                CHECK(s.i_discrete[j] >= s.i_discrete[j - 1]);
            }
            CHECK(s.i[0] == 0.0);
            CHECK(s.x[0] == std::log(P.s0));
        }
    }
}

TEST_CASE("simulation config validation") {
    const double times[] = {0.0, 1.0};
    auto c = sim(0);
    CHECK(error_kind([&] { mc::simulate_paths(times, P, c); }) == ErrorKind::invalid_argument);
    c = sim(10);
    c.steps_per_year = 6;
    CHECK(error_kind([&] { mc::simulate_paths(times, P, c); }) == ErrorKind::invalid_argument);
    const double bad[] = {0.0, 0.5, 0.5};
    CHECK(error_kind([&] { mc::simulate_paths(bad, P, sim(10)); }) == ErrorKind::invalid_argument);
}

TEST_CASE("ensemble moments against the transforms") {
    const double T = 0.5;
    const double times[] = {0.0, T};
    const double disc_fwd = std::exp(-(P.r - P.q) * T);
    std::vector<mc::PathFunctional> f;
    for (double w : {0.5, 1.0, 2.0}) {
        f.push_back([w](const mc::PathSample& s) { return std::cos(w * s.x.back()); });
        f.push_back([w](const mc::PathSample& s) { return std::sin(w * s.x.back()); });
    }
    f.push_back([&](const mc::PathSample& s) { return std::exp(s.x.back()) * disc_fwd / P.s0; });
    f.push_back([](const mc::PathSample& s) { return s.i.back(); });
    f.push_back([&](const mc::PathSample& s) { return 1.0 / s.v.back(); });
    const auto e = mc::expectations(times, P, sim(100000), f);

    const double x0 = std::log(P.s0);
    int n = 0;
    for (double w : {0.5, 1.0, 2.0}) {
        const cplx h = std::exp(cplx(0, w * x0)) * transforms::joint_cf_h(0.0, P.v0, T, {w, 0.0}, P);
        CAPTURE(w);
        CHECK(within(e[n].value, h.real(), e[n].std_error));
        CHECK(within(e[n + 1].value, h.imag(), e[n + 1].std_error));
        n += 2;
    }
    CHECK(within(e[n].value, 1.0, e[n].std_error));  // martingale
    const double ei = T * pricers::expected_quadratic_variation_rate(T, P, quadrature::QuadratureConfig{});
    CHECK(within(e[n + 1].value, ei, e[n + 1].std_error));
    // U_T composed from fine steps has the one-step law's mean.
    const auto law = mc::variance_transition_law(1.0 / P.v0, 0.0, T, P);
    CHECK(within(e[n + 2].value, law.scale * (law.df + law.noncentrality), e[n + 2].std_error));
}

TEST_CASE("standard error scales like one over root n") {
    const auto a = mc::price_european({100.0, 0.5, true}, P, sim(20000, 1));
    const auto b = mc::price_european({100.0, 0.5, true}, P, sim(40000, 2));
    CHECK(std::abs(b.std_error / a.std_error * std::sqrt(2.0) - 1.0) <= 0.2);
    CHECK(a.n_paths == 20000);
}

TEST_CASE("European MC") {
    const quadrature::QuadratureConfig q;
    SUBCASE("zero strike is the discounted forward") {
        const auto e = mc::price_european({0.0, 0.5, true}, P, sim(20000));
        CHECK(within(e.value, P.s0 * std::exp(-P.q * 0.5), e.std_error));
    }
    SUBCASE("both schemes bracket the analytic price") {
        const double want = pricers::price_european({100.0, 0.5, true}, P, q).value;
        auto c = sim(50000);
        const auto ex = mc::price_european({100.0, 0.5, true}, P, c);
        CHECK(within(ex.value, want, ex.std_error));
        c.scheme = mc::Scheme::euler_full_truncation;
        const auto eu = mc::price_european({100.0, 0.5, true}, P, c);
        CHECK(within(eu.value, want, eu.std_error));
    }
    SUBCASE("jumps") {
        auto pj = P;
        pj.jumps = model::JumpParams{1.5, -0.08, 0.12};
        const double want = pricers::price_european({100.0, 0.5, true}, pj, q).value;
        const auto e = mc::price_european({100.0, 0.5, true}, pj, sim(50000));
        CHECK(within(e.value, want, e.std_error));
        const double times[] = {0.0, 0.5};
        const mc::PathFunctional f[] = {[&](const mc::PathSample& s) {
            return std::exp(s.x.back()) * std::exp(-(pj.r - pj.q) * 0.5) / pj.s0;
        }};
        const auto m = mc::expectations(times, pj, sim(50000), f).front();
        CHECK(within(m.value, 1.0, m.std_error));
    }
    SUBCASE("step halving moves the price by less than the noise") {
        auto c = sim(20000);
        c.steps_per_year = 256;
        const auto coarse = mc::price_european({100.0, 0.5, true}, P, c);
        c.steps_per_year = 1024;
        const auto fine = mc::price_european({100.0, 0.5, true}, P, c);
        CHECK(within(coarse.value, fine.value, 2.0 * fine.std_error));
    }
}

TEST_CASE("timer MC") {
    auto p = P;
    p.rho = -0.5;
    p.v0 = 0.087;
    SUBCASE("huge budget is the European") {
        const auto t = mc::price_timer({100.0, 0.5, 10, 50.0}, p, sim(20000));
        // Same monitoring grid, so the same paths.
        const auto times = pricers::uniform_schedule(0.5, 10);
        const double disc = std::exp(-p.r * 0.5);
        const mc::PathFunctional f[] = {
            [&](const mc::PathSample& s) { return disc * std::max(std::exp(s.x.back()) - 100.0, 0.0); }};
        const auto e = mc::expectations(times, p, sim(20000), f).front();
        CHECK(t.proxy.value == doctest::Approx(e.value).epsilon(1e-12));
        const double analytic = pricers::price_european({100.0, 0.5, true}, p, quadrature::QuadratureConfig{}).value;
        CHECK(within(t.proxy.value, analytic, t.proxy.std_error));
        CHECK(t.gap.value == 0.0);
    }
    SUBCASE("brackets the analytic price") {
        quadrature::QuadratureConfig q;
        q.timer_omega_nodes = 128;
        q.timer_omega_truncation = 40.0;
        q.timer_eta_truncation = 200.0;
        const auto a = pricers::price_timer_call({100.0, 1.0, 4, 0.08}, p, q);
        const auto m = mc::price_timer({100.0, 1.0, 4, 0.08}, p, sim(50000));
        CHECK(within(m.proxy.value, a.value, m.proxy.std_error));
        CHECK(m.discrete.value > 0.0);
    }
}

TEST_CASE("moment swap MC") {
    const quadrature::QuadratureConfig q;
    pricers::MomentSwapSpec s;
    s.schedule = pricers::uniform_schedule(0.5, 6);
    s.m = 2;
    SUBCASE("variance swap") {
        const auto a = pricers::fair_strike_deterministic_weight(s, P, q);
        const auto m = mc::fair_strike(s, P, sim(50000));
        CHECK(within(m.value, a.value, m.std_error));
    }
    SUBCASE("self-quantoed") {
        s.weight = pricers::WeightKind::terminal_price;
        const auto a = pricers::fair_strike_self_quantoed(s.schedule, P, q);
        const auto m = mc::fair_strike(s, P, sim(50000));
        CHECK(within(m.value, a.value, m.std_error));
    }
    SUBCASE("corridor, previous-period lag") {
        s.weight = pricers::WeightKind::corridor;
        s.lag = pricers::WeightLag::previous_period;
        s.corridor_lower = 95.0;
        s.corridor_upper = 110.0;
        const auto a = pricers::fair_strike_weighted(s, P, q);
        const auto m = mc::fair_strike(s, P, sim(50000));
        CHECK(within(m.value, a.value, m.std_error));
    }
    SUBCASE("skew swap") {
        s.m = 3;
        const auto a = pricers::fair_strike_deterministic_weight(s, P, q);
        const auto m = mc::fair_strike(s, P, sim(50000));
        CHECK(within(m.value, a.value, m.std_error));
    }
}
