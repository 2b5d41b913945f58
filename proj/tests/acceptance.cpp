// Acceptance run: one PASS/FAIL line per criterion with its measured error
// and wall time. Exit status is the number of failures.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "mc_gate.hpp"
#include "mc_oracle.hpp"
#include "model.hpp"
#include "pricers.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"
#include "transforms.hpp"

using namespace threehalves;
using cplx = std::complex<double>;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

model::ModelParams timer_study_params() {
    auto p = model::reference_params();
    p.rho = -0.5;
    p.v0 = 0.087;
    return p;
}

quadrature::QuadratureConfig tight() {
    quadrature::QuadratureConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-15;
    return c;
}

// ---------------------------------------------------------------------------

Outcome density_normalization() {
    const auto p = model::reference_params();
    const quadrature::QuadratureConfig cfg;
    double worst = 0.0;
    for (double dt : {0.1, 0.25, 0.5, 1.0}) {
        auto f = [&](double v) { return cplx(transforms::transition_density_v(0.0, p.v0, dt, v, p)); };
        const auto r = quadrature::integrate_semi_infinite(f, cfg, transforms::v_prime_hint(0.0, p.v0, dt, p));
        worst = std::max(worst, std::abs(r.value.real() - 1.0));
    }
    return {worst <= 1e-6, fmt("max |int p dv' - 1| = %.2e over 4 horizons (limit 1e-6)", worst)};
}

Outcome two_derivations() {
    const auto p = model::reference_params();
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const transforms::TransformPoint pt{i * 1.0, j * 1.0};
            const cplx g = transforms::partial_transform_g(0.0, p.v0, 0.5, pt, p.v0, p);
            const cplx f = transforms::factorized_g(0.0, p.v0, 0.5, pt, p.v0, p);
            worst = std::max(worst, rel_err(f, g));
        }
    return {worst <= 1e-8, fmt("max rel |g - prefactor*CF*density| = %.2e on 5x5 grid (limit 1e-8)", worst)};
}

Outcome marginalization() {
    const auto p = model::reference_params();
    const auto cfg = tight();
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const transforms::TransformPoint pt{i * 1.0, j * 1.0};
            auto f = [&](double vp) { return transforms::partial_transform_g(0.0, p.v0, 0.5, pt, vp, p); };
            const auto r = quadrature::integrate_semi_infinite(f, cfg, transforms::v_prime_hint(0.0, p.v0, 0.5, p));
            worst = std::max(worst, rel_err(r.value, transforms::joint_cf_h(0.0, p.v0, 0.5, pt, p)));
        }
    return {worst <= 1e-6, fmt("max rel |int g dv' - h| = %.2e on 5x5 grid (limit 1e-6)", worst)};
}

Outcome kummer() {
    std::mt19937_64 rng(20130901);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const cplx a(5.0 * u(rng), 5.0 * u(rng));
        const cplx b(5.5 + 4.5 * u(rng), 5.0 * u(rng));
        const cplx z(15.0 * u(rng), 15.0 * u(rng));
        const cplx lhs = specfun::kummer_m(a, b, z);
        const cplx rhs = std::exp(z) * specfun::kummer_m(b - a, b, -z);
        worst = std::max(worst, rel_err(lhs, rhs));
    }
    return {worst <= 1e-9, fmt("max rel |M(a,b,z) - e^z M(b-a,b,-z)| = %.2e on 100 triples (limit 1e-9)", worst)};
}

Outcome conditional_cf() {
    const auto p = model::reference_params();
    double at_zero = 0.0, max_abs = 0.0;
    for (double vp : {0.02, p.v0, 0.2}) {
        at_zero = std::max(at_zero, std::abs(transforms::conditional_cf_integrated_variance(0.0, 0.0, 0.5, p.v0, vp, p) - 1.0));
        for (int k = 1; k <= 50; ++k) {
            const double xi = -100.0 + 200.0 * (k - 0.5) / 50.0;
            max_abs = std::max(max_abs, std::abs(transforms::conditional_cf_integrated_variance(xi, 0.0, 0.5, p.v0, vp, p)));
        }
    }
    return {at_zero <= 1e-12 && max_abs <= 1.0,
            fmt("|CF(0) - 1| = %.1e (limit 1e-12), max |CF| over 50 real xi = %.6f (limit 1)", at_zero, max_abs)};
}

Outcome mc_european() {
    const auto p = model::reference_params();
    const pricers::EuropeanSpec spec{100.0, 0.5, true};
    const auto an = pricers::price_european(spec, p, {});
    mc::SimulationConfig sim;
    sim.n_paths = 100000;
    const auto e = mc::price_european(spec, p, sim);
    const double z = std::abs(an.value - e.value) / e.std_error;
    return {z <= 3.0, fmt("analytic %.6f, MC %.6f +- %.4f, |diff|/SE = %.2f (limit 3)", an.value, e.value,
                          e.std_error, z)};
}

Outcome timer_degeneracy() {
    const auto p = timer_study_params();
    const quadrature::QuadratureConfig cfg;
    const double budgets[] = {0.05, 0.1, 0.2};
    const double maturities[] = {0.5, 1.0, 2.0};
    std::vector<pricers::TimerQuote> quotes;
    for (double b : budgets) quotes.push_back({100.0, b});
    quotes.push_back({100.0, 50.0});

    double price[3][3], err[3][3];
    double worst_degenerate = 0.0;
    bool monotone = true;
    std::string worst_step;
    double worst_slack = HUGE_VAL;
    for (int t = 0; t < 3; ++t) {
        const auto res = pricers::price_timer_calls(maturities[t], 100, quotes, p, cfg);
        for (int b = 0; b < 3; ++b) {
            price[t][b] = res[b].value;
            err[t][b] = res[b].err_estimate;
        }
        const auto eu = pricers::price_european({100.0, maturities[t], true}, p, cfg);
        worst_degenerate = std::max(worst_degenerate, std::abs(res[3].value - eu.value) / eu.value);
    }
    auto step = [&](int t0, int b0, int t1, int b1) {
        const double slack = price[t1][b1] - price[t0][b0] + 2.0 * std::max(err[t0][b0], err[t1][b1]);
        if (slack < worst_slack) {
            worst_slack = slack;
            worst_step = fmt("T=%g,B=%g -> T=%g,B=%g", maturities[t0], budgets[b0], maturities[t1], budgets[b1]);
        }
        if (slack < 0.0) monotone = false;
    };
    for (int t = 0; t < 3; ++t)
        for (int b = 0; b < 3; ++b) {
            if (b + 1 < 3) step(t, b, t, b + 1);
            if (t + 1 < 3) step(t, b, t + 1, b);
        }
    return {worst_degenerate <= 1e-3 && monotone,
            fmt("B=50 vs European rel %.2e (limit 1e-3); monotone %s, tightest step %s slack %.3g; "
                "prices T=0.5 [%.4f %.4f %.4f] T=1 [%.4f %.4f %.4f] T=2 [%.4f %.4f %.4f]",
                worst_degenerate, monotone ? "yes" : "no", worst_step.c_str(), worst_slack, price[0][0], price[0][1],
                price[0][2], price[1][0], price[1][1], price[1][2], price[2][0], price[2][1], price[2][2])};
}

Outcome timer_mc() {
    const auto p = timer_study_params();
    const pricers::TimerOptionSpec spec{100.0, 1.0, 100, 0.087};
    const auto an = pricers::price_timer_call(spec, p, {});
    mc::SimulationConfig sim;
    sim.n_paths = 100000;
    const auto e = mc::price_timer(spec, p, sim);
    const double z = std::abs(an.value - e.proxy.value) / e.proxy.std_error;
    return {z <= 3.0, fmt("B=0.087: analytic %.6f (err %.1e), QV-proxy MC %.6f +- %.4f, |diff|/SE = %.2f (limit 3); "
                          "discrete-RV MC %.4f +- %.4f",
                          an.value, an.err_estimate, e.proxy.value, e.proxy.std_error, z, e.discrete.value,
                          e.discrete.std_error)};
}

Outcome swaps() {
    const auto base = model::reference_params();
    const quadrature::QuadratureConfig cfg;
    pricers::MomentSwapSpec vs;
    vs.schedule = pricers::uniform_schedule(0.5, 126);
    auto vanilla = [&](const model::ModelParams& p) { return pricers::fair_strike_deterministic_weight(vs, p, cfg).value; };
    auto quanto = [&](const model::ModelParams& p) {
        return pricers::fair_strike_self_quantoed(vs.schedule, p, cfg).value;
    };

    double kv[3], kq[3];
    const double eps[] = {4.0, 6.0, 8.56};
    for (int k = 0; k < 3; ++k) {
        auto p = base;
        p.epsilon = eps[k];
        kv[k] = vanilla(p);
        kq[k] = quanto(p);
    }
    const bool dec = kv[0] > kv[1] && kv[1] > kv[2] && kq[0] > kq[1] && kq[1] > kq[2];

    const double rhos[] = {-0.99, 0.0, 0.5};
    double rv[3], rq[3];
    for (int k = 0; k < 3; ++k) {
        auto p = base;
        p.rho = rhos[k];
        rv[k] = k == 0 ? kv[2] : vanilla(p);
        rq[k] = k == 0 ? kq[2] : quanto(p);
    }
    bool steeper = true;
    double sv[2], sq[2];
    for (int k = 0; k < 2; ++k) {
        sv[k] = (rv[k + 1] - rv[k]) / (rhos[k + 1] - rhos[k]);
        sq[k] = (rq[k + 1] - rq[k]) / (rhos[k + 1] - rhos[k]);
        steeper = steeper && std::abs(sq[k]) > std::abs(sv[k]);
    }
    return {dec && steeper,
            fmt("eps 4/6/8.56: VS %.5f %.5f %.5f, SQ %.5f %.5f %.5f (decreasing %s); "
                "dK/drho VS [%.2e %.2e] SQ [%.2e %.2e] (SQ steeper %s)",
                kv[0], kv[1], kv[2], kq[0], kq[1], kq[2], dec ? "yes" : "no", sv[0], sv[1], sq[0], sq[1],
                steeper ? "yes" : "no")};
}

Outcome sampler_gate() {
    const auto p = model::reference_params();
    const auto r = testutil::density_bins_v(p.v0, 0.0, 0.5, p, 1000000, 20130901);
    return {r.worst_rel <= 0.05, fmt("worst bin |empirical/expected - 1| = %.4f over 20 bins, 1e6 draws (limit 0.05)",
                                     r.worst_rel)};
}

Outcome jumps() {
    const auto p = model::reference_params();
    auto pz = p;
    pz.jumps = model::JumpParams{0.0, -0.08, 0.12};
    double worst = 0.0;
    for (cplx w : {cplx(1.0, 0.0), cplx(2.5, -1.5), cplx(-3.0, 0.5)})
        for (cplx e : {cplx(0.0), cplx(1.0, 0.3), cplx(4.0, 0.0)}) {
            const cplx a = transforms::joint_cf_h(0.0, p.v0, 0.5, {w, e}, p);
            const cplx b = transforms::joint_cf_h(0.0, p.v0, 0.5, {w, e}, pz);
            worst = std::max(worst, rel_err(b, a));
        }

    auto pj = p;
    pj.jumps = model::JumpParams{1.5, -0.08, 0.12};
    const pricers::EuropeanSpec spec{100.0, 0.5, true};
    const auto an = pricers::price_european(spec, pj, {});
    mc::SimulationConfig sim;
    sim.n_paths = 100000;
    const auto e = mc::price_european(spec, pj, sim);
    const double z = std::abs(an.value - e.value) / e.std_error;
    return {worst <= 1e-12 && z <= 3.0,
            fmt("lambda=0: max rel |h_jump - h| = %.1e (limit 1e-12); lambda=1.5: analytic %.6f, MC %.6f +- %.4f, "
                "|diff|/SE = %.2f (limit 3)",
                worst, an.value, e.value, e.std_error, z)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = TH_CLI_CONFIG_DIR;
    const fs::path work = fs::temp_directory_path() / "threehalves_acceptance";
    fs::create_directories(work);
    struct Job {
        const char* command;
        const char* config;
        bool mc;
    };
    const Job jobs[] = {{"mc-compare", "european.conf", true},
                        {"price", "swap.conf", true},
                        {"grid", "density.conf", false},
                        {"grid", "cf.conf", false},
                        {"grid", "conditional_cf.conf", false}};
    int same = 0, total = 0;
    std::string bad;
    for (const auto& j : jobs) {
        std::string text[2];
        for (int run = 0; run < 2; ++run) {
            // Second pass with a different worker count.
            setenv("THREE_HALVES_THREADS", run == 0 ? "1" : "3", 1);
            const fs::path out = work / (std::string(j.config) + "." + std::to_string(run) + ".csv");
            fs::remove(out);
            cli::Options o;
            o.command = j.command;
            o.config_path = (dir / j.config).string();
            o.out_path = out.string();
            o.mc_check = j.mc;
            std::ostringstream so, se;
            if (cli::run(o, so, se) != 0) return {false, std::string(j.config) + ": " + se.str()};
            text[run] = slurp(out);
        }
        ++total;
        if (!text[0].empty() && text[0] == text[1]) ++same;
        else bad += std::string(" ") + j.config;
    }
    unsetenv("THREE_HALVES_THREADS");
    return {same == total, fmt("%d/%d CSV outputs byte-identical across reruns (1 vs 3 threads)%s", same, total,
                               bad.empty() ? "" : (" differing:" + bad).c_str())};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "density normalization", 1.0, density_normalization},
        {2, "two-derivation consistency", 5.0, two_derivations},
        {3, "marginalization identity", 10.0, marginalization},
        {4, "Kummer identity", 1.0, kummer},
        {5, "conditional CF sanity", 1.0, conditional_cf},
        {6, "MC vs analytic European", 60.0, mc_european},
        {7, "timer degeneracy and monotonicity", 600.0, timer_degeneracy},
        {8, "timer MC bracket", 600.0, timer_mc},
        {9, "self-quantoed vs variance swap", 900.0, swaps},
        {10, "exact sampler density gate", 30.0, sampler_gate},
        {11, "jump extension", 120.0, jumps},
        {12, "determinism", HUGE_VAL, determinism},
    };
    int failures = 0;
    for (const auto& c : all) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.ok && in_time;
        failures += pass ? 0 : 1;
        std::string limit = std::isinf(c.budget_s) ? "none" : fmt("%g s", c.budget_s);
        std::printf("criterion %2d %s  %-34s %s  [%.2f s, limit %s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), secs, limit.c_str(), in_time ? "" : ", TOO SLOW");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failures, all.size());
    return failures;
}
