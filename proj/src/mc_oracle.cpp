#include "mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace threehalves::mc {

namespace {

// Fine-grid step with its theta coefficients, shared by every path.
struct Step {
    double t = 0.0, dt = 0.0;
    double A = 1.0, C = 0.0, int_theta = 0.0;
    int obs = -1;  // observation index reached at the end of the step
};

std::vector<Step> build_steps(std::span<const double> times, const ModelParams& p, const SimulationConfig& cfg) {
    constexpr const char* where = "mc.simulate_paths";
    if (times.size() < 2 || times[0] != 0.0)
        fail(ErrorKind::invalid_argument, where, "observation times must start at 0 and have a horizon");
    std::vector<Step> steps;
    for (std::size_t j = 1; j < times.size(); ++j) {
        const double a = times[j - 1], b = times[j];
        if (!(b > a) || !std::isfinite(b))
            fail(ErrorKind::invalid_argument, where, "observation times must be strictly increasing");
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) * cfg.steps_per_year - 1e-9)));
        for (int s = 0; s < n; ++s) {
            Step st;
            st.t = a + (b - a) * s / n;
            const double end = s + 1 == n ? b : a + (b - a) * (s + 1) / n;
            st.dt = end - st.t;
            st.A = model::coef_A(p.theta, st.t, end);
            st.C = model::coef_C(p.theta, p.epsilon, st.t, end);
            st.int_theta = p.theta.integral(st.t, end);
            st.obs = s + 1 == n ? static_cast<int>(j) : -1;
            steps.push_back(st);
        }
    }
    return steps;
}

double chi_square_draw(const ChiSquareLaw& law, Rng& rng) {
    // df > 1 always here (df = 4 + 4 kappa / eps^2), so the noncentral part
    // is one shifted normal square and the rest is central.
    std::normal_distribution<double> normal;
    std::gamma_distribution<double> gamma(0.5 * (law.df - 1.0), 2.0);
    const double z = normal(rng) + std::sqrt(law.noncentrality);
    return law.scale * (z * z + gamma(rng));
}

void run_path(std::span<const double> times, std::span<const Step> steps, std::uint64_t path, const ModelParams& p,
              const SimulationConfig& cfg, PathSample& out) {
    Rng rng = path_rng(cfg.seed, path);
    std::normal_distribution<double> normal;

    const std::size_t nobs = times.size();
    out.times.assign(times.begin(), times.end());
    out.x.assign(nobs, 0.0);
    out.i.assign(nobs, 0.0);
    out.i_discrete.assign(nobs, 0.0);
    out.v.assign(nobs, 0.0);
    out.jump_times.clear();
    out.jump_sizes.clear();
    out.euler_truncations = 0;

    const double eps = p.epsilon, e2 = eps * eps;
    const double rho = p.rho, rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double df = 4.0 + 4.0 * p.kappa / e2;
    const double qv_coef = rho * eps * (p.kappa / e2 + 0.5) - 0.5;
    const bool jumps = p.jumps && p.jumps->lambda > 0.0;
    const double lambda = jumps ? p.jumps->lambda : 0.0;
    const double mu_x = p.r - p.q - (jumps ? lambda * model::jump_compensator(*p.jumps) : 0.0);

    double x = std::log(p.s0), i = 0.0, v = p.v0, u = 1.0 / p.v0;
    out.x[0] = x;
    out.v[0] = v;
    double x_prev_obs = x, id = 0.0;

    for (const Step& st : steps) {
        if (cfg.scheme == Scheme::exact_variance_transition) {
            const double u_next = chi_square_draw({df, 2.0 * u / st.C, st.C / (2.0 * st.A)}, rng);
            const double v_next = 1.0 / u_next;
            const double di = 0.5 * (v + v_next) * st.dt;
            x += mu_x * st.dt + rho / eps * (std::log(v_next / v) - st.int_theta) + qv_coef * di +
                 rho_bar * std::sqrt(di) * normal(rng);
            i += di;
            u = u_next;
            v = v_next;
        } else {
            const double z1 = normal(rng), z2 = normal(rng);
            const double theta = st.int_theta / st.dt;
            const double up = std::max(u, 0.0);
            x += (mu_x - 0.5 * v) * st.dt + std::sqrt(v * st.dt) * (rho * z1 + rho_bar * z2);
            i += v * st.dt;
            u += (p.kappa + e2 - theta * up) * st.dt - eps * std::sqrt(up * st.dt) * z1;
            // V is read off the truncated state; at U <= 0 it keeps its last value.
            if (u > 0.0)
                v = 1.0 / u;
            else
                ++out.euler_truncations;
        }
        if (jumps) {
            std::poisson_distribution<int> count(lambda * st.dt);
            std::normal_distribution<double> size(p.jumps->mu, p.jumps->sigma);
            const int n = count(rng);
            for (int k = 0; k < n; ++k) {
                const double y = size(rng);
                x += y;
                i += y * y;
                out.jump_times.push_back(st.t + st.dt);
                out.jump_sizes.push_back(y);
            }
        }
        if (st.obs >= 0) {
            const double r = x - x_prev_obs;
            id += r * r;
            x_prev_obs = x;
            out.x[st.obs] = x;
            out.i[st.obs] = i;
            out.i_discrete[st.obs] = id;
            out.v[st.obs] = v;
        }
    }
}

Estimate summarize(std::span<const double> values) {
    const std::size_t n = values.size();
    quadrature::CompensatedSum s;
    for (double x : values) s.add(x);
    const double mean = s.value() / static_cast<double>(n);
    quadrature::CompensatedSum ss;
    for (double x : values) ss.add((x - mean) * (x - mean));
    Estimate e;
    e.value = mean;
    e.n_paths = static_cast<long>(n);
    e.std_error = n > 1 ? std::sqrt(ss.value() / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return e;
}

}  // namespace

void validate(const SimulationConfig& cfg) {
    if (cfg.n_paths < 1) fail(ErrorKind::invalid_argument, "mc.config", "n_paths must be >= 1");
    if (cfg.steps_per_year < 12) fail(ErrorKind::invalid_argument, "mc.config", "steps_per_year must be >= 12");
}

Rng path_rng(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    return Rng(seq);
}

ChiSquareLaw variance_transition_law(double u, double t, double dt, const ModelParams& p) {
    constexpr const char* where = "mc.sample_variance_transition";
    if (!(u > 0.0) || !std::isfinite(u)) fail(ErrorKind::invalid_argument, where, "u must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::invalid_argument, where, "dt must be positive");
    model::require_valid(p);
    const double A = model::coef_A(p.theta, t, t + dt);
    const double C = model::coef_C(p.theta, p.epsilon, t, t + dt);
    return {4.0 + 4.0 * p.kappa / (p.epsilon * p.epsilon), 2.0 * u / C, C / (2.0 * A)};
}

double sample_variance_transition(double u, double t, double dt, const ModelParams& p, Rng& rng) {
    return chi_square_draw(variance_transition_law(u, t, dt, p), rng);
}

void simulate_path(std::span<const double> times, std::uint64_t path, const ModelParams& p,
                   const SimulationConfig& cfg, PathSample& out) {
    validate(cfg);
    model::require_valid(p);
    const auto steps = build_steps(times, p, cfg);
    run_path(times, steps, path, p, cfg, out);
}

std::vector<PathSample> simulate_paths(std::span<const double> times, const ModelParams& p,
                                       const SimulationConfig& cfg) {
    validate(cfg);
    model::require_valid(p);
    const auto steps = build_steps(times, p, cfg);
    std::vector<PathSample> out(static_cast<std::size_t>(cfg.n_paths));
    parallel_for(out.size(), [&](std::size_t k) { run_path(times, steps, k, p, cfg, out[k]); });
    return out;
}

std::vector<Estimate> expectations(std::span<const double> times, const ModelParams& p, const SimulationConfig& cfg,
                                   std::span<const PathFunctional> functionals) {
    validate(cfg);
    model::require_valid(p);
    const auto steps = build_steps(times, p, cfg);
    const std::size_t n = static_cast<std::size_t>(cfg.n_paths), nf = functionals.size();
    std::vector<double> values(n * nf);
    parallel_for(n, [&](std::size_t k) {
        thread_local PathSample path;
        run_path(times, steps, k, p, cfg, path);
        for (std::size_t f = 0; f < nf; ++f) values[f * n + k] = functionals[f](path);
    });
    std::vector<Estimate> out;
    for (std::size_t f = 0; f < nf; ++f) out.push_back(summarize(std::span(values).subspan(f * n, n)));
    return out;
}

Estimate price_european(const pricers::EuropeanSpec& spec, const ModelParams& p, const SimulationConfig& cfg) {
    if (!(spec.strike >= 0.0) || !(spec.maturity > 0.0))
        fail(ErrorKind::invalid_argument, "mc.price_european", "need strike >= 0 and maturity > 0");
    const double times[] = {0.0, spec.maturity};
    const double disc = std::exp(-p.r * spec.maturity);
    const PathFunctional f[] = {[&](const PathSample& s) {
        const double st = std::exp(s.x.back());
        return disc * std::max(spec.is_call ? st - spec.strike : spec.strike - st, 0.0);
    }};
    return expectations(times, p, cfg, f).front();
}

TimerEstimate price_timer(const pricers::TimerOptionSpec& spec, const ModelParams& p, const SimulationConfig& cfg) {
    if (spec.n_monitoring < 1 || !(spec.mandatory_maturity > 0.0) || !(spec.variance_budget > 0.0) ||
        !(spec.strike >= 0.0))
        fail(ErrorKind::invalid_argument, "mc.price_timer", "bad timer spec");
    const auto times = pricers::uniform_schedule(spec.mandatory_maturity, spec.n_monitoring);
    // Exercise at the first monitoring date where the budget is used up, else at T.
    auto payoff = [&](const PathSample& s, const std::vector<double>& qv) {
        std::size_t j = 1;
        while (j + 1 < times.size() && qv[j] < spec.variance_budget) ++j;
        return std::exp(-p.r * times[j]) * std::max(std::exp(s.x[j]) - spec.strike, 0.0);
    };
    const PathFunctional f[] = {
        [&](const PathSample& s) { return payoff(s, s.i); },
        [&](const PathSample& s) { return payoff(s, s.i_discrete); },
        [&](const PathSample& s) { return payoff(s, s.i_discrete) - payoff(s, s.i); },
    };
    const auto e = expectations(times, p, cfg, f);
    return {e[0], e[1], e[2]};
}

Estimate fair_strike(const pricers::MomentSwapSpec& spec, const ModelParams& p, const SimulationConfig& cfg) {
    constexpr const char* where = "mc.fair_strike";
    const auto& sched = spec.schedule;
    if (sched.size() < 2) fail(ErrorKind::invalid_argument, where, "schedule needs at least one period");
    if (spec.m < 1) fail(ErrorKind::invalid_argument, where, "m must be >= 1");
    if (spec.weight == pricers::WeightKind::corridor && !(spec.corridor_lower < spec.corridor_upper))
        fail(ErrorKind::invalid_argument, where, "corridor needs l < u");
    const std::size_t n = sched.size() - 1;
    const double T = sched.back();
    const double log_s0 = std::log(p.s0);
    const PathFunctional f[] = {[&](const PathSample& s) {
        quadrature::CompensatedSum leg;
        for (std::size_t k = 1; k <= n; ++k) {
            const std::size_t ik = spec.lag == pricers::WeightLag::same_period ? k : k - 1;
            double w = 1.0;
            switch (spec.weight) {
                case pricers::WeightKind::constant: break;
                case pricers::WeightKind::price_ratio: w = std::exp(s.x[ik] - log_s0); break;
                case pricers::WeightKind::terminal_price: w = std::exp(s.x[n] - log_s0); break;
                case pricers::WeightKind::corridor: {
                    const double sk = std::exp(s.x[ik]);
                    w = (sk > spec.corridor_lower && sk <= spec.corridor_upper) ? 1.0 : 0.0;
                    break;
                }
            }
            leg.add(w * std::pow(s.x[k] - s.x[k - 1], spec.m));
        }
        return leg.value() / T;
    }};
    return expectations(sched, p, cfg, f).front();
}

}  // namespace threehalves::mc
