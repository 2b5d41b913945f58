#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "model.hpp"
#include "pricers.hpp"

namespace threehalves::mc {

using model::ModelParams;

enum class Scheme {
    exact_variance_transition,  // U = 1/V drawn from its noncentral chi-square law
    euler_full_truncation,      // Euler on U with max(U, 0) in the coefficients
};

struct SimulationConfig {
    long n_paths = 100000;
    int steps_per_year = 512;
    std::uint64_t seed = 20130901;
    Scheme scheme = Scheme::exact_variance_transition;
};

// Throws NumericError(invalid_argument) for n_paths < 1 or steps_per_year < 12.
void validate(const SimulationConfig& cfg);

using Rng = std::mt19937_64;

// Independent stream for one path, seeded from (seed, path) only, so the
// ensemble does not depend on how paths are split across threads.
Rng path_rng(std::uint64_t seed, std::uint64_t path);

// Noncentral chi-square parameters of U_{t+dt} | U_t = u:
//   U_{t+dt} = scale * chi'^2(df, noncentrality)
struct ChiSquareLaw {
    double df;
    double noncentrality;
    double scale;
};
ChiSquareLaw variance_transition_law(double u, double t, double dt, const ModelParams& p);

// One exact draw of U_{t+dt} given U_t = u (U = 1/V).
double sample_variance_transition(double u, double t, double dt, const ModelParams& p, Rng& rng);

// Values at the observation times. i is the quadratic variation proxy
// (trapezoid of V on the fine grid plus squared jumps); i_discrete sums
// squared log-returns between consecutive observation times.
struct PathSample {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> i;
    std::vector<double> i_discrete;
    std::vector<double> v;
    std::vector<double> jump_times;
    std::vector<double> jump_sizes;
    long euler_truncations = 0;  // steps where U went non-positive (Euler only)
};

// `times` starts at 0 and is strictly increasing; the last entry is the
// horizon. Each gap is split into ceil(gap * steps_per_year) equal steps.
void simulate_path(std::span<const double> times, std::uint64_t path, const ModelParams& p,
                   const SimulationConfig& cfg, PathSample& out);

// Small ensembles only: every path is kept.
std::vector<PathSample> simulate_paths(std::span<const double> times, const ModelParams& p,
                                       const SimulationConfig& cfg);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
};

using PathFunctional = std::function<double(const PathSample&)>;

// Sample means of several functionals over one ensemble. Per-path values are
// stored by index and reduced in order, so the result is independent of the
// worker count.
std::vector<Estimate> expectations(std::span<const double> times, const ModelParams& p, const SimulationConfig& cfg,
                                   std::span<const PathFunctional> functionals);

// Discounted call or put payoff at the maturity.
Estimate price_european(const pricers::EuropeanSpec& spec, const ModelParams& p, const SimulationConfig& cfg);

// Timer call under both stopping rules on the same paths. `gap` is
// discrete minus proxy, with its own standard error.
struct TimerEstimate {
    Estimate proxy;
    Estimate discrete;
    Estimate gap;
};
TimerEstimate price_timer(const pricers::TimerOptionSpec& spec, const ModelParams& p, const SimulationConfig& cfg);

// Fair strike of a weighted moment swap: the mean of the floating leg
// (1/T) sum_k f(S_{t_{i_k}}) (ln S_{t_k} / S_{t_{k-1}})^m.
Estimate fair_strike(const pricers::MomentSwapSpec& spec, const ModelParams& p, const SimulationConfig& cfg);

}  // namespace threehalves::mc
