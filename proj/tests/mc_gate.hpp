#pragma once

// 20-bin comparison of exact U-transition draws against the closed-form
// density. Shared by the unit tests and the acceptance binary.

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "mc_oracle.hpp"
#include "transforms.hpp"

namespace testutil {

struct BinCheck {
    std::vector<double> expected;   // probability from the density
    std::vector<double> empirical;  // fraction of draws
    double worst_rel = 0.0;
};

// Bins have equal probability under the chi-square law between its 0.05% and
// 99.95% quantiles. The law only places the edges; expected masses come from
// integrating transition_density_u.
inline BinCheck density_bins(double u, double t, double dt, const threehalves::model::ModelParams& p, long draws,
                             std::uint64_t seed, int bins = 20) {
    namespace mc = threehalves::mc;
    const auto law = mc::variance_transition_law(u, t, dt, p);
    const boost::math::non_central_chi_squared dist(law.df, law.noncentrality);
    std::vector<double> edges(bins + 1);
    for (int b = 0; b <= bins; ++b)
        edges[b] = law.scale * boost::math::quantile(dist, 0.0005 + 0.999 * b / bins);

    BinCheck out;
    for (int b = 0; b < bins; ++b) {
        auto f = [&](double x) { return threehalves::transforms::transition_density_u(t, u, t + dt, x, p); };
        out.expected.push_back(
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, edges[b], edges[b + 1], 10, 1e-12));
    }
    std::vector<long> counts(bins, 0);
    auto rng = mc::path_rng(seed, 0);
    for (long k = 0; k < draws; ++k) {
        const double x = mc::sample_variance_transition(u, t, dt, p, rng);
        const auto it = std::upper_bound(edges.begin(), edges.end(), x);
        if (it == edges.begin() || it == edges.end()) continue;
        ++counts[static_cast<std::size_t>(it - edges.begin() - 1)];
    }
    for (int b = 0; b < bins; ++b) {
        out.empirical.push_back(static_cast<double>(counts[b]) / static_cast<double>(draws));
        out.worst_rel = std::max(out.worst_rel, std::abs(out.empirical[b] / out.expected[b] - 1.0));
    }
    return out;
}

// The same bins read in V = 1/U, with expected masses from the V density.
// Bin membership is identical, so this checks transition_density_v itself.
inline BinCheck density_bins_v(double v, double t, double dt, const threehalves::model::ModelParams& p, long draws,
                               std::uint64_t seed, int bins = 20) {
    namespace mc = threehalves::mc;
    const auto law = mc::variance_transition_law(1.0 / v, t, dt, p);
    const boost::math::non_central_chi_squared dist(law.df, law.noncentrality);
    std::vector<double> edges(bins + 1);  // increasing in v
    for (int b = 0; b <= bins; ++b)
        edges[bins - b] = 1.0 / (law.scale * boost::math::quantile(dist, 0.0005 + 0.999 * b / bins));

    BinCheck out;
    for (int b = 0; b < bins; ++b) {
        auto f = [&](double x) { return threehalves::transforms::transition_density_v(t, v, t + dt, x, p); };
        out.expected.push_back(
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, edges[b], edges[b + 1], 10, 1e-12));
    }
    std::vector<long> counts(bins, 0);
    auto rng = mc::path_rng(seed, 0);
    for (long k = 0; k < draws; ++k) {
        const double x = 1.0 / mc::sample_variance_transition(1.0 / v, t, dt, p, rng);
        const auto it = std::upper_bound(edges.begin(), edges.end(), x);
        if (it == edges.begin() || it == edges.end()) continue;
        ++counts[static_cast<std::size_t>(it - edges.begin() - 1)];
    }
    for (int b = 0; b < bins; ++b) {
        out.empirical.push_back(static_cast<double>(counts[b]) / static_cast<double>(draws));
        out.worst_rel = std::max(out.worst_rel, std::abs(out.empirical[b] / out.expected[b] - 1.0));
    }
    return out;
}

}  // namespace testutil
