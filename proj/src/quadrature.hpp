#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace threehalves::quadrature {

using cplx = std::complex<double>;

// Every numerical integral in the library reads its controls from here. The
// defaults are listed in the README reference table.
struct QuadratureConfig {
    int v_nodes = 24;               // minimum nodes for the fixed v' rules used in pricing loops
    double v_upper_mass_tol = 1e-12;  // density tail level where v' rules are cut
    int fourier_nodes = 4096;
    double fourier_truncation = 200.0;
    double damping_omega = -1.5;
    double damping_eta = 0.5;
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    int max_refinements = 12;

    // Two-dimensional timer grid. See pricers.hpp for the contour choice.
    // The eta spacing follows from the damping (aliasing period), so only
    // the truncation is set here.
    double timer_omega_damping = -3.0;
    int timer_omega_nodes = 256;
    double timer_omega_truncation = 60.0;
    double timer_eta_truncation = 600.0;
    bool timer_lower_contour = true;
    double timer_eta_damping_lower = 8.0;
    // exp(-alpha |x|^order) spectral filter on the 2-D grid, x = node / truncation.
    double filter_alpha = 36.0;
    int filter_order = 8;

    double derivative_step = 1e-3;
    double corridor_damping = -0.5;
};

// Throws NumericError(invalid_argument) if a field is out of range.
void validate_config(const QuadratureConfig& cfg);

// Neumaier summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(cplx z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    cplx value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

// Where the mass of an integrand over v' sits, in u = ln v'.
struct LogHint {
    double center = 0.0;
    double width = 1.0;
};

struct IntegralResult {
    cplx value;
    double err_estimate = 0.0;
    int evaluations = 0;
    int levels = 0;
    std::vector<double> level_differences;  // |S_l - S_{l-1}| for each refinement
};

// int_0^inf f(v) dv. v = exp(c + w sinh s), trapezoid in s with step halving
// until two levels agree to rel_tol (or abs_tol).
IntegralResult integrate_semi_infinite(const std::function<cplx(double)>& f, const QuadratureConfig& cfg,
                                       LogHint hint = {});

// Fixed rule on a uniform grid in u = ln v': int f(v) dv ~ sum w_k f(v_k).
// A uniform grid makes exp(nu * ln z_k) a geometric sequence, which the timer
// pricer exploits.
struct LogUniformRule {
    double u0 = 0.0;
    double du = 0.0;
    std::vector<double> v;
    std::vector<double> w;
    std::size_t size() const { return v.size(); }
};

// Builds a rule from a reference density (in v). The range is cut where the
// u-density drops below tail_tol * peak; the step resolves the bulk with
// `points_per_sd` nodes per standard deviation of ln v, and never exceeds
// max_step.
LogUniformRule make_log_uniform_rule(const std::function<double(double)>& density, LogHint hint, double tail_tol,
                                     int min_nodes, double points_per_sd, double max_step);

// One axis of a Fourier inversion: midpoint grid Re(x) = -L + (k + 1/2) h,
// h = 2L / nodes, at fixed imaginary part `damping`.
struct FourierAxis {
    double damping = 0.0;
    double truncation = 100.0;
    int nodes = 1024;
    double filter_alpha = 0.0;
    int filter_order = 8;

    double spacing() const { return 2.0 * truncation / nodes; }
    double real_at(int k) const { return -truncation + (k + 0.5) * spacing(); }
    cplx node(int k) const { return {real_at(k), damping}; }
    double filter(double re, double trunc) const {
        if (filter_alpha <= 0.0) return std::abs(re) <= trunc ? 1.0 : 0.0;
        if (std::abs(re) > trunc) return 0.0;
        return std::exp(-filter_alpha * std::pow(std::abs(re) / trunc, filter_order));
    }
};

struct FourierResult {
    double value = 0.0;
    double imag_residual = 0.0;
    double tail_estimate = 0.0;
    double err_estimate = 0.0;
    bool truncation_warning = false;
};

// (1/2pi) int payoff(w) cf(w) dRe(w) along the axis contour. With fold the
// integrand is assumed Hermitian (real result) and only Re(w) > 0 is summed;
// a few mirrored nodes are still evaluated to measure the imaginary residual.
FourierResult fourier_invert_1d(const std::function<cplx(cplx)>& cf, const std::function<cplx(cplx)>& payoff,
                                const FourierAxis& axis, const QuadratureConfig& cfg, bool fold = true);

// Fills out[k] with the full integrand (payoff transform times transform)
// at (omega, etas[k]).
using ColumnFn = std::function<void(cplx omega, std::span<const cplx> etas, std::span<cplx> out)>;

struct ParsevalResult {
    double value = 0.0;
    double imag_residual = 0.0;
    double omega_tail = 0.0;   // change when the omega truncation shrinks by 20%
    double eta_tail = 0.0;
    double omega_alias = 0.0;  // change when every other omega column is dropped
    double eta_alias = 0.0;
    double err_estimate = 0.0;
};

// (1/4pi^2) double integral over the tensor grid. Columns are independent and
// may run on several workers; the reduction order is fixed. The omega alias
// check costs half as many extra columns again; without it omega_alias is 0
// and the caller is expected to bound it some other way.
ParsevalResult parseval_double(const ColumnFn& column, const FourierAxis& omega_axis, const FourierAxis& eta_axis,
                               bool fold = true, bool omega_alias_check = true);

// Several integrands sharing one grid (e.g. one timer H for many budgets).
// The column callback fills out[m * etas.size() + k] for output m.
using MultiColumnFn = ColumnFn;
std::vector<ParsevalResult> parseval_double_multi(const MultiColumnFn& column, int n_out,
                                                 const FourierAxis& omega_axis, const FourierAxis& eta_axis,
                                                 bool fold = true, bool omega_alias_check = true);

}  // namespace threehalves::quadrature
