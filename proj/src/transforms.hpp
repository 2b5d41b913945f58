#pragma once

#include <complex>

#include "model.hpp"
#include "quadrature.hpp"

namespace threehalves::transforms {

using cplx = std::complex<double>;
using model::ModelParams;

// Fourier variables for the log-price X and the quadratic variation I. The
// imaginary parts are the contour and are always the caller's choice.
struct TransformPoint {
    cplx omega;
    cplx eta;
};

struct TransformCoefficients {
    cplx kappa_tilde;  // kappa - i omega rho eps
    cplx c;            // principal sqrt of c2 below
    cplx a;            // drift coefficient (jump-adjusted)
    double A = 1.0;
    double C = 0.0;
    // 1/2 + kappa_tilde / eps^2; kept so alpha~ = c - half_plus is exact
    cplx half_plus;
    bool branch_warning = false;  // from the jump drift
};

// Below this t' - t the transition kernels are treated as a Dirac mass.
inline constexpr double kTerminalDelta = 1e-10;

TransformCoefficients coefficients(TransformPoint pt, const ModelParams& p, double t, double t_prime);

// c^2 = (1/2 + kappa_tilde/eps^2)^2 + (i omega + omega^2 - 2 i eta)/eps^2
cplx c_squared(TransformPoint pt, const ModelParams& p);

// g(t, v; t', omega, eta, v'), the partial transform of the joint transition
// density. The log form is what the pricers use.
cplx log_partial_transform_g(double t, double v, double t_prime, TransformPoint pt, double v_prime,
                             const ModelParams& p);
cplx partial_transform_g(double t, double v, double t_prime, TransformPoint pt, double v_prime, const ModelParams& p);

// g with eta = 0.
cplx partial_transform_g1(double t, double v, double t_prime, cplx omega, double v_prime, const ModelParams& p);

// h(t, v; t', omega, eta) = E[exp(i omega (X' - X) + i eta (I' - I))]
cplx log_joint_cf_h(double t, double v, double t_prime, TransformPoint pt, const ModelParams& p);
cplx joint_cf_h(double t, double v, double t_prime, TransformPoint pt, const ModelParams& p);

// Density of V_{t'} given V_t = v.
double log_transition_density_v(double t, double v, double t_prime, double v_prime, const ModelParams& p);
double transition_density_v(double t, double v, double t_prime, double v_prime, const ModelParams& p);

// Density of U = 1/V, a CIR-type process: scaled noncentral chi-square.
double transition_density_u(double t, double u, double t_prime, double u_prime, const ModelParams& p);

// E[exp(i xi int_t^{t'} V ds) | V_t = v, V_{t'} = v']
cplx conditional_cf_integrated_variance(cplx xi, double t, double t_prime, double v, double v_prime,
                                        const ModelParams& p);

// The argument of the conditional CF that makes the probabilistic product
// below equal to g:
//   xi = omega [rho eps (kappa/eps^2 + 1/2) - 1/2] + i (1 - rho^2) omega^2 / 2 + eta
cplx factorization_xi(TransformPoint pt, const ModelParams& p);

// g rebuilt from its probabilistic pieces:
//   e^{a dt} (v'/(A v))^{i omega rho / eps} * conditional CF(xi) * density.
// An independent route to g used to cross-check the closed form.
cplx factorized_g(double t, double v, double t_prime, TransformPoint pt, double v_prime, const ModelParams& p);

// Where the V_{t'} density sits in ln v': exact mean of the noncentral
// chi-square U' mapped through 1/u, and its relative spread.
quadrature::LogHint v_prime_hint(double t, double v, double t_prime, const ModelParams& p);

struct PhiResult {
    cplx value;
    double err_estimate = 0.0;
};

// Phi(t, x, y, v; t1, t2, w, e) = E[exp(i w1 X_{t1} + i w2 X_{t2} + i e1 I_{t1} + i e2 I_{t2})]
// with X_t = x, I_t = y, V_t = v. One quadrature over v' at t1.
PhiResult bivariate_cf_phi(double t, double x, double y, double v, double t1, double t2, cplx w1, cplx w2, cplx e1,
                           cplx e2, const ModelParams& p, const quadrature::QuadratureConfig& cfg);

}  // namespace threehalves::transforms
