#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace threehalves::model {

using cplx = std::complex<double>;

// Piecewise-constant theta_t. breakpoints = {0 = b_0 < b_1 < ... < b_n},
// values[i] holds on [b_i, b_{i+1}). The last breakpoint is the horizon and
// may be +infinity.
class ThetaCurve {
public:
    ThetaCurve() : ThetaCurve(constant(0.0)) {}
    ThetaCurve(std::vector<double> breakpoints, std::vector<double> values);
    static ThetaCurve constant(double value,
                               double horizon = std::numeric_limits<double>::infinity());

    double horizon() const { return breaks_.back(); }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }
    bool is_constant() const { return values_.size() == 1; }

    // integral of theta over [t, t_prime]
    double integral(double t, double t_prime) const;
    double value_at(double t) const;

private:
    void check_interval(double t, double t_prime, const char* where) const;
    friend double coef_C(const ThetaCurve&, double, double, double);

    std::vector<double> breaks_;
    std::vector<double> values_;
};

struct JumpParams {
    double lambda = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
};

struct ModelParams {
    double kappa = 0.0;
    double epsilon = 1.0;
    double rho = 0.0;
    double r = 0.0;
    double q = 0.0;
    double s0 = 100.0;
    double v0 = 0.04;
    ThetaCurve theta;
    std::optional<JumpParams> jumps;
};

// S&P 500 calibration used as the default parameter set.
ModelParams reference_params();

struct Violation {
    std::string constraint;
    std::string detail;
};

// Empty result means the parameters are admissible.
std::vector<Violation> validate(const ModelParams& p);
// Throws NumericError(constraint) naming every violation.
void require_valid(const ModelParams& p);

// exp(int_t^{t'} theta)
double coef_A(const ThetaCurve& theta, double t, double t_prime);
// (eps^2/2) int_t^{t'} exp(int_t^s theta) ds, exact per segment
double coef_C(const ThetaCurve& theta, double epsilon, double t, double t_prime);

// e^{mu + sigma^2/2} - 1
double jump_compensator(const JumpParams& j);

struct DriftResult {
    cplx value;
    // 1 - 2 i eta sigma^2 has non-positive real part, so the principal
    // square root may jump along the contour in use.
    bool branch_warning = false;
};

DriftResult drift_a(cplx omega, cplx eta, const ModelParams& p);

}  // namespace threehalves::model
