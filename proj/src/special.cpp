#include "openima/special.hpp"

#include <cmath>

namespace openima {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
}  // namespace

double erf_approx(double x) {
    // coefficients from the classic 5-term rational fit
    constexpr double p = 0.3275911;
    constexpr double a1 = 0.254829592;
    constexpr double a2 = -0.284496736;
    constexpr double a3 = 1.421413741;
    constexpr double a4 = -1.453152027;
    constexpr double a5 = 1.061405429;
    double t = 1.0 / (1.0 + p * x);
    double poly = ((((a5 * t + a4) * t + a3) * t + a2) * t + a1) * t;
    return 1.0 - poly * std::exp(-x * x);
}

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) {
    double upper = 0.5 * (1.0 + erf_approx(std::fabs(x) * kInvSqrt2));
    return x < 0.0 ? 1.0 - upper : upper;
}

}  // namespace openima
