#pragma once

namespace openima {

// Rational erf approximation (Abramowitz & Stegun 7.1.26 style) for
// x >= 0, absolute error below 1.5e-7.
double erf_approx(double x);

// Standard normal density exp(-x^2/2)/sqrt(2*pi).
double std_normal_pdf(double x);

// Standard normal cdf. Evaluated on |x| and reflected, so
// cdf(-x) == 1 - cdf(x) holds exactly.
double std_normal_cdf(double x);

}  // namespace openima
