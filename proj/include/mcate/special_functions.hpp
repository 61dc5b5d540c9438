#pragma once

namespace mcate {

// Regularized lower / upper incomplete gamma P(a, x), Q(a, x) for a > 0, x >= 0.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b) for a, b > 0, 0 <= x <= 1.
double beta_inc(double a, double b, double x);

double normal_cdf(double x);
// Standard normal quantile, 0 < p < 1.
double normal_quantile(double p);

// Upper-tail probabilities.
double chi_squared_sf(double statistic, double df);
double f_sf(double statistic, double df_numerator, double df_denominator);

}  // namespace mcate
