#pragma once

namespace petition::eval {

/// Regularised lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);
/// Regularised incomplete beta I_x(a, b).
double regularized_beta(double x, double a, double b);

/// Survival function of the chi-square distribution with k degrees of freedom.
double chi2_sf(double x, int k);
/// Survival function of the F distribution with (d1, d2) degrees of freedom.
double f_sf(double x, int d1, int d2);

}  // namespace petition::eval
