#pragma once

// Probability distribution functions used for every p-value and interval in
// the toolkit. All functions are pure and throw std::domain_error on invalid
// parameters.

namespace replimeta::numerics {

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma function P(a, x).
double incomplete_gamma_p(double a, double x);

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x),
/// evaluated without cancellation in the upper tail.
double incomplete_gamma_q(double a, double x);

double normal_pdf(double x);
double normal_cdf(double x);
/// Upper tail 1 - normal_cdf(x), accurate for large x.
double normal_sf(double x);
double normal_quantile(double p);

double t_cdf(double x, double df);
/// Upper tail P(T > x). Computed directly so that tiny p-values keep their
/// relative precision (Fisher pooling takes logarithms of them).
double t_sf(double x, double df);
double t_quantile(double p, double df);

double chisq_cdf(double x, double df);
double chisq_sf(double x, double df);

/// Two-sided p-value for a t statistic; df = +inf selects the normal.
double two_sided_p(double statistic, double df);

}  // namespace replimeta::numerics
