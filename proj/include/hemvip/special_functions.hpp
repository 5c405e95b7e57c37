#pragma once

// Distribution functions backing the statistical tests. Self-contained:
// only <cmath> (lgamma, erfc) is used underneath.

namespace hemvip::special {

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

/// x with I_x(a, b) = p, by bisection on [0, 1] to full double resolution.
double incomplete_beta_inverse(double a, double b, double p);

double normal_cdf(double z);
/// Upper tail 1 - Phi(z), computed without cancellation.
double normal_sf(double z);

/// P(T <= t) for Student's t with `df` degrees of freedom (df may be fractional).
double student_t_cdf(double t, double df);
/// P(|T| >= |t|).
double student_t_two_sided(double t, double df);
/// Quantile of Student's t, 0 < p < 1.
double student_t_quantile(double p, double df);

/// P(X <= k) for X ~ Binomial(n, p).
double binomial_cdf(int k, int n, double p);
/// P(X >= k) for X ~ Binomial(n, p).
double binomial_sf_inclusive(int k, int n, double p);

}  // namespace hemvip::special
