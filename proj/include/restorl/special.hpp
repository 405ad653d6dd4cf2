#pragma once

namespace restorl {

/// Natural log of the Gamma function for x > 0 (Lanczos approximation,
/// accurate to better than 1e-10 relative for x >= 1e-2).
double log_gamma(double x);

/// Digamma psi(x) = d/dx log Gamma(x) for x > 0.
/// Recurrence pushes the argument above 6, then the Bernoulli asymptotic
/// series takes over; absolute error below 1e-10 for x >= 1e-2.
double digamma(double x);

/// Trigamma psi'(x) for x > 0, same recurrence + asymptotic scheme.
double trigamma(double x);

/// log B(a, b) = log_gamma(a) + log_gamma(b) - log_gamma(a + b).
double log_beta(double a, double b);

}  // namespace restorl
