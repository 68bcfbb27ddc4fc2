#pragma once

/** @file
 * Special functions used by every Beta likelihood, gradient and Hessian
 * evaluation.  Arguments are shifted upward with the recurrence relations
 * until they reach the asymptotic regime, then the Stirling / Bernoulli
 * series is summed.  Relative accuracy is about 1e-13 on (1e-3, 1e6).
 *
 * All functions are pure and thread-safe.  Non-positive or NaN arguments
 * raise betaar::DomainError.
 */

namespace betaar::specfn {

/// log Gamma(x) for x > 0.
double ln_gamma(double x);

/// log B(a, b) = log Gamma(a) + log Gamma(b) - log Gamma(a + b).
double ln_beta(double a, double b);

/// Digamma function psi(x) = d/dx log Gamma(x).
double digamma(double x);

/// Trigamma function psi'(x).
double trigamma(double x);

} // namespace betaar::specfn
