#pragma once

namespace mlwave {

// Thin layer over std::tgamma / std::lgamma that adds exact poles and a
// reciprocal usable beyond the overflow point of Gamma.

/// Gamma function. Returns +/-inf at the poles x = 0, -1, -2, ...
double gamma_fn(double x);

/// 1/Gamma(x). Exactly zero at the poles.
double rgamma(double x);

/// log|Gamma(x)|; +inf at the poles.
double log_abs_gamma(double x);

/// sign(Gamma(x)) in {-1, 0, +1}; 0 at the poles.
int gamma_sign(double x);

/// sin(pi * x), exact zero at integers.
double sin_pi(double x);

}  // namespace mlwave
