#include "mlwave/gamma.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mlwave {

namespace {

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// Gamma overflows a double just above this
constexpr double kGammaMax = 171.62;

}  // namespace

double sin_pi(double x) {
  if (x == std::floor(x)) return 0.0;
  // reduce to r in [-1, 1], then to [-1/2, 1/2] with a sign flip
  double r = std::fmod(x, 2.0);
  if (r > 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  if (r > 0.5) r = 1.0 - r;
  if (r < -0.5) r = -1.0 - r;
  return std::sin(std::numbers::pi * r);
}

double gamma_fn(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) return std::numeric_limits<double>::infinity();
  return std::tgamma(x);
}

double rgamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) return 0.0;
  if (x > 0.0) {
    if (x > kGammaMax) return std::exp(-std::lgamma(x));
    return 1.0 / std::tgamma(x);
  }
  // reflection: 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi, finite where tgamma underflows
  const double omx = 1.0 - x;
  const double s = sin_pi(x) / std::numbers::pi;
  if (omx > kGammaMax) return s * std::exp(std::lgamma(omx));
  return s * std::tgamma(omx);
}

double log_abs_gamma(double x) {
  if (is_nonpositive_integer(x)) return std::numeric_limits<double>::infinity();
  return std::lgamma(x);
}

int gamma_sign(double x) {
  if (is_nonpositive_integer(x)) return 0;
  if (x > 0.0) return 1;
  return sin_pi(x) > 0.0 ? 1 : -1;
}

}  // namespace mlwave
