#pragma once

#include <complex>
#include <optional>
#include <span>

namespace mlwave {

/// Evaluation policy for the two-parameter Mittag-Leffler function.
///
/// On the negative real axis the evaluator switches between three regimes:
/// Taylor series for |x| <= series_cutoff, the algebraic asymptotic expansion
/// (plus its oscillating exponential part) for |x| >= asym_cutoff when its
/// smallest-term truncation error meets rel_tol, and Laplace-transform
/// inversion on a parabolic contour everywhere else.
struct MLPrecision {
  double rel_tol = 1e-12;
  double series_cutoff = 5.0;
  double asym_cutoff = 50.0;
  int max_terms = 2000;

  void validate() const;
};

/// A point E_{alpha,beta}(x) on the real axis.
struct MLQuery {
  double alpha = 1.0;
  double beta = 1.0;
  double x = 0.0;

  void validate() const;
};

/// E_{alpha,beta}(x) for 0 < alpha <= 2, real beta and x.
/// Throws DomainError on invalid input, OverflowError when the value is not
/// representable (large positive x).
double ml_e(const MLQuery& q, const MLPrecision& p = {});

inline double ml_e(double alpha, double beta, double x, const MLPrecision& p = {}) {
  return ml_e(MLQuery{alpha, beta, x}, p);
}

/// E_{alpha,beta_b}(x) for several beta at once; bitwise equal to calling
/// ml_e for each beta, but the contour quadrature is shared where possible.
void ml_e_multi(double alpha, std::span<const double> betas, double x, std::span<double> out,
                const MLPrecision& p = {});

/// Regime evaluators, exposed for verification. None of them validate input.
namespace ml_regime {

/// Compensated Taylor sum; nullopt when it fails to converge in max_terms.
std::optional<double> taylor(double alpha, double beta, double x, int max_terms);

/// Asymptotic expansion of E_{alpha,beta}(-y), y > 0, truncated at its
/// smallest term. nullopt when that truncation error exceeds rel_tol * |value|.
std::optional<double> asymptotic(double alpha, double beta, double y, double rel_tol,
                                 int max_terms);

/// Numerical inversion of the Laplace transform s^(alpha-beta) / (s^alpha - z)
/// along an optimal parabolic contour, plus residues of the poles it leaves out.
std::complex<double> contour(double alpha, double beta, std::complex<double> z);
void contour_multi(double alpha, std::span<const double> betas, std::complex<double> z,
                   std::span<std::complex<double>> out);

/// E_{alpha,beta}(-y) for 1 < alpha <= 2 through the duplication identity
/// E_{alpha,beta}(-y) = Re E_{alpha/2,beta}(i sqrt(y)).
double duplicated(double alpha, double beta, double y);

}  // namespace ml_regime

/// sup over a grid on [0, x_max] (log-spaced in 1 + x, first node x = 0) of
/// (1 + x) |E_{alpha,beta}(-x)|.
double ml_bound_probe(double alpha, double beta, double x_max, int n_grid,
                      const MLPrecision& p = {});

/// Absolute residuals of three derivative identities, with the derivative on
/// the left computed by a central difference of step h:
///   d/dt E_{a,1}(-l t^a)          = -l t^(a-1) E_{a,a}(-l t^a)
///   d/dt [t E_{a,2}(-l t^a)]      = E_{a,1}(-l t^a)
///   d/dt [t^(a-1) E_{a,a}(-l t^a)] = t^(a-2) E_{a,a-1}(-l t^a)
struct IdentityResiduals {
  double first_derivative = 0.0;
  double integrated_kernel = 0.0;
  double kernel_derivative = 0.0;
};

IdentityResiduals ml_identity_residuals(double alpha, double lambda, double t, double h,
                                        const MLPrecision& p = {});

/// M_k = int_0^h s^k s^(alpha-1) E_{alpha,alpha}(-lambda s^alpha) ds for k in {0, 1}.
double kernel_moment(double alpha, double lambda, double h, int k, const MLPrecision& p = {});

}  // namespace mlwave
