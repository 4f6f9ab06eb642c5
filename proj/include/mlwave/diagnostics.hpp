#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mlwave/linear_solver.hpp"

namespace mlwave {

/// Discrete Caputo derivative of order alpha in (1, 2) on a uniform grid.
/// On each interval [t_{k-1}, t_k] the second derivative is replaced by a
/// centered difference of the nodal velocities v_k = (u_{k+1} - u_{k-1}) / 2dt,
/// and the (t - s)^(1-alpha) / Gamma(2-alpha) weights are integrated exactly.
/// v_0 is `initial_velocity` when given, a one-sided second-order difference
/// otherwise. Returns values at the interior nodes t_1 .. t_{M-1}.
std::vector<double> discrete_caputo(std::span<const double> series, double alpha, double dt,
                                    std::optional<double> initial_velocity = std::nullopt);

struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log of the prefactor
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log(values) against log(times) on [t_lo, t_hi].
/// The first two grid points and values below 1e-13 are excluded.
RateFit rate_fit(std::span<const double> times, std::span<const double> values, double t_lo,
                 double t_hi);

struct ConvergenceStudy {
  std::vector<double> dts;
  std::vector<double> differences;  // max |s_{i+1} - s_i| between consecutive levels
  std::vector<double> orders;       // log2 of successive difference ratios
  bool exact = false;               // differences at round-off
  double min_order() const;
};

/// `runner(dt)` returns the final-state coefficients of a run with step dt.
/// dts must hold at least three values, each half of the previous.
ConvergenceStudy self_convergence(const std::function<std::vector<double>(double)>& runner,
                                  const std::vector<double>& dts);

/// max over interior nodes with t >= t_from of |D_h u_n + lambda_n u_n - f_n|
/// for one mode of a uniform-grid trace.
double caputo_residual(const SolutionTrace& trace, std::size_t mode, double t_from = 0.0);

}  // namespace mlwave
