#include "mlwave/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mlwave/errors.hpp"
#include "mlwave/gamma.hpp"

namespace mlwave {

std::vector<double> discrete_caputo(std::span<const double> series, double alpha, double dt,
                                    std::optional<double> initial_velocity) {
  if (series.size() < 3) throw DomainError("discrete_caputo: need at least 3 points");
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("discrete_caputo: alpha must lie in (1, 2)");
  if (!(dt > 0.0)) throw DomainError("discrete_caputo: dt must be positive");
  const std::size_t m = series.size() - 1;

  // nodal velocities v_0 .. v_{m-1}
  std::vector<double> v(m);
  if (initial_velocity) {
    v[0] = *initial_velocity;
  } else {
    v[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt);
  }
  for (std::size_t k = 1; k < m; ++k) v[k] = (series[k + 1] - series[k - 1]) / (2.0 * dt);

  // b_j = ((j+1)^(2-a) - j^(2-a)) dt^(1-a) / Gamma(3-a), applied to v_k - v_{k-1}
  const double e = 2.0 - alpha;
  const double scale = std::pow(dt, 1.0 - alpha) * rgamma(3.0 - alpha);
  std::vector<double> b(m);
  for (std::size_t j = 0; j < m; ++j) {
    b[j] = (std::pow(static_cast<double>(j + 1), e) - std::pow(static_cast<double>(j), e)) * scale;
  }
  std::vector<double> out(m - 1);
  for (std::size_t n = 1; n < m; ++n) {
    double s = 0.0;
    for (std::size_t k = 1; k <= n; ++k) s += b[n - k] * (v[k] - v[k - 1]);
    out[n - 1] = s;
  }
  return out;
}

RateFit rate_fit(std::span<const double> times, std::span<const double> values, double t_lo,
                 double t_hi) {
  if (times.size() != values.size()) throw DomainError("rate_fit: times and values differ in length");
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("rate_fit: window must satisfy 0 < t_lo < t_hi");
  std::vector<double> x, y;
  for (std::size_t i = 2; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    if (!(values[i] >= 1e-13) || !std::isfinite(values[i])) continue;
    x.push_back(std::log(times[i]));
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 5) throw DomainError("rate_fit: fewer than 5 usable points in the window");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("rate_fit: degenerate time window");
  RateFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  f.points = x.size();
  return f;
}

double ConvergenceStudy::min_order() const {
  if (exact || orders.empty()) return INFINITY;
  return *std::min_element(orders.begin(), orders.end());
}

ConvergenceStudy self_convergence(const std::function<std::vector<double>(double)>& runner,
                                  const std::vector<double>& dts) {
  if (dts.size() < 3) throw DomainError("self_convergence: need at least 3 step sizes");
  for (std::size_t i = 1; i < dts.size(); ++i) {
    if (std::abs(dts[i] - 0.5 * dts[i - 1]) > 1e-12 * dts[i - 1]) {
      throw DomainError("self_convergence: each step must halve the previous one");
    }
  }
  ConvergenceStudy cs;
  cs.dts = dts;
  std::vector<std::vector<double>> finals;
  double mag = 0.0;
  for (double dt : dts) {
    finals.push_back(runner(dt));
    if (finals.back().size() != finals.front().size()) {
      throw DomainError("self_convergence: runs returned different state sizes");
    }
    for (double v : finals.back()) mag = std::max(mag, std::abs(v));
  }
  for (std::size_t i = 0; i + 1 < finals.size(); ++i) {
    double d = 0.0;
    for (std::size_t n = 0; n < finals[i].size(); ++n) {
      d = std::max(d, std::abs(finals[i + 1][n] - finals[i][n]));
    }
    cs.differences.push_back(d);
  }
  const double floor = 1e-13 * (1.0 + mag);
  cs.exact = std::all_of(cs.differences.begin(), cs.differences.end(),
                         [&](double d) { return d <= floor; });
  if (!cs.exact) {
    for (std::size_t i = 0; i + 1 < cs.differences.size(); ++i) {
      cs.orders.push_back(std::log2(cs.differences[i] / cs.differences[i + 1]));
    }
  }
  return cs;
}

double caputo_residual(const SolutionTrace& trace, std::size_t mode, double t_from) {
  if (mode >= trace.n_modes()) throw DomainError("caputo_residual: mode out of range");
  const std::size_t rows = trace.times.size();
  if (rows < 3) throw DomainError("caputo_residual: need at least 3 time nodes");
  const double dt = trace.times[1] - trace.times[0];
  for (std::size_t j = 1; j < rows; ++j) {
    if (std::abs(trace.times[j] - trace.times[j - 1] - dt) > 1e-9 * dt) {
      throw DomainError("caputo_residual: uniform grid required");
    }
  }
  const auto u = trace.u.column(mode);
  const auto d = discrete_caputo(u, trace.alpha, dt, trace.dtu(0, mode));
  double r = 0.0;
  for (std::size_t j = 1; j + 1 < rows; ++j) {
    if (trace.times[j] < t_from) continue;
    const double res = d[j - 1] + trace.lambdas[mode] * u[j] - trace.forcing(j, mode);
    r = std::max(r, std::abs(res));
  }
  return r;
}

}  // namespace mlwave
