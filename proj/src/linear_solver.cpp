#include "mlwave/linear_solver.hpp"

#include <algorithm>
#include <cmath>

#include "mlwave/errors.hpp"
#include "mlwave/gamma.hpp"
#include "mlwave/parallel.hpp"

namespace mlwave {

// ---------------------------------------------------------------------------
// grids and time profiles

TimeGrid TimeGrid::uniform(double t_end, double dt) {
  if (!(t_end > 0.0 && std::isfinite(t_end))) throw DomainError("time grid: t_end must be positive");
  if (!(dt > 0.0 && dt <= t_end)) throw DomainError("time grid: dt must lie in (0, t_end]");
  const double steps = std::round(t_end / dt);
  if (std::abs(steps * dt - t_end) > 1e-12 * std::max(1.0, t_end)) {
    throw DomainError("time grid: dt must divide t_end");
  }
  TimeGrid g;
  const auto m = static_cast<std::size_t>(steps);
  g.t_.resize(m + 1);
  for (std::size_t j = 0; j <= m; ++j) g.t_[j] = static_cast<double>(j) * dt;
  g.dt_ = dt;
  return g;
}

TimeGrid TimeGrid::from_points(std::vector<double> t) {
  if (t.size() < 2) throw DomainError("time grid: need at least two points");
  if (t[0] != 0.0) throw DomainError("time grid: must start at 0");
  for (std::size_t j = 1; j < t.size(); ++j) {
    if (!(t[j] > t[j - 1]) || !std::isfinite(t[j])) {
      throw DomainError("time grid: points must be finite and strictly increasing");
    }
  }
  TimeGrid g;
  g.t_ = std::move(t);
  return g;
}

double TimeGrid::require_dt(const char* who) const {
  if (!dt_) throw DomainError(std::string(who) + ": unsupported grid, a uniform time grid is required");
  return *dt_;
}

std::string to_string(TimeFunction::Kind k) {
  switch (k) {
    case TimeFunction::Kind::constant: return "constant";
    case TimeFunction::Kind::polynomial: return "polynomial";
    case TimeFunction::Kind::sinusoid: return "sinusoid";
    case TimeFunction::Kind::exponential_decay: return "exponential_decay";
  }
  return "unknown";
}

TimeFunction::Kind time_function_kind_from_string(const std::string& s) {
  for (auto k : {TimeFunction::Kind::constant, TimeFunction::Kind::polynomial,
                 TimeFunction::Kind::sinusoid, TimeFunction::Kind::exponential_decay}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown time function '" + s + "'");
}

void TimeFunction::validate() const {
  for (double v : params) {
    if (!std::isfinite(v)) throw ConfigError("time function: parameters must be finite");
  }
  std::size_t want = 0;
  switch (kind) {
    case Kind::constant: want = 1; break;
    case Kind::polynomial:
      if (params.empty()) throw ConfigError("time function: polynomial needs coefficients");
      return;
    case Kind::sinusoid: want = 3; break;
    case Kind::exponential_decay: want = 2; break;
  }
  if (params.size() != want) {
    throw ConfigError("time function: " + to_string(kind) + " takes " + std::to_string(want) +
                      " parameters");
  }
}

double TimeFunction::value(double t) const {
  switch (kind) {
    case Kind::constant: return params[0];
    case Kind::polynomial: {
      double v = 0.0;
      for (std::size_t i = params.size(); i-- > 0;) v = v * t + params[i];
      return v;
    }
    case Kind::sinusoid: return params[0] * std::sin(params[1] * t + params[2]);
    case Kind::exponential_decay: return params[0] * std::exp(-params[1] * t);
  }
  return 0.0;
}

double TimeFunction::derivative(double t) const {
  switch (kind) {
    case Kind::constant: return 0.0;
    case Kind::polynomial: {
      double v = 0.0;
      for (std::size_t i = params.size(); i-- > 1;) v = v * t + static_cast<double>(i) * params[i];
      return v;
    }
    case Kind::sinusoid: return params[0] * params[1] * std::cos(params[1] * t + params[2]);
    case Kind::exponential_decay: return -params[1] * params[0] * std::exp(-params[1] * t);
  }
  return 0.0;
}

namespace {

// second-order differences on a uniform grid
std::vector<double> differentiate(const std::vector<double>& v, double dt) {
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) {
    if (n == 2) d[0] = d[1] = (v[1] - v[0]) / dt;
    return d;
  }
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
  for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
  return d;
}

}  // namespace

Matrix ForcingSpec::sample(const TimeGrid& grid, std::size_t n_modes) const {
  Matrix f(grid.size(), n_modes, 0.0);
  switch (kind) {
    case Kind::zero: break;
    case Kind::separable: {
      if (g.size() != n_modes) throw DomainError("forcing: g must have N coefficients");
      if (!h && h_samples.size() != grid.size()) {
        throw DomainError("forcing: tabulated profile must have one sample per grid node");
      }
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double hv = h ? h->value(grid[j]) : h_samples[j];
        for (std::size_t n = 0; n < n_modes; ++n) f(j, n) = g[n] * hv;
      }
      break;
    }
    case Kind::tabulated:
      if (table.rows() != grid.size() || table.cols() != n_modes) {
        throw DomainError("forcing: table must be (grid nodes) x N");
      }
      f = table;
      break;
  }
  for (double v : f.data()) {
    if (!std::isfinite(v)) throw DomainError("forcing: non-finite sample");
  }
  return f;
}

Matrix ForcingSpec::sample_derivative(const TimeGrid& grid, std::size_t n_modes) const {
  Matrix d(grid.size(), n_modes, 0.0);
  if (kind == Kind::zero) return d;
  if (kind == Kind::separable && h) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double hv = h->derivative(grid[j]);
      for (std::size_t n = 0; n < n_modes; ++n) d(j, n) = g[n] * hv;
    }
    return d;
  }
  const double dt = grid.require_dt("forcing derivative");
  const Matrix f = sample(grid, n_modes);
  for (std::size_t n = 0; n < n_modes; ++n) {
    const auto col = differentiate(f.column(n), dt);
    for (std::size_t j = 0; j < grid.size(); ++j) d(j, n) = col[j];
  }
  return d;
}

void LinearProblem::validate() const {
  std::vector<std::string> errs;
  if (!op) errs.push_back("linear problem: operator missing");
  if (!(alpha > 1.0 && alpha <= 2.0)) errs.push_back("linear problem: alpha must lie in (1, 2]");
  if (u0.empty()) errs.push_back("linear problem: N must be >= 1");
  if (u1.size() != u0.size()) errs.push_back("linear problem: u0 and u1 must have the same N");
  if (op && u0.size() > op->capacity()) errs.push_back("linear problem: N exceeds operator capacity");
  for (double v : u0) {
    if (!std::isfinite(v)) errs.push_back("linear problem: u0 has non-finite coefficients");
  }
  for (double v : u1) {
    if (!std::isfinite(v)) errs.push_back("linear problem: u1 has non-finite coefficients");
  }
  if (forcing.kind == ForcingSpec::Kind::separable) {
    if (forcing.g.size() != u0.size()) errs.push_back("linear problem: forcing g must have N coefficients");
    if (forcing.h) forcing.h->validate();
  }
  if (!errs.empty()) throw DomainError(errs.front());
}

// ---------------------------------------------------------------------------
// kernels

namespace {

struct NodeValues {
  double e1, te2, k, kp, p, q;
};

// all propagator values at time t for one mode
NodeValues node_values(double alpha, double lambda, double t, bool want_kp, bool want_pq,
                       const MLPrecision& mp) {
  NodeValues v{};
  if (t == 0.0) {
    v.e1 = 1.0;
    v.te2 = 0.0;
    v.k = 0.0;
    v.kp = alpha == 2.0 ? 1.0 : 0.0;  // t^(a-2) blows up at 0 for a < 2
    v.p = 0.0;
    v.q = 0.0;
    return v;
  }
  const double ta = std::pow(t, alpha);
  const double x = -lambda * ta;
  double betas[4] = {1.0, 2.0, alpha, alpha - 1.0};
  double vals[4] = {0.0, 0.0, 0.0, 0.0};
  ml_e_multi(alpha, std::span<const double>(betas, want_kp ? 4 : 3), x,
             std::span<double>(vals, want_kp ? 4 : 3), mp);
  v.e1 = vals[0];
  v.te2 = t * vals[1];
  v.k = std::pow(t, alpha - 1.0) * vals[2];
  v.kp = want_kp ? std::pow(t, alpha - 2.0) * vals[3] : 0.0;
  if (want_pq) {
    // E_{a,a+1}(x) = (E_{a,1}(x) - 1) / x and E_{a,a+2}(x) = (E_{a,2}(x) - 1) / x
    // away from the origin, where they lose nothing to cancellation
    double ea1, ea2;
    if (-x > mp.series_cutoff) {
      ea1 = (vals[0] - 1.0) / x;
      ea2 = (vals[1] - 1.0) / x;
    } else {
      double b2[2] = {alpha + 1.0, alpha + 2.0};
      double o2[2];
      ml_e_multi(alpha, b2, x, o2, mp);
      ea1 = o2[0];
      ea2 = o2[1];
    }
    v.p = ta * ea1;
    v.q = ta * t * ea2;
  }
  return v;
}

void check_alpha_lambda(double alpha, double lambda) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("kernel: alpha must lie in (1, 2]");
  if (!(lambda >= 0.0 && std::isfinite(lambda))) throw DomainError("kernel: lambda must be >= 0");
}

}  // namespace

ModeKernel build_mode_kernel(double alpha, double lambda, double dt, std::size_t steps,
                             bool want_kp, const MLPrecision& mp) {
  check_alpha_lambda(alpha, lambda);
  if (!(dt > 0.0)) throw DomainError("kernel: dt must be positive");
  ModeKernel mk;
  mk.lambda = lambda;
  const std::size_t n = steps + 1;
  mk.e1.resize(n);
  mk.te2.resize(n);
  mk.k.resize(n);
  mk.kp.resize(n);
  std::vector<double> p(n), q(n);
  for (std::size_t j = 0; j < n; ++j) {
    const NodeValues v = node_values(alpha, lambda, static_cast<double>(j) * dt, want_kp, true, mp);
    mk.e1[j] = v.e1;
    mk.te2[j] = v.te2;
    mk.k[j] = v.k;
    mk.kp[j] = v.kp;
    p[j] = v.p;
    q[j] = v.q;
  }
  mk.wA.resize(steps);
  mk.wB.resize(steps);
  mk.vA.resize(steps);
  mk.vB.resize(steps);
  for (std::size_t m = 0; m < steps; ++m) {
    const double dq = (q[m + 1] - q[m]) / dt;
    const double dp = (p[m + 1] - p[m]) / dt;
    mk.wA[m] = p[m + 1] - dq;
    mk.wB[m] = dq - p[m];
    mk.vA[m] = mk.k[m + 1] - dp;
    mk.vB[m] = dp - mk.k[m];
  }
  return mk;
}

ModeKernel build_mode_kernel_at(double alpha, double lambda, const std::vector<double>& times,
                                bool want_kp, const MLPrecision& mp) {
  check_alpha_lambda(alpha, lambda);
  ModeKernel mk;
  mk.lambda = lambda;
  const std::size_t n = times.size();
  mk.e1.resize(n);
  mk.te2.resize(n);
  mk.k.resize(n);
  mk.kp.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const NodeValues v = node_values(alpha, lambda, times[j], want_kp, false, mp);
    mk.e1[j] = v.e1;
    mk.te2[j] = v.te2;
    mk.k[j] = v.k;
    mk.kp[j] = v.kp;
  }
  return mk;
}

double product_sum(const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<double>& f, std::size_t j) {
  double s = 0.0;
  for (std::size_t m = 0; m < j; ++m) s += a[m] * f[j - 1 - m] + b[m] * f[j - m];
  return s;
}

// ---------------------------------------------------------------------------

HomogeneousState homogeneous_state(const LinearProblem& p, double t, const MLPrecision& mp) {
  p.validate();
  if (!(t >= 0.0 && std::isfinite(t))) throw DomainError("homogeneous_state: t must be >= 0");
  const std::size_t n_modes = p.n_modes();
  HomogeneousState s{std::vector<double>(n_modes), std::vector<double>(n_modes)};
  for (std::size_t n = 0; n < n_modes; ++n) {
    const double lambda = p.op->eigenvalue(n + 1);
    const NodeValues v = node_values(p.alpha, lambda, t, false, false, mp);
    s.u[n] = p.u0[n] * v.e1 + p.u1[n] * v.te2;
    s.dtu[n] = -p.u0[n] * lambda * v.k + p.u1[n] * v.e1;
  }
  return s;
}

ForcingConvolution convolve_forcing(const LinearProblem& p, const TimeGrid& grid,
                                    const MLPrecision& mp) {
  p.validate();
  const double dt = grid.require_dt("convolve_forcing");
  const std::size_t n_modes = p.n_modes();
  const std::size_t rows = grid.size();
  ForcingConvolution out{Matrix(rows, n_modes), Matrix(rows, n_modes)};
  if (p.forcing.kind == ForcingSpec::Kind::zero) return out;
  const Matrix f = p.forcing.sample(grid, n_modes);
  parallel_for(n_modes, [&](std::size_t n) {
    const ModeKernel mk =
        build_mode_kernel(p.alpha, p.op->eigenvalue(n + 1), dt, grid.steps(), false, mp);
    const auto fn = f.column(n);
    for (std::size_t j = 0; j < rows; ++j) {
      out.s3(j, n) = product_sum(mk.wA, mk.wB, fn, j);
      out.s3p(j, n) = product_sum(mk.vA, mk.vB, fn, j);
    }
  });
  return out;
}

void fill_norms(SolutionTrace& trace) {
  const double gamma = 1.0 / trace.alpha;
  const std::size_t n_modes = trace.n_modes();
  std::vector<double> wp(n_modes), wm(n_modes);
  for (std::size_t n = 0; n < n_modes; ++n) {
    wp[n] = std::pow(trace.lambdas[n], gamma);
    wm[n] = std::pow(trace.lambdas[n], -gamma);
  }
  trace.norms.assign(trace.times.size(), NormRecord{});
  for (std::size_t j = 0; j < trace.times.size(); ++j) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t n = 0; n < n_modes; ++n) {
      const double x = wp[n] * trace.u(j, n);
      const double y = trace.dtu(j, n);
      const double z = wm[n] * trace.dalpha(j, n);
      a += x * x;
      b += y * y;
      c += z * z;
    }
    trace.norms[j] = {std::sqrt(a), std::sqrt(b), std::sqrt(c)};
  }
}

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (std::size_t j = 0; j < m.rows(); ++j) {
    for (double v : m.row(j)) {
      if (!std::isfinite(v)) throw NumericFailure(std::string("non-finite ") + what, j);
    }
  }
}

}  // namespace

SolutionTrace solve_linear(const LinearProblem& p, const TimeGrid& grid, bool want_d2,
                           const MLPrecision& mp) {
  p.validate();
  const bool forced = p.forcing.kind != ForcingSpec::Kind::zero;
  if (forced) grid.require_dt("solve_linear with forcing");

  const std::size_t n_modes = p.n_modes();
  const std::size_t rows = grid.size();
  SolutionTrace tr;
  tr.alpha = p.alpha;
  tr.times = grid.times();
  tr.lambdas = p.op->eigenvalues(n_modes);
  tr.u = Matrix(rows, n_modes);
  tr.dtu = Matrix(rows, n_modes);
  tr.dalpha = Matrix(rows, n_modes);
  tr.forcing = p.forcing.sample(grid, n_modes);
  Matrix fprime;
  if (want_d2) {
    tr.d2u = Matrix(rows, n_modes);
    tr.d2u_row0_undefined = p.alpha < 2.0;
    if (forced) fprime = p.forcing.sample_derivative(grid, n_modes);
  }

  parallel_for(n_modes, [&](std::size_t n) {
    const double lambda = tr.lambdas[n];
    const ModeKernel mk = forced
        ? build_mode_kernel(p.alpha, lambda, *grid.dt(), grid.steps(), want_d2, mp)
        : build_mode_kernel_at(p.alpha, lambda, grid.times(), want_d2, mp);
    std::vector<double> fn, fpn;
    if (forced) {
      fn = tr.forcing.column(n);
      if (want_d2) fpn = fprime.column(n);
    }
    for (std::size_t j = 0; j < rows; ++j) {
      double u = p.u0[n] * mk.e1[j] + p.u1[n] * mk.te2[j];
      double dtu = -p.u0[n] * lambda * mk.k[j] + p.u1[n] * mk.e1[j];
      if (forced) {
        u += product_sum(mk.wA, mk.wB, fn, j);
        dtu += product_sum(mk.vA, mk.vB, fn, j);
      }
      tr.u(j, n) = u;
      tr.dtu(j, n) = dtu;
      tr.dalpha(j, n) = -lambda * u + tr.forcing(j, n);
      if (want_d2) {
        if (j == 0 && tr.d2u_row0_undefined) {
          (*tr.d2u)(j, n) = 0.0;
          continue;
        }
        double d2 = -p.u0[n] * lambda * mk.kp[j] - p.u1[n] * lambda * mk.k[j];
        if (forced) d2 += fn[0] * mk.kp[j] + product_sum(mk.vA, mk.vB, fpn, j);
        (*tr.d2u)(j, n) = d2;
      }
    }
  });

  check_finite(tr.u, "u");
  check_finite(tr.dtu, "dtu");
  check_finite(tr.dalpha, "dalpha");
  if (tr.d2u) check_finite(*tr.d2u, "d2u");

  if (want_d2 && p.alpha < 2.0) {
    // second derivatives need u0 in V_sigma for some sigma > 1/alpha; a heavy
    // spectral tail at sigma = (1/alpha + 1)/2 means the truncation hides that
    const double sigma = 0.5 * (1.0 / p.alpha + 1.0);
    double total = 0.0, tail = 0.0;
    for (std::size_t n = 0; n < n_modes; ++n) {
      const double v = std::pow(tr.lambdas[n], 2.0 * sigma) * p.u0[n] * p.u0[n];
      total += v;
      if (4 * n >= 3 * n_modes) tail += v;
    }
    if (n_modes >= 4 && total > 0.0 && tail > 0.1 * total) {
      tr.warnings.push_back(
          "u0 may not lie in V_sigma for sigma > 1/alpha: the last quarter of the modes carries " +
          std::to_string(static_cast<int>(100.0 * tail / total)) + "% of its V_sigma norm");
    }
  }

  fill_norms(tr);
  return tr;
}

StrongNormProbe strong_norm_probe(const SolutionTrace& trace) {
  if (trace.times.empty()) throw DomainError("strong_norm_probe: empty trace");
  StrongNormProbe pr;
  pr.times = trace.times;
  const std::size_t rows = trace.times.size();
  pr.dalpha_l2.resize(rows);
  pr.au_l2.resize(rows);
  pr.combined.resize(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    double a = 0.0, b = 0.0;
    for (std::size_t n = 0; n < trace.n_modes(); ++n) {
      const double d = trace.dalpha(j, n);
      const double au = trace.lambdas[n] * trace.u(j, n);
      a += d * d;
      b += au * au;
    }
    pr.dalpha_l2[j] = std::sqrt(a);
    pr.au_l2[j] = std::sqrt(b);
    pr.combined[j] = pr.dalpha_l2[j] + pr.au_l2[j];
  }
  if (trace.d2u && rows >= 2) {
    pr.d2_computed = true;
    std::vector<double> nrm(rows, 0.0);
    for (std::size_t j = 0; j < rows; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < trace.n_modes(); ++n) s += (*trace.d2u)(j, n) * (*trace.d2u)(j, n);
      nrm[j] = std::sqrt(s);
    }
    double integral = 0.0;
    if (trace.d2u_row0_undefined) {
      // ||d2u|| ~ c t^(a-2) on the first step
      integral += trace.times[1] * nrm[1] / (trace.alpha - 1.0);
    } else {
      integral += 0.5 * (trace.times[1] - trace.times[0]) * (nrm[0] + nrm[1]);
    }
    for (std::size_t j = 1; j + 1 < rows; ++j) {
      integral += 0.5 * (trace.times[j + 1] - trace.times[j]) * (nrm[j] + nrm[j + 1]);
    }
    pr.d2u_l1 = integral;
  }
  return pr;
}

}  // namespace mlwave
