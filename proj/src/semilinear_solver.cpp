#include "mlwave/semilinear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mlwave/errors.hpp"
#include "mlwave/parallel.hpp"

namespace mlwave {

std::string to_string(HypothesisClass::Kind k) {
  return k == HypothesisClass::Kind::hf1 ? "Hf1" : "Hf2";
}

std::string to_string(NonlinearitySpec::Kind k) {
  switch (k) {
    case NonlinearitySpec::Kind::zero: return "zero";
    case NonlinearitySpec::Kind::linear_shift: return "linear_shift";
    case NonlinearitySpec::Kind::power: return "power";
    case NonlinearitySpec::Kind::sine: return "sine";
    case NonlinearitySpec::Kind::custom_tabulated: return "custom_tabulated";
  }
  return "unknown";
}

NonlinearitySpec::Kind nonlinearity_kind_from_string(const std::string& s) {
  for (auto k : {NonlinearitySpec::Kind::zero, NonlinearitySpec::Kind::linear_shift,
                 NonlinearitySpec::Kind::power, NonlinearitySpec::Kind::sine,
                 NonlinearitySpec::Kind::custom_tabulated}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown nonlinearity '" + s + "'");
}

std::string to_string(RunOutcome::Status s) {
  return s == RunOutcome::Status::completed ? "completed" : "maximal_time_detected";
}

void NonlinearitySpec::validate() const {
  std::vector<std::string> errs;
  if (!std::isfinite(c)) errs.push_back("nonlinearity: coefficient must be finite");
  if (kind == Kind::power && !(r > 1.0 && std::isfinite(r))) {
    errs.push_back("nonlinearity: power exponent r must be finite and > 1");
  }
  if (kind == Kind::custom_tabulated) {
    if (table_s.size() < 2 || table_s.size() != table_f.size()) {
      errs.push_back("nonlinearity: table needs at least two (s, f) pairs of equal length");
    } else {
      bool has_zero = false;
      for (std::size_t i = 0; i < table_s.size(); ++i) {
        if (!std::isfinite(table_s[i]) || !std::isfinite(table_f[i])) {
          errs.push_back("nonlinearity: table entries must be finite");
          break;
        }
        if (i > 0 && !(table_s[i] > table_s[i - 1])) {
          errs.push_back("nonlinearity: table abscissae must increase strictly");
          break;
        }
        if (table_s[i] == 0.0) {
          has_zero = true;
          if (table_f[i] != 0.0) errs.push_back("nonlinearity: table must have f(0) = 0");
        }
      }
      if (!has_zero) errs.push_back("nonlinearity: table must contain s = 0");
    }
  }
  if (declared && declared->kind == HypothesisClass::Kind::hf1 &&
      !(declared->r > 1.0 && declared->C > 0.0 && std::isfinite(declared->r))) {
    errs.push_back("nonlinearity: Hf1 declaration needs r > 1 and C > 0");
  }
  if (!errs.empty()) throw ConfigError(errs);
}

double NonlinearitySpec::operator()(double s) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::linear_shift: return c * s;
    case Kind::power: return c * std::pow(std::abs(s), r - 1.0) * s;
    case Kind::sine: return c * std::sin(s);
    case Kind::custom_tabulated: {
      const std::size_t n = table_s.size();
      std::size_t i;
      if (s <= table_s[0]) {
        i = 0;
      } else if (s >= table_s[n - 1]) {
        i = n - 2;
      } else {
        i = static_cast<std::size_t>(std::upper_bound(table_s.begin(), table_s.end(), s) -
                                     table_s.begin()) - 1;
      }
      const double w = (s - table_s[i]) / (table_s[i + 1] - table_s[i]);
      return table_f[i] + w * (table_f[i + 1] - table_f[i]);
    }
  }
  return 0.0;
}

HypothesisClass NonlinearitySpec::hypothesis() const {
  if (kind == Kind::power) return {HypothesisClass::Kind::hf1, r, std::abs(c) * r};
  if (declared) return *declared;
  return {};
}

bool NonlinearitySpec::lipschitz() const {
  // the table extends linearly, so it is globally Lipschitz as well
  return kind != Kind::power;
}

double NonlinearitySpec::ball_sup(double R) const {
  if (!(R >= 0.0)) throw DomainError("ball_sup: radius must be >= 0");
  if (kind == Kind::zero) return 0.0;
  if (kind == Kind::power) return std::abs(c) * std::pow(R, r);
  constexpr int kGrid = 1024;
  double m = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double s = R * (2.0 * i / kGrid - 1.0);
    m = std::max(m, std::abs((*this)(s)));
  }
  if (!table_s.empty()) {
    for (double s : table_s) {
      if (std::abs(s) <= R) m = std::max(m, std::abs((*this)(s)));
    }
  }
  return m;
}

std::optional<std::string> admission_error(const NonlinearitySpec& f, const Regime& regime) {
  // below the critical order every locally Lipschitz f with f(0) = 0 is Hf2-admissible
  if (regime.subcritical) return std::nullopt;
  if (f.lipschitz()) return std::nullopt;
  const HypothesisClass h = f.hypothesis();
  if (h.kind != HypothesisClass::Kind::hf1) {
    return "this regime requires an Hf1 nonlinearity with r <= r*";
  }
  if (regime.r_star.admits(h.r)) return std::nullopt;
  std::ostringstream msg;
  msg << std::setprecision(10) << "growth exponent r = " << h.r << " exceeds r* = " << regime.r_star.r_star
      << " for this operator and alpha";
  return msg.str();
}

void PicardConfig::validate() const {
  std::vector<std::string> errs;
  if (!(R_star > 0.0)) errs.push_back("picard: R_star must be positive");
  if (!(tol > 0.0)) errs.push_back("picard: tol must be positive");
  if (max_iter < 1) errs.push_back("picard: max_iter must be >= 1");
  if (!(window_init > 0.0)) errs.push_back("picard: window_init must be positive");
  if (!(window_min > 0.0)) errs.push_back("picard: window_min must be positive");
  if (!(window_min < window_init)) errs.push_back("picard: window_min must be below window_init");
  if (!(blowup_threshold > 0.0)) errs.push_back("picard: blowup_threshold must be positive");
  if (!errs.empty()) throw ConfigError(errs);
}

void SemilinearProblem::validate() const {
  std::vector<std::string> errs;
  if (!op) errs.push_back("semilinear problem: operator missing");
  if (!(alpha > 1.0 && alpha < 2.0)) errs.push_back("semilinear problem: alpha must lie in (1, 2)");
  if (u0.empty()) errs.push_back("semilinear problem: N must be >= 1");
  if (u1.size() != u0.size()) errs.push_back("semilinear problem: u0 and u1 must have the same N");
  if (op && u0.size() > op->capacity()) errs.push_back("semilinear problem: N exceeds operator capacity");
  for (double v : u0) {
    if (!std::isfinite(v)) {
      errs.push_back("semilinear problem: u0 has non-finite coefficients");
      break;
    }
  }
  for (double v : u1) {
    if (!std::isfinite(v)) {
      errs.push_back("semilinear problem: u1 has non-finite coefficients");
      break;
    }
  }
  if (!errs.empty()) throw ConfigError(errs);
  f.validate();
}

// ---------------------------------------------------------------------------

bool apply_nonlinearity(const NonlinearitySpec& f, const SpectralTransform& tr,
                        std::span<const double> u, std::span<double> out,
                        std::vector<double>& scratch) {
  scratch.resize(tr.n_points());
  tr.to_physical(u, scratch);
  for (double& v : scratch) {
    v = f(v);
    if (!std::isfinite(v)) return false;
  }
  tr.to_spectral(scratch, out);
  for (double v : out) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

SpectralField apply_nonlinearity(const NonlinearitySpec& f, const SpectralField& u,
                                 std::size_t quad_points) {
  f.validate();
  if (f.kind == NonlinearitySpec::Kind::zero) return SpectralField::zero(u.op(), u.size());
  SpectralTransform tr(u.op(), u.size(), quad_points);
  std::vector<double> out(u.size()), scratch;
  if (!apply_nonlinearity(f, tr, u.coeffs(), out, scratch)) {
    throw OverflowError("nonlinearity produced non-finite values");
  }
  return SpectralField(u.op(), std::move(out));
}

// ---------------------------------------------------------------------------

SemilinearState::SemilinearState(SemilinearProblem p, TimeGrid grid, PicardConfig cfg,
                                 MLPrecision mp)
    : p_(std::move(p)), grid_(std::move(grid)), cfg_(cfg) {
  p_.validate();
  cfg_.validate();
  const double dt = grid_.require_dt("semilinear solver");
  const std::size_t n_modes = p_.n_modes();
  const std::size_t rows = grid_.size();
  quad_ = cfg_.nonlinearity_quadrature ? cfg_.nonlinearity_quadrature
                                       : std::max<std::size_t>(8 * n_modes, 64);
  if (quad_ < 4 * n_modes) {
    throw ConfigError("picard: nonlinearity_quadrature must be >= 4N (got " +
                      std::to_string(quad_) + ", N=" + std::to_string(n_modes) + ")");
  }
  lambdas_ = p_.op->eigenvalues(n_modes);
  wgamma_.resize(n_modes);
  for (std::size_t n = 0; n < n_modes; ++n) wgamma_[n] = std::pow(lambdas_[n], 1.0 / p_.alpha);
  kernels_.resize(n_modes);
  parallel_for(n_modes, [&](std::size_t n) {
    kernels_[n] = build_mode_kernel(p_.alpha, lambdas_[n], dt, grid_.steps(), false, mp);
  });
  if (p_.f.kind != NonlinearitySpec::Kind::zero) tr_.emplace(p_.op, n_modes, quad_);

  u = Matrix(rows, n_modes);
  dtu = Matrix(rows, n_modes);
  F = Matrix(rows, n_modes);
  for (std::size_t n = 0; n < n_modes; ++n) {
    u(0, n) = p_.u0[n];
    dtu(0, n) = p_.u1[n];
  }
  if (tr_) {
    std::vector<double> scratch;
    if (!apply_nonlinearity(p_.f, *tr_, u.row(0), F.row(0), scratch)) {
      throw NumericFailure("nonlinearity of the initial data is not finite", 0);
    }
  }
}

double SemilinearState::energy(std::size_t j) const {
  double a = 0.0, b = 0.0;
  for (std::size_t n = 0; n < wgamma_.size(); ++n) {
    const double x = wgamma_[n] * u(j, n);
    a += x * x;
    b += dtu(j, n) * dtu(j, n);
  }
  return std::sqrt(a) + std::sqrt(b);
}

std::optional<WindowRecord> picard_window(SemilinearState& st, std::size_t jb) {
  const std::size_t ja = st.done_;
  if (!(jb > ja && jb < st.grid_.size())) throw DomainError("picard_window: bad window end");
  const std::size_t len = jb - ja;
  const std::size_t n_modes = st.p_.n_modes();
  const auto& p = st.p_;

  // memory of [0, t_a]: intervals m >= j - ja in the product sums
  Matrix hu(len, n_modes), hv(len, n_modes);
  parallel_for(n_modes, [&](std::size_t n) {
    const ModeKernel& mk = st.kernels_[n];
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t j = ja + 1 + i;
      double su = 0.0, sv = 0.0;
      for (std::size_t m = j - ja; m < j; ++m) {
        su += mk.wA[m] * st.F(j - 1 - m, n) + mk.wB[m] * st.F(j - m, n);
        sv += mk.vA[m] * st.F(j - 1 - m, n) + mk.vB[m] * st.F(j - m, n);
      }
      hu(i, n) = su;
      hv(i, n) = sv;
    }
  });

  // initial guess: f frozen at its last known value
  for (std::size_t j = ja + 1; j <= jb; ++j) {
    for (std::size_t n = 0; n < n_modes; ++n) st.F(j, n) = st.F(ja, n);
  }

  Matrix prev_u, prev_v;
  double prev_d = 0.0, contraction = 0.0;
  std::vector<char> ok(len);

  auto phi = [&]() {
    parallel_for(n_modes, [&](std::size_t n) {
      const ModeKernel& mk = st.kernels_[n];
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t j = ja + 1 + i;
        double su = 0.0, sv = 0.0;
        for (std::size_t m = 0; m < j - ja; ++m) {
          su += mk.wA[m] * st.F(j - 1 - m, n) + mk.wB[m] * st.F(j - m, n);
          sv += mk.vA[m] * st.F(j - 1 - m, n) + mk.vB[m] * st.F(j - m, n);
        }
        st.u(j, n) = p.u0[n] * mk.e1[j] + p.u1[n] * mk.te2[j] + (su + hu(i, n));
        st.dtu(j, n) = -p.u0[n] * mk.lambda * mk.k[j] + p.u1[n] * mk.e1[j] + (sv + hv(i, n));
      }
    });
  };
  auto update_f = [&]() -> bool {
    if (!st.tr_) return true;
    parallel_for(len, [&](std::size_t i) {
      std::vector<double> scratch;
      ok[i] = apply_nonlinearity(p.f, *st.tr_, st.u.row(ja + 1 + i), st.F.row(ja + 1 + i), scratch);
    });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  };

  for (int k = 0; k <= st.cfg_.max_iter; ++k) {
    phi();
    double scale = 0.0;
    for (std::size_t j = ja + 1; j <= jb; ++j) {
      const double e = st.energy(j);
      if (!std::isfinite(e) || e > st.cfg_.R_star) return std::nullopt;
      scale = std::max(scale, e);
    }
    if (k > 0) {
      double d = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        double a = 0.0, b = 0.0;
        for (std::size_t n = 0; n < n_modes; ++n) {
          const double x = st.wgamma_[n] * (st.u(ja + 1 + i, n) - prev_u(i, n));
          const double y = st.dtu(ja + 1 + i, n) - prev_v(i, n);
          a += x * x;
          b += y * y;
        }
        d = std::max(d, std::sqrt(a) + std::sqrt(b));
      }
      contraction = k > 1 && prev_d > 0.0 ? d / prev_d : 0.0;
      prev_d = d;
      if (d <= st.cfg_.tol * (1.0 + scale)) {
        // make f consistent with the accepted iterate
        if (!update_f()) return std::nullopt;
        st.done_ = jb;
        return WindowRecord{st.grid_[ja], st.grid_[jb], k, contraction};
      }
    }
    prev_u = Matrix(len, n_modes);
    prev_v = Matrix(len, n_modes);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t n = 0; n < n_modes; ++n) {
        prev_u(i, n) = st.u(ja + 1 + i, n);
        prev_v(i, n) = st.dtu(ja + 1 + i, n);
      }
    }
    if (!update_f()) return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

SolutionTrace assemble_trace(const SemilinearState& st) {
  const std::size_t rows = st.done() + 1;
  const std::size_t n_modes = st.problem().n_modes();
  SolutionTrace tr;
  tr.alpha = st.problem().alpha;
  tr.times.assign(st.grid().times().begin(), st.grid().times().begin() + static_cast<long>(rows));
  tr.lambdas = st.problem().op->eigenvalues(n_modes);
  tr.u = Matrix(rows, n_modes);
  tr.dtu = Matrix(rows, n_modes);
  tr.dalpha = Matrix(rows, n_modes);
  tr.forcing = Matrix(rows, n_modes);
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t n = 0; n < n_modes; ++n) {
      tr.u(j, n) = st.u(j, n);
      tr.dtu(j, n) = st.dtu(j, n);
      tr.forcing(j, n) = st.F(j, n);
      tr.dalpha(j, n) = -tr.lambdas[n] * st.u(j, n) + st.F(j, n);
    }
  }
  fill_norms(tr);
  return tr;
}

}  // namespace

RunOutcome run_semilinear(const SemilinearProblem& p, const TimeGrid& grid,
                          const PicardConfig& cfg, const MLPrecision& mp) {
  p.validate();
  cfg.validate();
  RunOutcome out;
  out.regime = classify(*p.op, p.alpha);
  if (auto err = admission_error(p.f, out.regime)) throw ConfigError(*err);

  SemilinearState st(p, grid, cfg, mp);
  const double dt = *grid.dt();
  const std::size_t last = grid.steps();
  out.t_end = grid.back();

  const auto steps_of = [&](double w) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(w / dt + 1e-9)));
  };
  const std::size_t len_cap = steps_of(cfg.window_init);
  std::size_t len = len_cap;
  if (cfg.heuristic_window) {
    // contraction heuristic: 2 C w^(alpha-1) Q(R) <= R on a ball around the data
    const double c_est = ml_bound_probe(p.alpha, p.alpha, 1e4, 256, mp);
    const double R = std::min(cfg.R_star, 2.0 * st.energy(0) + 1.0);
    const double q = p.f.ball_sup(R);
    if (q > 0.0) {
      const double w = std::pow(R / (2.0 * c_est * q), 1.0 / (p.alpha - 1.0));
      len = std::min(len_cap, steps_of(w));
    }
  }

  while (st.done() < last) {
    const std::size_t ja = st.done();
    const std::size_t jb = std::min(ja + len, last);
    const auto rec = picard_window(st, jb);
    if (!rec) {
      const std::size_t half = len / 2;
      if (half < 1 || static_cast<double>(half) * dt < cfg.window_min) {
        out.status = RunOutcome::Status::maximal_time_detected;
        out.reason = "window collapsed below the minimum without a contraction";
        break;
      }
      len = half;
      continue;
    }
    out.windows.push_back(*rec);
    bool blown = false;
    for (std::size_t j = ja + 1; j <= jb; ++j) {
      if (st.energy(j) > cfg.blowup_threshold) blown = true;
    }
    if (blown) {
      out.status = RunOutcome::Status::maximal_time_detected;
      out.reason = "energy norm exceeded the blow-up threshold";
      break;
    }
    len = std::min(len_cap, std::max(len + 1, static_cast<std::size_t>(std::ceil(1.5 * len))));
  }
  out.t_est = grid[st.done()];
  out.trace = assemble_trace(st);
  return out;
}

// ---------------------------------------------------------------------------

StrongCheck strong_solution_check(const RunOutcome& out, const SemilinearProblem& p, double q,
                                  double r, std::size_t quad_points) {
  StrongCheck sc;
  if (out.regime.subcritical) {
    sc.strong = true;
    sc.verdict = "strong: below the critical order every weak solution is a strong energy solution";
    return sc;
  }
  if (out.trace.times.empty()) {
    sc.verdict = "not computed: no trace";
    return sc;
  }
  if (!(q > 1.0 && r > 1.0)) throw DomainError("strong_solution_check: q and r must exceed 1");
  const std::size_t n_modes = out.trace.n_modes();
  const std::size_t quad = quad_points ? quad_points : std::max<std::size_t>(8 * n_modes, 64);
  SpectralTransform tr(p.op, n_modes, quad);
  const std::size_t rows = out.trace.times.size();
  std::vector<double> sup(rows);
  parallel_for(rows, [&](std::size_t j) {
    std::vector<double> v(tr.n_points());
    tr.to_physical(out.trace.u.row(j), v);
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    sup[j] = m;
  });
  sc.computed = true;
  sc.exponent = q * (r - 1.0);
  double integral = 0.0;
  for (std::size_t j = 0; j + 1 < rows; ++j) {
    const double h = out.trace.times[j + 1] - out.trace.times[j];
    integral += 0.5 * h * (std::pow(sup[j], sc.exponent) + std::pow(sup[j + 1], sc.exponent));
  }
  sc.norm = std::pow(integral, 1.0 / sc.exponent);
  sc.finite = std::isfinite(sc.norm);
  sc.strong = sc.finite;
  sc.verdict = sc.finite ? "strong: the L^{q(r-1)}(0,T; L^inf) norm is finite"
                         : "undecided: the L^{q(r-1)}(0,T; L^inf) norm is not finite";
  return sc;
}

}  // namespace mlwave
