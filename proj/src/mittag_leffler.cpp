#include "mlwave/mittag_leffler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "mlwave/errors.hpp"
#include "mlwave/gamma.hpp"
#include "mlwave/summation.hpp"

namespace mlwave {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;
constexpr double kLogMachEps = -36.043653389117154;  // log(2^-52)
constexpr double kTargetLogEps = -34.538776394910684;  // log(1e-15)

std::string fmt_args(double alpha, double beta, double x) {
  std::ostringstream os;
  os.precision(17);
  os << "(alpha=" << alpha << ", beta=" << beta << ", x=" << x << ")";
  return os.str();
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

// ---------------------------------------------------------------------------
// Optimal parabolic contour parameters. The contour is s(u) = mu (i u + 1)^2;
// it passes through the region between two consecutive singularities (ordered
// by phi(s) = (Re s + |s|) / 2), or to the right of the last one.

struct ContourParams {
  double mu = 0.0;
  double h = 0.0;
  double n = std::numeric_limits<double>::infinity();
};

ContourParams optimal_param_bounded(double phi_j, double phi_j1, double pj, double qj,
                                    double log_epsilon) {
  constexpr double fac = 1.01;
  const double f_max = std::exp(log_epsilon - kLogMachEps);
  const double sq_phi_j = std::sqrt(phi_j);
  const double threshold = 2.0 * std::sqrt(log_epsilon - kLogMachEps);
  const double sq_phi_j1 = std::min(std::sqrt(phi_j1), threshold - sq_phi_j);

  double sq_bar_j = sq_phi_j;
  double sq_bar_j1 = sq_phi_j1;
  double f_bar = 1.0;
  bool admissible = false;

  if (pj < 1e-14 && qj < 1e-14) {
    admissible = true;
  } else if (pj < 1e-14) {
    const double f_min = sq_phi_j > 0.0
                             ? fac * std::pow(sq_phi_j / (sq_phi_j1 - sq_phi_j), qj)
                             : fac;
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fq = std::pow(f_bar, -1.0 / qj);
      sq_bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
      admissible = true;
    }
  } else if (qj < 1e-14) {
    const double f_min = fac * std::pow(sq_phi_j1 / (sq_phi_j1 - sq_phi_j), pj);
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      sq_bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
      admissible = true;
    }
  } else {
    double f_min =
        fac * (sq_phi_j + sq_phi_j1) / std::pow(sq_phi_j1 - sq_phi_j, std::max(pj, qj));
    if (f_min < f_max) {
      f_min = std::max(f_min, 1.5);
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      const double fq = std::pow(f_bar, -1.0 / qj);
      const double w = -phi_j1 / log_epsilon;
      const double den = 2.0 + w - (1.0 + w) * fp + fq;
      sq_bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
      sq_bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
      admissible = true;
    }
  }
  if (!admissible) return {};

  const double log_eps = log_epsilon - std::log(f_bar);
  const double w = -sq_bar_j1 * sq_bar_j1 / log_eps;
  ContourParams out;
  const double m = ((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w);
  out.mu = m * m;
  out.h = -2.0 * kPi / log_eps * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
  out.n = std::ceil(std::sqrt(1.0 - log_eps / out.mu) / out.h);
  return out;
}

ContourParams optimal_param_unbounded(double phi_j, double pj, double log_epsilon) {
  const double sq_phi_j = std::sqrt(phi_j);
  double phibar_j = phi_j > 0.0 ? phi_j * 1.01 : 0.01;
  double sq_phibar_j = std::sqrt(phibar_j);
  constexpr double f_min = 1.0;
  constexpr double f_max = 10.0;
  constexpr double f_tar = 5.0;

  double n = 0.0;
  double a = 0.0;
  double sq_mu = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double phi_t = phibar_j;
    const double log_eps_phi_t = log_epsilon / phi_t;
    n = std::ceil(phi_t / kPi *
                  (1.0 - 1.5 * log_eps_phi_t + std::sqrt(1.0 - 2.0 * log_eps_phi_t)));
    a = kPi * n / phi_t;
    sq_mu = sq_phibar_j * std::abs(4.0 - a) / std::abs(7.0 - std::sqrt(1.0 + 12.0 * a));
    const double fbar = std::pow((sq_phibar_j - sq_phi_j) / sq_mu, -pj);
    if (pj < 1e-14 || (f_min < fbar && fbar < f_max)) break;
    sq_phibar_j = std::pow(f_tar, -1.0 / pj) * sq_mu + sq_phi_j;
    phibar_j = sq_phibar_j * sq_phibar_j;
  }

  ContourParams out;
  out.mu = sq_mu * sq_mu;
  out.h = (-3.0 * a - 2.0 + 2.0 * std::sqrt(1.0 + 12.0 * a)) / (4.0 - a) / n;
  out.n = n;

  // keep the contour where exp(s) does not amplify round-off beyond the target
  const double threshold = log_epsilon - kLogMachEps;
  if (out.mu > threshold) {
    const double q = std::abs(pj) < 1e-14 ? 0.0 : std::pow(f_tar, -1.0 / pj) * std::sqrt(out.mu);
    const double sq = q + std::sqrt(phi_j);
    phibar_j = sq * sq;
    if (phibar_j < threshold) {
      const double w = std::sqrt(kLogMachEps / (kLogMachEps - log_epsilon));
      const double u = std::sqrt(-phibar_j / kLogMachEps);
      out.mu = threshold;
      out.n = std::ceil(w * log_epsilon / 2.0 / kPi / (u * w - 1.0));
      out.h = std::sqrt(kLogMachEps / (kLogMachEps - log_epsilon)) / out.n;
    } else {
      out.n = std::numeric_limits<double>::infinity();
      out.h = 0.0;
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void MLPrecision::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw DomainError("MLPrecision: rel_tol must lie in (0, 1)");
  if (!(series_cutoff < asym_cutoff)) {
    throw DomainError("MLPrecision: series_cutoff must be below asym_cutoff");
  }
  if (max_terms < 1) throw DomainError("MLPrecision: max_terms must be >= 1");
}

void MLQuery::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("Mittag-Leffler: alpha must lie in (0, 2] " + fmt_args(alpha, beta, x));
  }
  if (!std::isfinite(beta)) throw DomainError("Mittag-Leffler: beta must be finite");
  if (!std::isfinite(x)) throw DomainError("Mittag-Leffler: x must be finite");
}

namespace ml_regime {

std::optional<double> taylor(double alpha, double beta, double x, int max_terms) {
  if (x == 0.0) return rgamma(beta);
  const double ax = std::abs(x);
  const double log_ax = std::log(ax);
  NeumaierSum sum;
  double xn = 1.0;  // x^n by repeated multiplication
  int quiet = 0;
  for (int n = 0; n < max_terms; ++n) {
    const double arg = alpha * n + beta;
    double term;
    if (arg < 170.0 && std::isfinite(xn)) {
      term = xn * rgamma(arg);
    } else {
      const double sign = (x < 0.0 && (n % 2 == 1)) ? -1.0 : 1.0;
      term = sign * std::exp(n * log_ax - log_abs_gamma(arg));
    }
    sum.add(term);
    xn *= x;
    const bool past_peak = std::pow(alpha * (n + 1), alpha) > 2.0 * ax;
    if (past_peak && std::abs(term) <= 1e-17 * std::abs(sum.value())) {
      if (++quiet >= 2) return sum.value();
    } else {
      quiet = 0;
    }
    if (!std::isfinite(sum.value())) return sum.value();
  }
  return std::nullopt;
}

std::optional<double> asymptotic(double alpha, double beta, double y, double rel_tol,
                                 int max_terms) {
  double exp_part = 0.0;
  if (alpha > 1.0) {
    // the conjugate pair of poles s = y^(1/alpha) exp(+-i pi/alpha)
    const cplx s = std::polar(std::pow(y, 1.0 / alpha), kPi / alpha);
    exp_part = 2.0 / alpha * std::real(std::pow(s, 1.0 - beta) * std::exp(s));
  }

  const double log_y = std::log(y);
  const bool integer_grid = is_integer(alpha) && is_integer(beta);
  NeumaierSum sum;
  // Truncation is steered by a sine-free envelope of |term|: the terms
  // themselves can be accidentally tiny next to a pole of Gamma.
  double last_env = std::numeric_limits<double>::infinity();
  double err = 0.0;
  bool truncated = false;
  for (int k = 1; k <= max_terms; ++k) {
    const double z = beta - alpha * k;
    const int sg = gamma_sign(z);
    if (sg == 0 && integer_grid) break;  // every further term sits on a pole too
    // |1/Gamma(z)| <= Gamma(1 - z) / pi for z <= 0
    const double log_env = z > 0.0 ? -log_abs_gamma(z) : log_abs_gamma(1.0 - z) - std::log(kPi);
    const double env = std::exp(log_env - k * log_y);
    if (env >= last_env) {
      err = env;
      truncated = true;
      break;
    }
    last_env = env;
    if (sg != 0) {
      // term = -(-y)^(-k) / Gamma(z)
      const double sign = ((k % 2 == 0) ? -1.0 : 1.0) * sg;
      sum.add(sign * std::exp(-k * log_y - log_abs_gamma(z)));
    }
    if (env < 1e-18 * std::abs(sum.value() + exp_part)) {
      err = env;
      truncated = true;
      break;
    }
  }
  if (!truncated && !integer_grid) return std::nullopt;
  const double value = exp_part + sum.value();
  if (!(err <= 0.1 * rel_tol * std::abs(value))) return std::nullopt;
  return value;
}

void contour_multi(double alpha, std::span<const double> betas, std::complex<double> z,
                   std::span<std::complex<double>> out) {
  if (std::abs(z) < 1e-15) {
    for (std::size_t b = 0; b < betas.size(); ++b) out[b] = rgamma(betas[b]);
    return;
  }

  // poles s^alpha = z of the Laplace transform, on the principal sheet
  const double theta = std::arg(z);
  const double abs_root = std::pow(std::abs(z), 1.0 / alpha);
  const int kmin = static_cast<int>(std::ceil(-alpha / 2.0 - theta / (2.0 * kPi)));
  const int kmax = static_cast<int>(std::floor(alpha / 2.0 - theta / (2.0 * kPi)));

  struct Singularity {
    cplx s;
    double phi;
  };
  std::vector<Singularity> sing;
  for (int k = kmin; k <= kmax; ++k) {
    const cplx s = std::polar(abs_root, (theta + 2.0 * kPi * k) / alpha);
    const double phi = 0.5 * (s.real() + std::abs(s));
    if (phi > 1e-15) sing.push_back({s, phi});
  }
  std::stable_sort(sing.begin(), sing.end(),
                   [](const Singularity& a, const Singularity& b) { return a.phi < b.phi; });
  sing.insert(sing.begin(), Singularity{cplx(0.0, 0.0), 0.0});

  const std::size_t j1 = sing.size();
  std::vector<double> phi(j1 + 1);
  for (std::size_t j = 0; j < j1; ++j) phi[j] = sing[j].phi;
  phi[j1] = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> admissible;
  for (std::size_t j = 0; j < j1; ++j) {
    if (phi[j] < (kTargetLogEps - kLogMachEps) && phi[j] < phi[j + 1]) admissible.push_back(j);
  }

  // Only the singularity strength at the origin depends on beta, so values of
  // beta sharing it share the whole quadrature.
  std::vector<bool> done(betas.size(), false);
  for (std::size_t b0 = 0; b0 < betas.size(); ++b0) {
    if (done[b0]) continue;
    const double p0 = std::max(0.0, -2.0 * (alpha - betas[b0] + 1.0));
    std::vector<std::size_t> group;
    for (std::size_t b = b0; b < betas.size(); ++b) {
      if (!done[b] && std::max(0.0, -2.0 * (alpha - betas[b] + 1.0)) == p0) {
        group.push_back(b);
        done[b] = true;
      }
    }

    std::vector<double> p(j1, 1.0);
    std::vector<double> q(j1, 1.0);
    p[0] = p0;
    q[j1 - 1] = std::numeric_limits<double>::infinity();

    double log_epsilon = kTargetLogEps;
    ContourParams best;
    std::size_t best_region = 0;
    for (int relax = 0; relax < 10; ++relax) {
      best = ContourParams{};
      for (std::size_t j : admissible) {
        const ContourParams cp =
            (j + 1 < j1) ? optimal_param_bounded(phi[j], phi[j + 1], p[j], q[j], log_epsilon)
                         : optimal_param_unbounded(phi[j], p[j], log_epsilon);
        if (cp.n < best.n) {
          best = cp;
          best_region = j;
        }
      }
      if (best.n <= 200.0) break;
      log_epsilon += std::log(10.0);
    }
    if (!std::isfinite(best.n)) {
      throw AccuracyError("Mittag-Leffler contour: no admissible integration region");
    }

    const int n = static_cast<int>(best.n);
    const double log_mu = std::log(best.mu);
    std::vector<cplx> acc(group.size(), cplx(0.0, 0.0));
    std::vector<cplx> comp(group.size(), cplx(0.0, 0.0));
    for (int k = -n; k <= n; ++k) {
      const double u = best.h * k;
      const cplx w(1.0, u);
      const cplx zk = best.mu * w * w;
      const cplx log_zk = log_mu + 2.0 * std::log(w);
      const cplx zd(-2.0 * best.mu * u, 2.0 * best.mu);
      const cplx common = std::exp(zk) * zd / (std::exp(alpha * log_zk) - z);
      for (std::size_t g = 0; g < group.size(); ++g) {
        // Kahan compensation, component-wise
        const cplx term = common * std::exp((alpha - betas[group[g]]) * log_zk) - comp[g];
        const cplx next = acc[g] + term;
        comp[g] = (next - acc[g]) - term;
        acc[g] = next;
      }
    }
    for (std::size_t g = 0; g < group.size(); ++g) {
      const double beta = betas[group[g]];
      cplx result = best.h * acc[g] / (2.0 * kPi * cplx(0.0, 1.0));
      for (std::size_t j = best_region + 1; j < j1; ++j) {
        const cplx s = sing[j].s;
        result += std::pow(s, 1.0 - beta) * std::exp(s) / alpha;
      }
      out[group[g]] = result;
    }
  }
}

std::complex<double> contour(double alpha, double beta, std::complex<double> z) {
  cplx out;
  contour_multi(alpha, std::span<const double>(&beta, 1), z, std::span<cplx>(&out, 1));
  return out;
}

double duplicated(double alpha, double beta, double y) {
  return std::real(contour(0.5 * alpha, beta, cplx(0.0, std::sqrt(y))));
}

}  // namespace ml_regime

double ml_e(const MLQuery& q, const MLPrecision& p) {
  double out = 0.0;
  ml_e_multi(q.alpha, std::span<const double>(&q.beta, 1), q.x, std::span<double>(&out, 1), p);
  return out;
}

void ml_e_multi(double alpha, std::span<const double> betas, double x, std::span<double> out,
                const MLPrecision& p) {
  for (double beta : betas) MLQuery{alpha, beta, x}.validate();
  p.validate();

  auto finite_or_throw = [&](double v, double beta) {
    if (!std::isfinite(v)) {
      throw OverflowError("Mittag-Leffler: value not representable " + fmt_args(alpha, beta, x));
    }
    return v;
  };

  const double y = -x;
  std::vector<double> rest_beta;
  std::vector<std::size_t> rest_index;
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const double beta = betas[b];
    // E_{1,1-m}(x) = x^m e^x
    if (alpha == 1.0 && is_integer(beta) && beta <= 1.0) {
      out[b] = finite_or_throw(std::pow(x, 1.0 - beta) * std::exp(x), beta);
      continue;
    }
    if (x == 0.0) {
      out[b] = rgamma(beta);
      continue;
    }
    if (x > 0.0) {
      if (auto v = ml_regime::taylor(alpha, beta, x, p.max_terms)) {
        out[b] = finite_or_throw(*v, beta);
      } else {
        out[b] = finite_or_throw(std::real(ml_regime::contour(alpha, beta, cplx(x, 0.0))), beta);
      }
      continue;
    }
    if (y <= p.series_cutoff) {
      if (auto v = ml_regime::taylor(alpha, beta, x, p.max_terms)) {
        out[b] = finite_or_throw(*v, beta);
        continue;
      }
    }
    if (y >= p.asym_cutoff) {
      if (auto v = ml_regime::asymptotic(alpha, beta, y, p.rel_tol, p.max_terms)) {
        out[b] = finite_or_throw(*v, beta);
        continue;
      }
    }
    rest_beta.push_back(beta);
    rest_index.push_back(b);
  }
  if (rest_beta.empty()) return;

  std::vector<cplx> vals(rest_beta.size());
  if (alpha > 1.0) {
    // E_{alpha,beta}(-y) = Re E_{alpha/2,beta}(i sqrt(y))
    ml_regime::contour_multi(0.5 * alpha, rest_beta, cplx(0.0, std::sqrt(y)), vals);
  } else {
    ml_regime::contour_multi(alpha, rest_beta, cplx(x, 0.0), vals);
  }
  for (std::size_t i = 0; i < rest_beta.size(); ++i) {
    out[rest_index[i]] = finite_or_throw(std::real(vals[i]), rest_beta[i]);
  }
}

double ml_bound_probe(double alpha, double beta, double x_max, int n_grid, const MLPrecision& p) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("ml_bound_probe: alpha must lie in (0, 2)");
  if (!(x_max > 0.0)) throw DomainError("ml_bound_probe: x_max must be positive");
  if (n_grid < 2) throw DomainError("ml_bound_probe: n_grid must be >= 2");
  const double span = std::log1p(x_max);
  double sup = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const double x = (i == n_grid - 1) ? x_max : std::expm1(span * i / (n_grid - 1));
    sup = std::max(sup, (1.0 + x) * std::abs(ml_e(alpha, beta, -x, p)));
  }
  return sup;
}

IdentityResiduals ml_identity_residuals(double alpha, double lambda, double t, double h,
                                        const MLPrecision& p) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw DomainError("ml_identity_residuals: alpha must lie in (1, 2]");
  }
  if (!(lambda > 0.0)) throw DomainError("ml_identity_residuals: lambda must be positive");
  if (!(h > 0.0)) throw DomainError("ml_identity_residuals: h must be positive");
  if (!(t > h)) throw DomainError("ml_identity_residuals: step h must be smaller than t");

  auto arg = [&](double s) { return -lambda * std::pow(s, alpha); };
  const double tp = t + h;
  const double tm = t - h;

  const double d1 = (ml_e(alpha, 1.0, arg(tp), p) - ml_e(alpha, 1.0, arg(tm), p)) / (2.0 * h);
  const double r1 = -lambda * std::pow(t, alpha - 1.0) * ml_e(alpha, alpha, arg(t), p);

  const double d2 =
      (tp * ml_e(alpha, 2.0, arg(tp), p) - tm * ml_e(alpha, 2.0, arg(tm), p)) / (2.0 * h);
  const double r2 = ml_e(alpha, 1.0, arg(t), p);

  const double d3 = (std::pow(tp, alpha - 1.0) * ml_e(alpha, alpha, arg(tp), p) -
                     std::pow(tm, alpha - 1.0) * ml_e(alpha, alpha, arg(tm), p)) /
                    (2.0 * h);
  const double r3 = std::pow(t, alpha - 2.0) * ml_e(alpha, alpha - 1.0, arg(t), p);

  return {std::abs(d1 - r1), std::abs(d2 - r2), std::abs(d3 - r3)};
}

double kernel_moment(double alpha, double lambda, double h, int k, const MLPrecision& p) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("kernel_moment: alpha must lie in (1, 2]");
  if (!(lambda >= 0.0)) throw DomainError("kernel_moment: lambda must be >= 0");
  if (!(h > 0.0)) throw DomainError("kernel_moment: h must be positive");
  if (k != 0 && k != 1) throw DomainError("kernel_moment: k must be 0 or 1");

  const double y = lambda * std::pow(h, alpha);
  if (k == 0) return std::pow(h, alpha) * ml_e(alpha, alpha + 1.0, -y, p);

  const double scale = std::pow(h, alpha + 1.0);
  if (y <= p.series_cutoff) {
    // sum_n (-y)^n / ((alpha n + alpha + 1) Gamma(alpha n + alpha))
    NeumaierSum sum;
    double yn = 1.0;
    for (int n = 0; n < p.max_terms; ++n) {
      const double a = alpha * n + alpha;
      const double term = yn * rgamma(a) / (a + 1.0);
      sum.add(term);
      yn *= -y;
      if (std::abs(term) <= 0.1 * p.rel_tol * std::abs(sum.value()) && std::pow(a, alpha) > y) {
        return scale * sum.value();
      }
    }
    throw AccuracyError("kernel_moment: series did not converge within max_terms");
  }
  // int_0^h s P'(s) ds = h P(h) - int_0^h P, with P(s) = s^a E_{a,a+1}(-l s^a)
  return scale * (ml_e(alpha, alpha + 1.0, -y, p) - ml_e(alpha, alpha + 2.0, -y, p));
}

}  // namespace mlwave
