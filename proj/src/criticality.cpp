#include "mlwave/criticality.hpp"

#include <cmath>

#include "mlwave/errors.hpp"
#include "mlwave/io.hpp"

namespace mlwave {

double theta_A(ExtendedReal q_A) {
  if (q_A.is_infinite()) return 0.5;
  const double q = q_A.value();
  if (!(q > 1.0)) throw DomainError("theta_A: q_A must exceed 1");
  return q / (2.0 * (q - 1.0));
}

std::optional<double> alpha_0(ExtendedReal q_A) {
  if (q_A.is_infinite()) return 2.0;
  const double q = q_A.value();
  if (!(q > 1.0)) throw DomainError("alpha_0: q_A must exceed 1");
  if (q > 2.0) return 2.0 * (q - 1.0) / q;
  return std::nullopt;
}

bool GrowthExponent::admits(double r) const {
  if (!(r > 1.0) || !std::isfinite(r)) return false;
  if (kind == Kind::finite) return r <= r_star;
  return true;
}

std::string to_string(GrowthExponent::Kind k) {
  switch (k) {
    case GrowthExponent::Kind::finite: return "finite";
    case GrowthExponent::Kind::unbounded: return "unbounded";
    case GrowthExponent::Kind::any_finite: return "any_finite";
  }
  return "unknown";
}

namespace {

bool near(double a, double b) { return std::abs(a - b) <= kCriticalTol * std::abs(b); }

}  // namespace

GrowthExponent growth_exponent(double alpha, ExtendedReal q_A) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("growth_exponent: alpha must lie in (1, 2)");
  const auto a0 = alpha_0(q_A);
  if (a0) {
    if (near(alpha, *a0)) return {GrowthExponent::Kind::any_finite, 0.0};
    if (alpha < *a0) return {GrowthExponent::Kind::unbounded, 0.0};
  }
  const double ta = theta_A(q_A) * alpha;
  if (!(ta > 1.0)) {
    throw DomainError("growth_exponent: theta_A * alpha <= 1 where a finite exponent is required");
  }
  return {GrowthExponent::Kind::finite, ta / (ta - 1.0)};
}

Regime classify(ExtendedReal q_A, double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("classify: alpha must lie in (1, 2)");
  Regime r;
  r.q_A = q_A;
  r.theta_A = theta_A(q_A);
  r.alpha0 = alpha_0(q_A);
  r.regime_case = r.alpha0 ? RegimeCase::I : RegimeCase::II;
  r.r_star = growth_exponent(alpha, q_A);
  r.subcritical = r.r_star.kind == GrowthExponent::Kind::unbounded;
  r.gamma = 1.0 / alpha;
  r.p_range_sup = 1.0 / (2.0 - alpha);
  r.supercritical_range_empty = r.alpha0 && *r.alpha0 >= 2.0;
  return r;
}

Regime classify(const Operator& op, double alpha) { return classify(op.q_A(), alpha); }

std::string to_string(TableFamily f) {
  switch (f) {
    case TableFamily::laplacian: return "laplacian";
    case TableFamily::fractional_laplacian: return "fractional_laplacian";
    case TableFamily::wentzell_0: return "wentzell_0";
    case TableFamily::wentzell_1: return "wentzell_1";
    case TableFamily::dirichlet_to_neumann: return "dirichlet_to_neumann";
  }
  return "unknown";
}

TableFamily table_family_from_string(const std::string& s) {
  for (auto f : {TableFamily::laplacian, TableFamily::fractional_laplacian, TableFamily::wentzell_0,
                 TableFamily::wentzell_1, TableFamily::dirichlet_to_neumann}) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("unknown operator family '" + s + "'");
}

ExtendedReal table_q_A(TableFamily family, int d, double s, double q) {
  if (d < 1) throw DomainError("table_q_A: d must be >= 1");
  if (!(q > 1.0 && std::isfinite(q))) throw DomainError("table_q_A: q must be finite and > 1");
  const double dd = d;
  switch (family) {
    case TableFamily::laplacian:
    case TableFamily::wentzell_1:
      if (d == 1) return ExtendedReal::infinity();
      if (d == 2) return ExtendedReal::finite(q);
      return ExtendedReal::finite(dd / (dd - 2.0));
    case TableFamily::wentzell_0:
    case TableFamily::dirichlet_to_neumann:
      if (d == 1) return ExtendedReal::infinity();
      if (d == 2) return ExtendedReal::finite(q);
      return ExtendedReal::finite((dd - 1.0) / (dd - 2.0));
    case TableFamily::fractional_laplacian:
      if (!(s > 0.0 && s < 1.0)) throw DomainError("table_q_A: s must lie in (0, 1)");
      if (dd < 2.0 * s) return ExtendedReal::infinity();
      if (dd == 2.0 * s) return ExtendedReal::finite(q);
      return ExtendedReal::finite(dd / (dd - 2.0 * s));
  }
  throw DomainError("table_q_A: unknown family");
}

std::vector<TableRow> exponent_tables(double q, double s, int d_max) {
  std::vector<TableRow> rows;
  for (auto f : {TableFamily::laplacian, TableFamily::fractional_laplacian, TableFamily::wentzell_0,
                 TableFamily::wentzell_1, TableFamily::dirichlet_to_neumann}) {
    for (int d = 1; d <= d_max; ++d) {
      TableRow row;
      row.family = f;
      row.d = d;
      row.s = f == TableFamily::fractional_laplacian ? s : 1.0;
      row.q = q;
      row.q_A = table_q_A(f, d, s, q);
      row.alpha0 = alpha_0(row.q_A);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string exponent_tables_csv(const std::vector<TableRow>& rows) {
  std::string out = "family,d,s,q,q_A,alpha0\n";
  for (const auto& r : rows) {
    out += to_string(r.family) + "," + std::to_string(r.d) + "," + format_double(r.s) + "," +
           format_double(r.q) + "," + (r.q_A.is_infinite() ? "inf" : format_double(r.q_A.value())) +
           "," + (r.alpha0 ? format_double(*r.alpha0) : "none") + "\n";
  }
  return out;
}

}  // namespace mlwave
