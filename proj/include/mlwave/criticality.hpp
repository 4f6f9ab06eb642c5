#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlwave/spectral_operator.hpp"

namespace mlwave {

/// theta_A = q_A / (2 (q_A - 1)); 1/2 for q_A = infinity.
double theta_A(ExtendedReal q_A);

/// 2 (q_A - 1) / q_A when q_A > 2, otherwise no critical value.
std::optional<double> alpha_0(ExtendedReal q_A);

/// Admissible polynomial growth of the nonlinearity.
struct GrowthExponent {
  enum class Kind {
    finite,        // r <= r_star
    unbounded,     // no growth restriction (Hf2 regime)
    any_finite,    // exactly critical: every finite r > 1 is admitted
  };
  Kind kind = Kind::unbounded;
  double r_star = 0.0;  // meaningful for Kind::finite only

  bool admits(double r) const;
};

std::string to_string(GrowthExponent::Kind k);

/// Relative tolerance used to decide alpha == alpha_0.
inline constexpr double kCriticalTol = 1e-12;

GrowthExponent growth_exponent(double alpha, ExtendedReal q_A);

enum class RegimeCase { I, II };

struct Regime {
  RegimeCase regime_case = RegimeCase::I;
  bool subcritical = false;
  std::optional<double> alpha0;
  double theta_A = 0.5;
  GrowthExponent r_star;
  double gamma = 0.0;
  double p_range_sup = 0.0;
  ExtendedReal q_A = ExtendedReal::infinity();
  /// Case I with alpha_0 = 2: the interval [alpha_0, 2) is empty.
  bool supercritical_range_empty = false;
};

Regime classify(ExtendedReal q_A, double alpha);
Regime classify(const Operator& op, double alpha);

/// Operator families with tabulated critical exponents.
enum class TableFamily {
  laplacian,             // Dirichlet/Neumann Laplacian on a d-dimensional domain
  fractional_laplacian,  // spectral power L^s
  wentzell_0,            // Wentzell Laplacian, delta = 0
  wentzell_1,            // Wentzell Laplacian, delta = 1
  dirichlet_to_neumann,
};

std::string to_string(TableFamily f);
TableFamily table_family_from_string(const std::string& s);

/// q_A of a family in dimension d. `q` is used where any finite q is allowed.
ExtendedReal table_q_A(TableFamily family, int d, double s, double q);

struct TableRow {
  TableFamily family;
  int d = 1;
  double s = 1.0;
  double q = 4.0;
  ExtendedReal q_A = ExtendedReal::infinity();
  std::optional<double> alpha0;
};

/// Every family for d = 1..d_max (fractional Laplacian: with the given s).
std::vector<TableRow> exponent_tables(double q = 4.0, double s = 0.75, int d_max = 5);

/// CSV with header family,d,s,q,q_A,alpha0 ("inf" and "none" for the markers).
std::string exponent_tables_csv(const std::vector<TableRow>& rows);

}  // namespace mlwave
