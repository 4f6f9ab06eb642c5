#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlwave/linear_solver.hpp"
#include "mlwave/semilinear_solver.hpp"

namespace mlwave {

/// Initial data or a spatial forcing profile, given by name, inline
/// coefficients or a coefficient CSV file.
///   named: "zero", "phi<k>" (scale * phi_k), "parabola" (scale * prod x_i (L_i - x_i)),
///          "power_law" (c_n = scale * n^-exponent)
struct InitialData {
  enum class Kind { named, coeffs, file };
  Kind kind = Kind::named;
  std::string name = "zero";
  double scale = 1.0;
  double exponent = 1.0;
  std::vector<double> coeffs;
  std::string file;  // absolute once parsed

  std::vector<double> resolve(const OperatorPtr& op, std::size_t n) const;
  bool operator==(const InitialData&) const = default;
};

struct ForcingConfig {
  enum class Kind { zero, separable };
  Kind kind = Kind::zero;
  InitialData g;
  TimeFunction h;

  bool operator==(const ForcingConfig&) const = default;
};

struct Scenario {
  double alpha = 1.5;
  OperatorSpecConfig op;
  std::size_t n_modes = 8;
  InitialData u0, u1;
  ForcingConfig forcing;
  std::optional<NonlinearitySpec> nonlinearity;
  double t_end = 1.0;
  double dt = 0.01;
  PicardConfig picard;
  double strong_q = 2.0;  // dual time exponent for the strong-solution check
  double strong_r = 2.0;  // growth exponent used there; the Hf1 r when declared
  std::string output = "out";

  bool operator==(const Scenario&) const = default;
};

struct ParseOptions {
  bool allow_limit = false;  // admit alpha = 2
  std::string base_dir;      // relative file paths resolve against it
};

/// Parses a JSON scenario. Unknown keys and every invariant violation are
/// collected into a single ConfigError.
Scenario parse_scenario(const std::string& text, const ParseOptions& opt = {});
Scenario load_scenario(const std::string& path, const ParseOptions& opt = {});

/// The scenario with every default spelled out; parsing it gives back an
/// equal Scenario.
std::string echo_scenario(const Scenario& s);

TimeGrid scenario_grid(const Scenario& s);
LinearProblem make_linear_problem(const Scenario& s);
SemilinearProblem make_semilinear_problem(const Scenario& s);

/// t, then u_1..u_N, dtu_1..dtu_N, dalpha_1..dalpha_N.
std::string trace_csv(const SolutionTrace& tr);
/// t, norm_Vgamma_u, norm_L2_dtu, norm_Vminusgamma_dalpha.
std::string norms_csv(const SolutionTrace& tr);

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;
  bool passed() const;
  std::string json() const;
};

/// Suites: ml, linear, semilinear, rates, convergence.
VerifyReport run_verify_suite(const std::string& suite);
const std::vector<std::string>& verify_suites();

/// Command-line entry point; returns the process exit code:
/// 0 success, 1 configuration or domain error, 2 numeric failure,
/// 3 verification failure.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mlwave
