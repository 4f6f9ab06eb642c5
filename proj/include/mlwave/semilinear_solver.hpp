#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mlwave/criticality.hpp"
#include "mlwave/linear_solver.hpp"
#include "mlwave/spectral_operator.hpp"

namespace mlwave {

/// Declared hypothesis class of a nonlinearity.
struct HypothesisClass {
  enum class Kind { hf1, hf2 };
  Kind kind = Kind::hf2;
  double r = 0.0;  // hf1 only
  double C = 0.0;  // hf1 only

  bool operator==(const HypothesisClass&) const = default;
};

std::string to_string(HypothesisClass::Kind k);

/// Pointwise nonlinearity f(u) with f(0) = 0.
struct NonlinearitySpec {
  enum class Kind { zero, linear_shift, power, sine, custom_tabulated };
  Kind kind = Kind::zero;
  double c = 1.0;  // kappa for linear_shift, amplitude for power and sine
  double r = 3.0;  // power exponent
  /// custom_tabulated: increasing abscissae containing 0 and values with f(0) = 0;
  /// linear interpolation inside, linear extrapolation from the end segments.
  std::vector<double> table_s, table_f;
  /// Required for custom_tabulated; derived for catalog kinds.
  std::optional<HypothesisClass> declared;

  void validate() const;
  double operator()(double s) const;
  HypothesisClass hypothesis() const;
  /// Globally Lipschitz, hence Hf1 for every r > 1.
  bool lipschitz() const;
  /// sup_{|s| <= R} |f(s)|, evaluated on a grid over the ball.
  double ball_sup(double R) const;

  bool operator==(const NonlinearitySpec&) const = default;
};

std::string to_string(NonlinearitySpec::Kind k);
NonlinearitySpec::Kind nonlinearity_kind_from_string(const std::string& s);

/// Empty when f is admissible for the regime, otherwise the reason.
std::optional<std::string> admission_error(const NonlinearitySpec& f, const Regime& regime);

struct PicardConfig {
  double R_star = 1e9;             // trust radius for the iterates' energy norm
  double tol = 1e-10;              // relative to 1 + energy norm
  int max_iter = 50;
  double window_init = 0.25;
  double window_min = 1e-6;
  double blowup_threshold = 1e8;
  std::size_t nonlinearity_quadrature = 0;  // 0: max(8N, 64) points per axis
  /// Scale the first window by the contraction heuristic; off keeps window_init.
  bool heuristic_window = true;

  void validate() const;
  bool operator==(const PicardConfig&) const = default;
};

struct SemilinearProblem {
  OperatorPtr op;
  double alpha = 1.5;
  std::vector<double> u0;
  std::vector<double> u1;
  NonlinearitySpec f;

  std::size_t n_modes() const { return u0.size(); }
  void validate() const;
};

/// Pseudo-spectral (f(u), phi_n): collocate, apply, project.
SpectralField apply_nonlinearity(const NonlinearitySpec& f, const SpectralField& u,
                                 std::size_t quad_points);
/// Same on a prebuilt transform; returns false if a point value is not finite.
bool apply_nonlinearity(const NonlinearitySpec& f, const SpectralTransform& tr,
                        std::span<const double> u, std::span<double> out,
                        std::vector<double>& scratch);

struct WindowRecord {
  double start = 0.0;
  double end = 0.0;
  int iterations = 0;
  double contraction = 0.0;  // last d_k / d_{k-1}; 0 after a one-step fixed point
};

struct RunOutcome {
  enum class Status { completed, maximal_time_detected };
  Status status = Status::completed;
  double t_end = 0.0;  // requested horizon
  double t_est = 0.0;  // last completed time when a maximal time was detected
  std::string reason;
  std::vector<WindowRecord> windows;
  SolutionTrace trace;  // dalpha and forcing use f(u)
  Regime regime;
  std::vector<std::string> warnings;
};

std::string to_string(RunOutcome::Status s);

/// Marches Picard windows over the uniform grid. Regime admission is checked
/// first; violations throw ConfigError before any marching.
RunOutcome run_semilinear(const SemilinearProblem& p, const TimeGrid& grid,
                          const PicardConfig& cfg, const MLPrecision& mp = {});

/// Global-grid state shared by the windows: kernel tables, the spatial
/// transform and the solution computed so far (rows 0..done).
class SemilinearState {
 public:
  SemilinearState(SemilinearProblem p, TimeGrid grid, PicardConfig cfg, MLPrecision mp = {});

  const SemilinearProblem& problem() const { return p_; }
  const TimeGrid& grid() const { return grid_; }
  const PicardConfig& config() const { return cfg_; }
  std::size_t done() const { return done_; }
  std::size_t quad_points() const { return quad_; }

  /// ||u(t_j)||_{V_gamma} + ||d_t u(t_j)||_{L^2}
  double energy(std::size_t j) const;

  Matrix u, dtu, F;  // (grid nodes) x N; rows beyond done() are scratch

 private:
  friend std::optional<WindowRecord> picard_window(SemilinearState&, std::size_t);
  SemilinearProblem p_;
  TimeGrid grid_;
  PicardConfig cfg_;
  std::size_t quad_ = 0;
  std::size_t done_ = 0;
  std::vector<double> lambdas_, wgamma_;
  std::vector<ModeKernel> kernels_;
  std::optional<SpectralTransform> tr_;
};

/// Solves nodes done()+1..jb by Picard iteration, history integrals over
/// [0, t_done] computed once. On success the rows are committed and the window
/// record returned; nullopt means the window failed (no convergence within
/// max_iter, non-finite values, or trust-radius breach) and nothing changed.
std::optional<WindowRecord> picard_window(SemilinearState& st, std::size_t jb);

struct StrongCheck {
  bool computed = false;
  double exponent = 0.0;  // q (r - 1)
  double norm = 0.0;      // discrete L^{q(r-1)}((0,T); L^inf(X))
  bool finite = false;
  bool strong = false;
  std::string verdict;
};

/// q is the dual time exponent, r the Hf1 growth exponent.
StrongCheck strong_solution_check(const RunOutcome& out, const SemilinearProblem& p, double q,
                                  double r, std::size_t quad_points = 0);

}  // namespace mlwave
