#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mlwave/matrix.hpp"
#include "mlwave/mittag_leffler.hpp"
#include "mlwave/spectral_operator.hpp"

namespace mlwave {

/// Time grid starting at 0. Uniform grids remember their step.
class TimeGrid {
 public:
  static TimeGrid uniform(double t_end, double dt);
  /// Strictly increasing points starting at 0; treated as non-uniform.
  static TimeGrid from_points(std::vector<double> t);

  const std::vector<double>& times() const { return t_; }
  std::size_t size() const { return t_.size(); }
  std::size_t steps() const { return t_.size() - 1; }
  double operator[](std::size_t j) const { return t_[j]; }
  double back() const { return t_.back(); }
  std::optional<double> dt() const { return dt_; }
  double require_dt(const char* who) const;

 private:
  std::vector<double> t_;
  std::optional<double> dt_;
};

/// Named time profiles for separable forcing.
struct TimeFunction {
  enum class Kind { constant, polynomial, sinusoid, exponential_decay };
  Kind kind = Kind::constant;
  /// constant {c}; polynomial {a0, a1, ...}; sinusoid {A, omega, phase} for
  /// A sin(omega t + phase); exponential_decay {A, k} for A exp(-k t).
  std::vector<double> params{1.0};

  void validate() const;
  double value(double t) const;
  double derivative(double t) const;
  bool operator==(const TimeFunction&) const = default;
};

std::string to_string(TimeFunction::Kind k);
TimeFunction::Kind time_function_kind_from_string(const std::string& s);

struct ForcingSpec {
  enum class Kind { zero, separable, tabulated };
  Kind kind = Kind::zero;
  std::vector<double> g;                // separable: spatial coefficients
  std::optional<TimeFunction> h;        // separable: named profile ...
  std::vector<double> h_samples;        // ... or its samples on the solve grid
  Matrix table;                         // tabulated: (steps + 1) x N on the solve grid

  /// f_n(t_j), (grid.size() x n_modes).
  Matrix sample(const TimeGrid& grid, std::size_t n_modes) const;
  /// d/dt f_n(t_j): analytic for named profiles, second-order differences otherwise.
  Matrix sample_derivative(const TimeGrid& grid, std::size_t n_modes) const;
};

struct LinearProblem {
  OperatorPtr op;
  double alpha = 1.5;
  std::vector<double> u0;
  std::vector<double> u1;
  ForcingSpec forcing;

  std::size_t n_modes() const { return u0.size(); }
  void validate() const;
};

struct NormRecord {
  double vgamma_u = 0.0;            // ||u||_{V_gamma}
  double l2_dtu = 0.0;              // ||d_t u||_{L^2}
  double vminusgamma_dalpha = 0.0;  // ||D^alpha u||_{V_{-gamma}}
};

struct SolutionTrace {
  double alpha = 0.0;
  std::vector<double> times;
  std::vector<double> lambdas;
  Matrix u, dtu, dalpha;
  Matrix forcing;                   // f_n(t_j) used in dalpha
  std::optional<Matrix> d2u;
  /// d2u at t = 0 is unbounded for alpha < 2; row 0 then holds 0.
  bool d2u_row0_undefined = false;
  std::vector<NormRecord> norms;
  std::vector<std::string> warnings;

  std::size_t n_modes() const { return lambdas.size(); }
};

/// Per-mode kernel tables on a uniform grid t_j = j dt, j = 0..steps.
///   e1  = E_{a,1}(-l t^a)            te2 = t E_{a,2}(-l t^a)
///   k   = t^(a-1) E_{a,a}(-l t^a)    kp  = t^(a-2) E_{a,a-1}(-l t^a)  (j >= 1)
/// Product-integration weights for piecewise-linear data, interval m = 0..steps-1:
///   int_0^{t_j} f(s) k(t_j - s) ds  ~  sum_m wA[m] f_{j-1-m} + wB[m] f_{j-m}
///   int_0^{t_j} f(s) k'(t_j - s) ds ~  sum_m vA[m] f_{j-1-m} + vB[m] f_{j-m}
struct ModeKernel {
  double lambda = 0.0;
  std::vector<double> e1, te2, k, kp;
  std::vector<double> wA, wB, vA, vB;
};

ModeKernel build_mode_kernel(double alpha, double lambda, double dt, std::size_t steps,
                             bool want_kp, const MLPrecision& p = {});

/// Homogeneous propagators only, at arbitrary times.
ModeKernel build_mode_kernel_at(double alpha, double lambda, const std::vector<double>& times,
                                bool want_kp, const MLPrecision& p = {});

/// sum_{m=0}^{j-1} a[m] f[j-1-m] + b[m] f[j-m], ascending m.
double product_sum(const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<double>& f, std::size_t j);

struct HomogeneousState {
  std::vector<double> u;
  std::vector<double> dtu;
};

HomogeneousState homogeneous_state(const LinearProblem& p, double t, const MLPrecision& mp = {});

struct ForcingConvolution {
  Matrix s3;   // int f(tau) (t - tau)^(a-1) E_{a,a}(-l (t - tau)^a) dtau
  Matrix s3p;  // its time derivative
};

ForcingConvolution convolve_forcing(const LinearProblem& p, const TimeGrid& grid,
                                    const MLPrecision& mp = {});

SolutionTrace solve_linear(const LinearProblem& p, const TimeGrid& grid, bool want_d2,
                           const MLPrecision& mp = {});

/// Fills trace.norms from u, dtu, dalpha with gamma = 1/alpha.
void fill_norms(SolutionTrace& trace);

struct StrongNormProbe {
  std::vector<double> times;
  std::vector<double> dalpha_l2;   // ||D^alpha u(t)||_{L^2}
  std::vector<double> au_l2;       // ||A u(t)||_{L^2}
  std::vector<double> combined;    // sum of the two
  bool d2_computed = false;
  double d2u_l1 = 0.0;             // int_0^T ||d_t^2 u||_{L^2} dt when computed
};

StrongNormProbe strong_norm_probe(const SolutionTrace& trace);

}  // namespace mlwave
