#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mlwave {

/// A real number or +infinity, kept apart so that infinity never leaks into
/// arithmetic as a sentinel.
class ExtendedReal {
 public:
  static ExtendedReal infinity() { return ExtendedReal(0.0, true); }
  static ExtendedReal finite(double v) { return ExtendedReal(v, false); }

  bool is_infinite() const { return infinite_; }
  /// Finite value; +inf as a double when infinite.
  double value() const;

  bool operator==(const ExtendedReal& o) const {
    return infinite_ == o.infinite_ && (infinite_ || value_ == o.value_);
  }

 private:
  ExtendedReal(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

enum class OperatorKind {
  dirichlet_laplacian_interval,
  dirichlet_laplacian_box,
  neumann_laplacian_shifted,
  spectral_fractional_power,
};

std::string to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

struct OperatorSpecConfig {
  OperatorKind kind = OperatorKind::dirichlet_laplacian_interval;
  std::vector<double> lengths{3.141592653589793};
  double shift = 1.0;   // Neumann variant
  double power = 0.5;   // fractional power s
  OperatorKind base = OperatorKind::dirichlet_laplacian_interval;  // fractional power only
  double q = 4.0;       // embedding exponent where any finite q is allowed
  std::size_t mode_capacity = 1024;

  void validate() const;
  int dim() const { return static_cast<int>(lengths.size()); }
  bool operator==(const OperatorSpecConfig&) const = default;
};

/// Closed-form eigen-decomposition on the box prod_i (0, L_i). Modes are
/// 1-based, sorted by eigenvalue with ties broken by lexicographic multi-index.
class Operator {
 public:
  explicit Operator(const OperatorSpecConfig& cfg);

  const std::string& name() const { return name_; }
  const OperatorSpecConfig& config() const { return cfg_; }
  int dim() const { return cfg_.dim(); }
  const std::vector<double>& lengths() const { return cfg_.lengths; }
  std::size_t capacity() const { return modes_.size(); }
  ExtendedReal q_A() const { return q_A_; }

  double eigenvalue(std::size_t n) const;
  std::vector<double> eigenvalues(std::size_t count) const;
  double eigenfunction(std::size_t n, std::span<const double> x) const;
  const std::vector<int>& multi_index(std::size_t n) const;

  /// One-dimensional factor of the eigenfunctions along `axis`.
  double factor(int axis, int k, double x) const;
  bool in_domain(std::span<const double> x) const;

 private:
  struct Mode {
    std::vector<int> k;
    double lambda;
  };
  const Mode& mode(std::size_t n) const;

  OperatorSpecConfig cfg_;
  std::string name_;
  bool cosine_;  // Neumann factors
  ExtendedReal q_A_ = ExtendedReal::infinity();
  std::vector<Mode> modes_;
};

using OperatorPtr = std::shared_ptr<const Operator>;

OperatorPtr make_operator(const OperatorSpecConfig& cfg);

/// Sobolev exponent of the embedding V_{1/2} -> L^{2 q_A}.
ExtendedReal q_A_of(const OperatorSpecConfig& cfg);

/// Coefficients c_1..c_N against a fixed operator.
class SpectralField {
 public:
  SpectralField(OperatorPtr op, std::vector<double> coeffs);
  static SpectralField zero(OperatorPtr op, std::size_t n);
  /// scale * phi_index (1-based).
  static SpectralField unit(OperatorPtr op, std::size_t n, std::size_t index, double scale = 1.0);

  const OperatorPtr& op() const { return op_; }
  std::size_t size() const { return coeffs_.size(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double operator[](std::size_t i) const { return coeffs_[i]; }

 private:
  OperatorPtr op_;
  std::vector<double> coeffs_;
};

using SpatialFunction = std::function<double(std::span<const double>)>;

struct Projection {
  SpectralField field;
  /// max |c_n(fine) - c_n(coarse)| with the coarse rule using half the panels.
  double aliasing_estimate = 0.0;
  bool under_resolved = false;
  std::string warning;
};

/// c_n = int_X g phi_n by composite Gauss-Legendre (8-point panels) with at
/// least quad_points nodes per axis.
Projection project(const OperatorPtr& op, const SpatialFunction& g, std::size_t n,
                   std::size_t quad_points, double alias_tol = 1e-8);

/// Exact coefficients of sum_j scale_j phi_{index_j}.
SpectralField project_exact(const OperatorPtr& op,
                            const std::vector<std::pair<std::size_t, double>>& terms,
                            std::size_t n);

double evaluate(const SpectralField& f, std::span<const double> x);
inline double evaluate(const SpectralField& f, double x) {
  return evaluate(f, std::span<const double>(&x, 1));
}

/// (sum lambda_n^(2 theta) c_n^2)^(1/2), theta in [-1, 1].
double frac_norm(const SpectralField& f, double theta);
double frac_norm(const Operator& op, std::span<const double> coeffs, double theta);

/// Tensor-product quadrature grid with the eigenfunction table, used for the
/// pseudo-spectral round trip coefficients -> point values -> coefficients.
class SpectralTransform {
 public:
  SpectralTransform(OperatorPtr op, std::size_t n_modes, std::size_t quad_points);

  std::size_t n_modes() const { return n_modes_; }
  std::size_t n_points() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  /// Coordinates of point p, dim() values.
  std::span<const double> point(std::size_t p) const;

  void to_physical(std::span<const double> coeffs, std::span<double> values) const;
  void to_spectral(std::span<const double> values, std::span<double> coeffs) const;

 private:
  OperatorPtr op_;
  std::size_t n_modes_;
  int dim_;
  std::vector<double> points_;   // n_points x dim
  std::vector<double> weights_;
  std::vector<double> phi_;      // n_points x n_modes
};

/// Composite Gauss-Legendre rule on (0, L) with ceil(min_points / 8) panels.
void gauss_legendre_composite(double length, std::size_t min_points, std::vector<double>& nodes,
                              std::vector<double>& weights);

void write_coefficients_csv(const std::string& path, std::span<const double> coeffs);
std::vector<double> read_coefficients_csv(const std::string& path);

}  // namespace mlwave
