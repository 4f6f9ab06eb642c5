#include "mlwave/spectral_operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "mlwave/errors.hpp"
#include "mlwave/io.hpp"

namespace mlwave {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_laplacian_base(OperatorKind k) { return k != OperatorKind::spectral_fractional_power; }

}  // namespace

double ExtendedReal::value() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : value_;
}

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::dirichlet_laplacian_interval: return "dirichlet_laplacian_interval";
    case OperatorKind::dirichlet_laplacian_box: return "dirichlet_laplacian_box";
    case OperatorKind::neumann_laplacian_shifted: return "neumann_laplacian_shifted";
    case OperatorKind::spectral_fractional_power: return "spectral_fractional_power";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  for (auto k : {OperatorKind::dirichlet_laplacian_interval, OperatorKind::dirichlet_laplacian_box,
                 OperatorKind::neumann_laplacian_shifted, OperatorKind::spectral_fractional_power}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unsupported operator kind '" + s + "'");
}

void OperatorSpecConfig::validate() const {
  std::vector<std::string> errs;
  if (lengths.empty()) errs.push_back("operator: lengths must not be empty");
  for (double l : lengths) {
    if (!(l > 0.0 && std::isfinite(l))) errs.push_back("operator: lengths must be positive");
  }
  const OperatorKind geometry = kind == OperatorKind::spectral_fractional_power ? base : kind;
  if (kind == OperatorKind::spectral_fractional_power) {
    if (!is_laplacian_base(base)) errs.push_back("operator: base of a fractional power must be a Laplacian");
    if (!(power > 0.0 && power < 1.0)) errs.push_back("operator: power s must lie in (0, 1)");
  }
  if (geometry == OperatorKind::dirichlet_laplacian_interval && lengths.size() != 1) {
    errs.push_back("operator: the interval needs exactly one length");
  }
  if (geometry == OperatorKind::neumann_laplacian_shifted && !(shift > 0.0)) {
    errs.push_back("operator: shift must be positive for the Neumann variant");
  }
  if (!(q > 1.0 && std::isfinite(q))) errs.push_back("operator: q must be a finite number > 1");
  if (mode_capacity < 1) errs.push_back("operator: mode_capacity must be >= 1");
  if (!errs.empty()) throw ConfigError(errs);
}

ExtendedReal q_A_of(const OperatorSpecConfig& cfg) {
  const double d = cfg.dim();
  const double two_s = cfg.kind == OperatorKind::spectral_fractional_power ? 2.0 * cfg.power : 2.0;
  if (d < two_s) return ExtendedReal::infinity();
  if (d == two_s) return ExtendedReal::finite(cfg.q);
  return ExtendedReal::finite(d / (d - two_s));
}

Operator::Operator(const OperatorSpecConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const OperatorKind geometry =
      cfg_.kind == OperatorKind::spectral_fractional_power ? cfg_.base : cfg_.kind;
  cosine_ = geometry == OperatorKind::neumann_laplacian_shifted;
  name_ = to_string(cfg_.kind);
  q_A_ = q_A_of(cfg_);

  const int d = cfg_.dim();
  const int kmin = cosine_ ? 0 : 1;
  const double shift = cosine_ ? cfg_.shift : 0.0;
  const std::size_t cap = cfg_.mode_capacity;

  auto base_lambda = [&](const std::vector<int>& k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double w = k[i] * kPi / cfg_.lengths[i];
      s += w * w;
    }
    return s;
  };

  if (d == 1) {
    modes_.reserve(cap);
    for (std::size_t n = 0; n < cap; ++n) {
      std::vector<int> k{kmin + static_cast<int>(n)};
      modes_.push_back({k, base_lambda(k)});
    }
  } else {
    // collect every multi-index under a growing bound B until there are enough
    double bound = 0.0;
    for (int i = 0; i < d; ++i) bound += std::pow(kPi / cfg_.lengths[i], 2);
    std::vector<Mode> all;
    for (;;) {
      all.clear();
      std::vector<int> kmax(d);
      for (int i = 0; i < d; ++i) {
        kmax[i] = static_cast<int>(std::floor(std::sqrt(bound) * cfg_.lengths[i] / kPi));
      }
      std::vector<int> k(d, kmin);
      bool done = false;
      while (!done) {
        const double lam = base_lambda(k);
        if (lam <= bound) all.push_back({k, lam});
        int axis = d - 1;
        while (axis >= 0) {
          if (++k[axis] <= kmax[axis]) break;
          k[axis] = kmin;
          --axis;
        }
        done = axis < 0;
      }
      if (all.size() >= cap) break;
      bound *= 2.0;
    }
    std::sort(all.begin(), all.end(), [](const Mode& a, const Mode& b) {
      if (a.lambda != b.lambda) return a.lambda < b.lambda;
      return a.k < b.k;
    });
    all.resize(cap);
    modes_ = std::move(all);
  }

  for (auto& m : modes_) {
    m.lambda += shift;
    if (cfg_.kind == OperatorKind::spectral_fractional_power) m.lambda = std::pow(m.lambda, cfg_.power);
  }
}

const Operator::Mode& Operator::mode(std::size_t n) const {
  if (n < 1 || n > modes_.size()) {
    throw DomainError("mode index " + std::to_string(n) + " outside 1.." +
                      std::to_string(modes_.size()));
  }
  return modes_[n - 1];
}

double Operator::eigenvalue(std::size_t n) const { return mode(n).lambda; }

std::vector<double> Operator::eigenvalues(std::size_t count) const {
  std::vector<double> out(count);
  for (std::size_t n = 1; n <= count; ++n) out[n - 1] = eigenvalue(n);
  return out;
}

const std::vector<int>& Operator::multi_index(std::size_t n) const { return mode(n).k; }

double Operator::factor(int axis, int k, double x) const {
  const double len = cfg_.lengths[axis];
  if (cosine_) {
    if (k == 0) return 1.0 / std::sqrt(len);
    return std::sqrt(2.0 / len) * std::cos(k * kPi * x / len);
  }
  return std::sqrt(2.0 / len) * std::sin(k * kPi * x / len);
}

bool Operator::in_domain(std::span<const double> x) const {
  if (x.size() != cfg_.lengths.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= cfg_.lengths[i])) return false;
  }
  return true;
}

double Operator::eigenfunction(std::size_t n, std::span<const double> x) const {
  if (!in_domain(x)) throw DomainError("point outside the operator's domain");
  const auto& k = mode(n).k;
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= factor(i, k[i], x[i]);
  return v;
}

OperatorPtr make_operator(const OperatorSpecConfig& cfg) { return std::make_shared<const Operator>(cfg); }

// ---------------------------------------------------------------------------

SpectralField::SpectralField(OperatorPtr op, std::vector<double> coeffs)
    : op_(std::move(op)), coeffs_(std::move(coeffs)) {
  if (!op_) throw DomainError("SpectralField: operator is null");
  if (coeffs_.empty()) throw DomainError("SpectralField: N must be >= 1");
  if (coeffs_.size() > op_->capacity()) throw DomainError("SpectralField: N exceeds operator capacity");
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw DomainError("SpectralField: non-finite coefficient");
  }
}

SpectralField SpectralField::zero(OperatorPtr op, std::size_t n) {
  return SpectralField(std::move(op), std::vector<double>(n, 0.0));
}

SpectralField SpectralField::unit(OperatorPtr op, std::size_t n, std::size_t index, double scale) {
  if (index < 1 || index > n) throw DomainError("SpectralField: unit index outside 1..N");
  std::vector<double> c(n, 0.0);
  c[index - 1] = scale;
  return SpectralField(std::move(op), std::move(c));
}

void gauss_legendre_composite(double length, std::size_t min_points, std::vector<double>& nodes,
                              std::vector<double>& weights) {
  using rule = boost::math::quadrature::gauss<double, 8>;
  const auto& absc = rule::abscissa();
  const auto& wts = rule::weights();
  const std::size_t panels = std::max<std::size_t>(1, (min_points + 7) / 8);
  const double h = length / static_cast<double>(panels);
  nodes.clear();
  weights.clear();
  nodes.reserve(panels * 8);
  weights.reserve(panels * 8);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    // ascending order within the panel
    for (std::size_t i = absc.size(); i-- > 0;) {
      nodes.push_back(mid - 0.5 * h * absc[i]);
      weights.push_back(0.5 * h * wts[i]);
    }
    for (std::size_t i = 0; i < absc.size(); ++i) {
      nodes.push_back(mid + 0.5 * h * absc[i]);
      weights.push_back(0.5 * h * wts[i]);
    }
  }
}

SpectralTransform::SpectralTransform(OperatorPtr op, std::size_t n_modes, std::size_t quad_points)
    : op_(std::move(op)), n_modes_(n_modes) {
  if (!op_) throw DomainError("SpectralTransform: operator is null");
  if (n_modes < 1 || n_modes > op_->capacity()) throw DomainError("SpectralTransform: bad mode count");
  if (quad_points < 4 * n_modes) {
    throw DomainError("quad_points must be >= 4N (got " + std::to_string(quad_points) + ", N=" +
                      std::to_string(n_modes) + ")");
  }
  dim_ = op_->dim();
  std::vector<std::vector<double>> ax_nodes(dim_), ax_weights(dim_);
  for (int i = 0; i < dim_; ++i) {
    gauss_legendre_composite(op_->lengths()[i], quad_points, ax_nodes[i], ax_weights[i]);
  }

  // per-axis factor tables
  std::vector<std::vector<int>> idx(n_modes);
  for (std::size_t n = 0; n < n_modes; ++n) idx[n] = op_->multi_index(n + 1);

  std::size_t total = 1;
  for (int i = 0; i < dim_; ++i) total *= ax_nodes[i].size();
  points_.resize(total * dim_);
  weights_.resize(total);
  phi_.resize(total * n_modes);

  std::vector<std::size_t> j(dim_, 0);
  for (std::size_t p = 0; p < total; ++p) {
    double w = 1.0;
    for (int i = 0; i < dim_; ++i) {
      points_[p * dim_ + i] = ax_nodes[i][j[i]];
      w *= ax_weights[i][j[i]];
    }
    weights_[p] = w;
    for (std::size_t n = 0; n < n_modes; ++n) {
      double v = 1.0;
      for (int i = 0; i < dim_; ++i) v *= op_->factor(i, idx[n][i], ax_nodes[i][j[i]]);
      phi_[p * n_modes + n] = v;
    }
    for (int i = dim_ - 1; i >= 0; --i) {
      if (++j[i] < ax_nodes[i].size()) break;
      j[i] = 0;
    }
  }
}

std::span<const double> SpectralTransform::point(std::size_t p) const {
  return std::span<const double>(points_.data() + p * dim_, dim_);
}

void SpectralTransform::to_physical(std::span<const double> coeffs, std::span<double> values) const {
  const std::size_t np = n_points();
  for (std::size_t p = 0; p < np; ++p) {
    const double* row = phi_.data() + p * n_modes_;
    double s = 0.0;
    for (std::size_t n = 0; n < n_modes_; ++n) s += coeffs[n] * row[n];
    values[p] = s;
  }
}

void SpectralTransform::to_spectral(std::span<const double> values, std::span<double> coeffs) const {
  std::fill(coeffs.begin(), coeffs.begin() + n_modes_, 0.0);
  const std::size_t np = n_points();
  for (std::size_t p = 0; p < np; ++p) {
    const double wv = weights_[p] * values[p];
    const double* row = phi_.data() + p * n_modes_;
    for (std::size_t n = 0; n < n_modes_; ++n) coeffs[n] += wv * row[n];
  }
}

namespace {

std::vector<double> project_with(const OperatorPtr& op, const SpatialFunction& g, std::size_t n,
                                 std::size_t quad_points) {
  SpectralTransform tr(op, n, std::max(quad_points, 4 * n));
  std::vector<double> vals(tr.n_points());
  for (std::size_t p = 0; p < vals.size(); ++p) vals[p] = g(tr.point(p));
  std::vector<double> c(n);
  tr.to_spectral(vals, c);
  return c;
}

}  // namespace

Projection project(const OperatorPtr& op, const SpatialFunction& g, std::size_t n,
                   std::size_t quad_points, double alias_tol) {
  if (n < 1) throw DomainError("project: N must be >= 1");
  if (quad_points < 4 * n) {
    throw DomainError("project: quad_points must be >= 4N (got " + std::to_string(quad_points) +
                      ", N=" + std::to_string(n) + ")");
  }
  std::vector<double> fine = project_with(op, g, n, quad_points);
  for (double c : fine) {
    if (!std::isfinite(c)) throw DomainError("project: function produced non-finite values");
  }
  // coarse rule with half the panels; it may sit below the 4N floor on purpose
  std::vector<double> coarse;
  {
    const std::size_t panels = std::max<std::size_t>(1, (quad_points + 7) / 8);
    const std::size_t coarse_pts = 8 * std::max<std::size_t>(1, panels / 2);
    std::vector<std::vector<double>> nodes(op->dim()), wts(op->dim());
    for (int i = 0; i < op->dim(); ++i) {
      gauss_legendre_composite(op->lengths()[i], coarse_pts, nodes[i], wts[i]);
    }
    coarse.assign(n, 0.0);
    std::vector<std::size_t> j(op->dim(), 0);
    std::vector<double> x(op->dim());
    std::size_t total = 1;
    for (const auto& v : nodes) total *= v.size();
    for (std::size_t p = 0; p < total; ++p) {
      double w = 1.0;
      for (int i = 0; i < op->dim(); ++i) {
        x[i] = nodes[i][j[i]];
        w *= wts[i][j[i]];
      }
      const double gv = g(x);
      for (std::size_t m = 0; m < n; ++m) coarse[m] += w * gv * op->eigenfunction(m + 1, x);
      for (int i = op->dim() - 1; i >= 0; --i) {
        if (++j[i] < nodes[i].size()) break;
        j[i] = 0;
      }
    }
  }
  double alias = 0.0;
  double scale = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    alias = std::max(alias, std::abs(fine[m] - coarse[m]));
    scale = std::max(scale, std::abs(fine[m]));
  }
  Projection out{SpectralField(op, std::move(fine)), alias, false, {}};
  if (alias > alias_tol * std::max(1.0, scale)) {
    out.under_resolved = true;
    out.warning = "projection may be under-resolved: coarse/fine coefficient gap " + format_double(alias);
  }
  return out;
}

SpectralField project_exact(const OperatorPtr& op,
                            const std::vector<std::pair<std::size_t, double>>& terms,
                            std::size_t n) {
  std::vector<double> c(n, 0.0);
  for (const auto& [idx, scale] : terms) {
    if (idx < 1 || idx > n) throw DomainError("project_exact: index outside 1..N");
    c[idx - 1] += scale;
  }
  return SpectralField(op, std::move(c));
}

double evaluate(const SpectralField& f, std::span<const double> x) {
  const Operator& op = *f.op();
  if (!op.in_domain(x)) throw DomainError("evaluate: point outside the domain");
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += f[n] * op.eigenfunction(n + 1, x);
  return s;
}

double frac_norm(const Operator& op, std::span<const double> coeffs, double theta) {
  if (!(theta >= -1.0 && theta <= 1.0)) throw DomainError("frac_norm: theta must lie in [-1, 1]");
  double s = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    const double w = theta == 0.0 ? 1.0 : std::pow(op.eigenvalue(n + 1), theta);
    const double v = w * coeffs[n];
    s += v * v;
  }
  return std::sqrt(s);
}

double frac_norm(const SpectralField& f, double theta) { return frac_norm(*f.op(), f.coeffs(), theta); }

void write_coefficients_csv(const std::string& path, std::span<const double> coeffs) {
  std::string s = "n,c_n\n";
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    s += std::to_string(n + 1) + "," + format_double(coeffs[n]) + "\n";
  }
  atomic_write(path, s);
}

std::vector<double> read_coefficients_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open coefficient file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("coefficient file '" + path + "' is empty");
  std::vector<double> c;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'n,c_n'");
    }
    std::size_t n = 0;
    double v = 0.0;
    try {
      n = std::stoul(line.substr(0, comma));
      v = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unreadable number");
    }
    if (n != c.size() + 1) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": indices must run 1, 2, 3, ...");
    }
    c.push_back(v);
  }
  if (c.empty()) throw ConfigError("coefficient file '" + path + "' has no rows");
  return c;
}

}  // namespace mlwave
