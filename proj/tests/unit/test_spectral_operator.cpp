#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "mlwave/errors.hpp"
#include "mlwave/io.hpp"
#include "mlwave/spectral_operator.hpp"

using namespace mlwave;

namespace {

OperatorPtr interval_pi() { return make_operator({}); }

OperatorSpecConfig box_pi() {
  OperatorSpecConfig c;
  c.kind = OperatorKind::dirichlet_laplacian_box;
  c.lengths = {M_PI, M_PI};
  return c;
}

std::vector<OperatorSpecConfig> catalog() {
  std::vector<OperatorSpecConfig> out;
  out.push_back({});
  OperatorSpecConfig c;
  c.lengths = {2.5};
  out.push_back(c);
  out.push_back(box_pi());
  c = box_pi();
  c.lengths = {1.0, 2.0, 1.5};
  out.push_back(c);
  c = {};
  c.kind = OperatorKind::neumann_laplacian_shifted;
  c.shift = 0.5;
  out.push_back(c);
  c = {};
  c.kind = OperatorKind::spectral_fractional_power;
  c.power = 0.75;
  out.push_back(c);
  c.base = OperatorKind::dirichlet_laplacian_box;
  c.lengths = {1.0, 1.0};
  out.push_back(c);
  return out;
}

}  // namespace

TEST_CASE("interval eigenpairs") {
  auto op = interval_pi();
  CHECK(op->eigenvalue(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(op->eigenvalue(2) == doctest::Approx(4.0).epsilon(1e-15));
  const double x = M_PI / 2.0;
  CHECK(op->eigenfunction(1, std::span<const double>(&x, 1)) ==
        doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-15));
  CHECK(op->q_A().is_infinite());
}

TEST_CASE("box spectrum with lexicographic ties") {
  auto op = make_operator(box_pi());
  CHECK(op->eigenvalue(1) == doctest::Approx(2.0));
  CHECK(op->eigenvalue(2) == doctest::Approx(5.0));
  CHECK(op->eigenvalue(3) == doctest::Approx(5.0));
  CHECK(op->eigenvalue(4) == doctest::Approx(8.0));
  CHECK(op->multi_index(2) == std::vector<int>{1, 2});
  CHECK(op->multi_index(3) == std::vector<int>{2, 1});
  const auto lam = op->eigenvalues(op->capacity());
  for (std::size_t i = 1; i < lam.size(); ++i) CHECK(lam[i] >= lam[i - 1]);
  CHECK(op->q_A() == ExtendedReal::finite(4.0));
}

TEST_CASE("fractional power and shifted Neumann") {
  OperatorSpecConfig c;
  c.kind = OperatorKind::spectral_fractional_power;
  c.power = 0.5;
  auto op = make_operator(c);
  CHECK(op->eigenvalue(2) == doctest::Approx(2.0).epsilon(1e-15));

  c = {};
  c.kind = OperatorKind::neumann_laplacian_shifted;
  c.shift = 0.25;
  op = make_operator(c);
  CHECK(op->eigenvalue(1) == doctest::Approx(0.25));
  CHECK(op->eigenvalue(3) == doctest::Approx(4.25));
  const double x = 0.3;
  CHECK(op->eigenfunction(1, std::span<const double>(&x, 1)) ==
        doctest::Approx(1.0 / std::sqrt(M_PI)));
}

TEST_CASE("q_A catalog") {
  OperatorSpecConfig c;
  c.kind = OperatorKind::dirichlet_laplacian_box;
  c.lengths = {1.0, 1.0, 1.0};
  CHECK(q_A_of(c) == ExtendedReal::finite(3.0));
  c.lengths = {1.0, 1.0};
  c.q = 7.0;
  CHECK(q_A_of(c) == ExtendedReal::finite(7.0));

  c = {};
  c.kind = OperatorKind::spectral_fractional_power;
  c.base = OperatorKind::dirichlet_laplacian_box;
  c.power = 0.75;
  c.lengths = {1.0, 1.0};
  CHECK(q_A_of(c).value() == doctest::Approx(4.0).epsilon(1e-14));
  c.lengths = {1.0};
  CHECK(q_A_of(c).is_infinite());
  c.power = 0.5;
  c.q = 5.0;
  CHECK(q_A_of(c) == ExtendedReal::finite(5.0));
}

TEST_CASE("invalid configs") {
  OperatorSpecConfig c;
  c.lengths = {-1.0};
  CHECK_THROWS_AS(make_operator(c), ConfigError);
  c = {};
  c.kind = OperatorKind::neumann_laplacian_shifted;
  c.shift = 0.0;
  CHECK_THROWS_AS(make_operator(c), ConfigError);
  c = {};
  c.kind = OperatorKind::spectral_fractional_power;
  c.power = 1.0;
  CHECK_THROWS_AS(make_operator(c), ConfigError);
  CHECK_THROWS_AS(operator_kind_from_string("robin"), ConfigError);
}

TEST_CASE("Gram matrix is the identity for every catalog operator") {
  for (const auto& cfg : catalog()) {
    auto op = make_operator(cfg);
    const std::size_t n = 12;
    SpectralTransform tr(op, n, 8 * n);
    std::vector<std::vector<double>> phi(n, std::vector<double>(tr.n_points()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < tr.n_points(); ++p) phi[i][p] = op->eigenfunction(i + 1, tr.point(p));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double g = 0.0;
        for (std::size_t p = 0; p < tr.n_points(); ++p) g += tr.weights()[p] * phi[i][p] * phi[j][p];
        worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
      }
    }
    INFO(op->name());
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("project") {
  auto op = interval_pi();
  auto pr = project(op, [](std::span<const double> x) { return std::sin(2.0 * x[0]); }, 4, 64);
  CHECK(std::abs(pr.field[0]) < 1e-14);
  CHECK(pr.field[1] == doctest::Approx(1.2533141373155).epsilon(1e-13));
  CHECK(std::abs(pr.field[2]) < 1e-14);
  CHECK(std::abs(pr.field[3]) < 1e-14);
  CHECK_FALSE(pr.under_resolved);

  auto ex = project_exact(op, {{3, 1.0}}, 5);
  CHECK(ex.coeffs() == std::vector<double>{0, 0, 1, 0, 0});

  // int_0^pi x (pi - x) sin(n x) dx = 4 / n^3 for odd n, 0 for even n
  pr = project(op, [](std::span<const double> x) { return x[0] * (M_PI - x[0]); }, 8, 64);
  for (int n = 1; n <= 8; ++n) {
    const double ref = (n % 2 == 1) ? std::sqrt(2.0 / M_PI) * 4.0 / (n * n * n) : 0.0;
    CHECK(std::abs(pr.field[n - 1] - ref) < 1e-13);
  }

  CHECK_THROWS_AS(project(op, [](std::span<const double>) { return 1.0; }, 8, 31), DomainError);
}

TEST_CASE("project flags under-resolved data") {
  auto op = interval_pi();
  auto pr = project(op, [](std::span<const double> x) { return std::sin(180.0 * x[0]) * x[0]; }, 4, 16);
  CHECK(pr.under_resolved);
  CHECK_FALSE(pr.warning.empty());
}

TEST_CASE("evaluate and roundtrip") {
  auto op = interval_pi();
  CHECK(evaluate(SpectralField::unit(op, 3, 1), M_PI / 2.0) ==
        doctest::Approx(0.7978845608).epsilon(1e-10));
  CHECK(evaluate(SpectralField::zero(op, 4), 1.0) == 0.0);
  CHECK_THROWS_AS(evaluate(SpectralField::zero(op, 4), 4.0), DomainError);

  auto g = [](double x) { return std::sin(2.0 * x); };
  auto pr = project(op, [&](std::span<const double> x) { return g(x[0]); }, 6, 64);
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = M_PI * i / 100.0;
    worst = std::max(worst, std::abs(evaluate(pr.field, x) - g(x)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("project inverts evaluate on the span") {
  for (const auto& cfg : catalog()) {
    auto op = make_operator(cfg);
    const std::size_t n = 8;
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(1.0 + 0.7 * i) / (1.0 + i);
    SpectralField f(op, c);
    auto pr = project(op, [&](std::span<const double> x) { return evaluate(f, x); }, n, 8 * n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(pr.field[i] - c[i]) < 1e-10);
  }
}

TEST_CASE("SpectralTransform roundtrip") {
  auto op = make_operator(box_pi());
  const std::size_t n = 10;
  SpectralTransform tr(op, n, 8 * n);
  std::vector<double> c(n), v(tr.n_points()), back(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = 1.0 / (i + 1.0);
  tr.to_physical(c, v);
  tr.to_spectral(v, back);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(back[i] - c[i]) < 1e-10);
  CHECK_THROWS_AS(SpectralTransform(op, n, 4 * n - 1), DomainError);
}

TEST_CASE("frac_norm") {
  auto op = interval_pi();
  auto e2 = SpectralField::unit(op, 4, 2);
  CHECK(frac_norm(e2, 1.0 / 1.5) == doctest::Approx(2.5198420998).epsilon(1e-10));
  CHECK(frac_norm(e2, -2.0 / 3.0) == doctest::Approx(0.3968502630).epsilon(1e-9));

  SpectralField f(op, {0.3, -1.2, 0.0, 2.5, 0.1});
  double e = 0.0;
  for (double c : f.coeffs()) e += c * c;
  CHECK(frac_norm(f, 0.0) == doctest::Approx(std::sqrt(e)).epsilon(1e-15));
  CHECK_THROWS_AS(frac_norm(f, 1.5), DomainError);
}

TEST_CASE("frac_norm monotone in theta and bounded below") {
  auto op = make_operator(box_pi());
  SpectralField f(op, {0.3, -1.2, 0.0, 2.5, 0.1, -0.7});
  const double l1 = op->eigenvalue(1);
  double prev = frac_norm(f, -1.0);
  for (int i = -19; i <= 20; ++i) {
    const double th = i / 20.0;
    const double v = frac_norm(f, th);
    CHECK(v >= prev);
    if (th >= 0.0) CHECK(std::pow(l1, th) * frac_norm(f, 0.0) <= v * (1.0 + 1e-15));
    prev = v;
  }
}

TEST_CASE("fractional power consistency") {
  OperatorSpecConfig c;
  c.kind = OperatorKind::spectral_fractional_power;
  c.power = 0.6;
  auto ls = make_operator(c);
  auto l = interval_pi();
  const std::vector<double> coeffs{1.0, -0.5, 0.25, 2.0};
  for (double th : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    CHECK(frac_norm(SpectralField(ls, coeffs), th) ==
          doctest::Approx(frac_norm(SpectralField(l, coeffs), th * 0.6)).epsilon(1e-13));
  }
}

TEST_CASE("coefficient csv roundtrip") {
  const auto dir = std::filesystem::temp_directory_path() / "mlwave_test_csv";
  const auto path = (dir / "c.csv").string();
  const std::vector<double> c{0.1, -2.0 / 3.0, 1e-300, 7.0};
  write_coefficients_csv(path, c);
  CHECK(read_coefficients_csv(path) == c);
  atomic_write(path, "n,c_n\n1,abc\n");
  CHECK_THROWS_AS(read_coefficients_csv(path), ConfigError);
  std::filesystem::remove_all(dir);
}
