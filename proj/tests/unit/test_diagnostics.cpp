#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlwave/diagnostics.hpp"
#include "mlwave/errors.hpp"
#include "mlwave/mittag_leffler.hpp"

using namespace mlwave;

namespace {

std::vector<double> sample(double dt, double t_end, double (*g)(double, double), double alpha) {
  const auto m = static_cast<std::size_t>(std::lround(t_end / dt));
  std::vector<double> v(m + 1);
  for (std::size_t j = 0; j <= m; ++j) v[j] = g(j * dt, alpha);
  return v;
}

double sq(double t, double) { return t * t; }
double cube(double t, double) { return t * t * t; }
double affine(double t, double) { return 2.0 - 3.0 * t; }
double relax(double t, double a) { return ml_e(a, 1.0, -std::pow(t, a)); }

}  // namespace

TEST_CASE("discrete Caputo of monomials") {
  for (double a : {1.3, 1.5, 1.8}) {
    const double dt = 1e-3;
    const auto d = discrete_caputo(sample(dt, 1.1, sq, a), a, dt);
    const double exact = 2.0 / std::tgamma(3.0 - a);
    CHECK(std::abs(d[999] - exact) <= 1e-3 * exact);  // t = 1
    const auto z = discrete_caputo(sample(dt, 1.1, affine, a), a, dt);
    for (double v : z) CHECK(std::abs(v) < 1e-8);
  }
  CHECK_THROWS_AS(discrete_caputo(std::vector<double>{1.0, 2.0}, 1.5, 0.1), DomainError);
  CHECK_THROWS_AS(discrete_caputo(std::vector<double>{1.0, 2.0, 3.0}, 2.0, 0.1), DomainError);
}

TEST_CASE("discrete Caputo of t^3 refines") {
  const double a = 1.5;
  double prev = 0.0;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto d = discrete_caputo(sample(dt, 1.0, cube, a), a, dt);
    const auto n = static_cast<std::size_t>(std::lround(0.5 / dt));
    const double err = std::abs(d[n - 1] - 6.0 * std::pow(0.5, 3.0 - a) / std::tgamma(4.0 - a));
    if (prev > 0.0) CHECK(prev / err >= 1.8);
    prev = err;
  }
}

TEST_CASE("discrete Caputo of the relaxation function converges at order min(alpha, 3 - alpha)") {
  for (double a : {1.25, 1.5, 1.75}) {
    std::vector<double> err;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      const auto u = sample(dt, 1.0 + dt, relax, a);
      const auto d = discrete_caputo(u, a, dt, 0.0);
      const auto n = static_cast<std::size_t>(std::lround(1.0 / dt));
      err.push_back(std::abs(d[n - 1] + u[n]));
    }
    INFO("alpha=" << a);
    // the t^alpha start-up term caps the rate at alpha
    const double q = std::min(a, 3.0 - a);
    CHECK(std::abs(std::log2(err[1] / err[2]) - q) <= 0.15);
  }
}

TEST_CASE("discrete Caputo is linear") {
  const double dt = 0.01, a = 1.4;
  const auto u = sample(dt, 1.0, cube, a);
  const auto v = sample(dt, 1.0, relax, a);
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = 2.0 * u[i] - 3.0 * v[i];
  const auto du = discrete_caputo(u, a, dt), dv = discrete_caputo(v, a, dt), dw = discrete_caputo(w, a, dt);
  for (std::size_t i = 0; i < dw.size(); ++i) CHECK(std::abs(dw[i] - 2.0 * du[i] + 3.0 * dv[i]) < 1e-9);
}

TEST_CASE("rate_fit") {
  std::vector<double> t, v, w;
  for (int i = 0; i <= 60; ++i) {
    const double x = 1e-3 * std::pow(100.0, i / 60.0);
    t.push_back(x);
    v.push_back(std::pow(x, 1.2));
  }
  auto f = rate_fit(t, v, 1e-3, 1e-1);
  CHECK(f.exponent == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.points == 59);

  t.clear();
  v.clear();
  for (int i = 0; i <= 60; ++i) {
    const double x = 1e-4 * std::pow(100.0, i / 60.0);
    t.push_back(x);
    v.push_back(3.0 * std::sqrt(x) * (1.0 + 0.01 * x));
    w.push_back(7.5 * v.back());
  }
  f = rate_fit(t, v, 1e-4, 1e-2);
  CHECK(std::abs(f.exponent - 0.5) <= 0.01);
  const auto g = rate_fit(t, w, 1e-4, 1e-2);
  CHECK(std::abs(g.exponent - f.exponent) <= 1e-12);
  CHECK(g.intercept == doctest::Approx(f.intercept + std::log(7.5)));

  CHECK_THROWS_AS(rate_fit(t, v, 1e-4, 1.2e-4), DomainError);
  std::vector<double> tiny(t.size(), 1e-20);
  CHECK_THROWS_AS(rate_fit(t, tiny, 1e-4, 1e-2), DomainError);
}

TEST_CASE("self_convergence") {
  // final state of an Euler-type march: order one in dt
  auto euler = [](double dt) {
    double y = 1.0;
    const auto n = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) y += dt * (-y);
    return std::vector<double>{y};
  };
  auto cs = self_convergence(euler, {0.01, 0.005, 0.0025, 0.00125});
  CHECK_FALSE(cs.exact);
  REQUIRE(cs.orders.size() == 2);
  CHECK(cs.min_order() == doctest::Approx(1.0).epsilon(0.05));

  auto exact = [](double) { return std::vector<double>{0.25, -1.0}; };
  cs = self_convergence(exact, {0.1, 0.05, 0.025});
  CHECK(cs.exact);

  CHECK_THROWS_AS(self_convergence(exact, {0.1, 0.05}), DomainError);
  CHECK_THROWS_AS(self_convergence(exact, {0.1, 0.04, 0.02}), DomainError);
}

TEST_CASE("caputo_residual on solver traces") {
  LinearProblem p;
  p.op = make_operator({});
  p.alpha = 1.5;
  p.u0 = {1.0, 0.5, 0.0, -0.2};
  p.u1 = {0.0, 0.3, 1.0, 0.0};
  std::vector<double> r;
  for (double dt : {0.02, 0.01, 0.005}) {
    const auto tr = solve_linear(p, TimeGrid::uniform(1.0, dt), false);
    double worst = 0.0;
    for (std::size_t n = 0; n < 4; ++n) worst = std::max(worst, caputo_residual(tr, n, 0.1));
    r.push_back(worst);
  }
  CHECK(r[1] <= 1.1 * r[0]);
  CHECK(r[2] <= 1.1 * r[1]);
  CHECK(r[2] < 0.5 * r[0]);
}
