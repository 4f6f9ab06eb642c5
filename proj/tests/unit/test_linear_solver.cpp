#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlwave/errors.hpp"
#include "mlwave/gamma.hpp"
#include "mlwave/linear_solver.hpp"
#include "mlwave/parallel.hpp"

using namespace mlwave;

namespace {

OperatorPtr interval() { return make_operator({}); }

LinearProblem problem(double alpha, std::vector<double> u0, std::vector<double> u1) {
  LinearProblem p;
  p.op = interval();
  p.alpha = alpha;
  p.u0 = std::move(u0);
  p.u1 = std::move(u1);
  return p;
}

ForcingSpec separable(std::vector<double> g, TimeFunction h) {
  ForcingSpec f;
  f.kind = ForcingSpec::Kind::separable;
  f.g = std::move(g);
  f.h = h;
  return f;
}

}  // namespace

TEST_CASE("time grids") {
  auto g = TimeGrid::uniform(1.0, 0.1);
  CHECK(g.size() == 11);
  CHECK(*g.dt() == 0.1);
  CHECK(g[10] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0.3), DomainError);
  CHECK_THROWS_AS(TimeGrid::from_points({0.1, 0.2}), DomainError);
  CHECK_THROWS_AS(TimeGrid::from_points({0.0, 0.2, 0.2}), DomainError);
  CHECK_FALSE(TimeGrid::from_points({0.0, 0.5, 2.0}).dt().has_value());
}

TEST_CASE("time functions") {
  TimeFunction p{TimeFunction::Kind::polynomial, {1.0, -2.0, 3.0}};
  CHECK(p.value(2.0) == doctest::Approx(9.0));
  CHECK(p.derivative(2.0) == doctest::Approx(10.0));
  TimeFunction s{TimeFunction::Kind::sinusoid, {2.0, 3.0, 0.5}};
  CHECK(s.value(1.0) == doctest::Approx(2.0 * std::sin(3.5)));
  CHECK(s.derivative(1.0) == doctest::Approx(6.0 * std::cos(3.5)));
  TimeFunction e{TimeFunction::Kind::exponential_decay, {2.0, 0.5}};
  CHECK(e.derivative(2.0) == doctest::Approx(-std::exp(-1.0)));
  TimeFunction bad{TimeFunction::Kind::sinusoid, {1.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(time_function_kind_from_string("square"), ConfigError);
}

TEST_CASE("homogeneous_state") {
  auto p = problem(1.5, {1.0, 0.0}, {0.0, 0.0});
  auto s = homogeneous_state(p, 1.0);
  CHECK(s.u[0] == ml_e(1.5, 1.0, -1.0));
  CHECK(s.dtu[0] == doctest::Approx(-ml_e(1.5, 1.5, -1.0)).epsilon(1e-15));
  CHECK(s.u[1] == 0.0);

  p = problem(1.3, {0.7, -0.2}, {1.1, 0.4});
  s = homogeneous_state(p, 0.0);
  CHECK(s.u == p.u0);
  CHECK(s.dtu == p.u1);
}

TEST_CASE("wave limit at alpha = 2") {
  auto p = problem(2.0, {1.0, 0.5, -0.3, 0.0, 2.0}, {0.2, -1.0, 0.0, 0.7, 0.1});
  const auto grid = TimeGrid::uniform(3.0, 0.05);
  const auto tr = solve_linear(p, grid, true);
  double err_u = 0.0, err_v = 0.0, err_a = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid[j];
    for (std::size_t n = 0; n < 5; ++n) {
      const double w = std::sqrt(tr.lambdas[n]);
      const double u = std::cos(w * t) * p.u0[n] + std::sin(w * t) / w * p.u1[n];
      const double v = -w * std::sin(w * t) * p.u0[n] + std::cos(w * t) * p.u1[n];
      err_u = std::max(err_u, std::abs(tr.u(j, n) - u));
      err_v = std::max(err_v, std::abs(tr.dtu(j, n) - v));
      err_a = std::max(err_a, std::abs((*tr.d2u)(j, n) + w * w * u));
    }
  }
  CHECK(err_u < 1e-9);
  CHECK(err_v < 1e-9);
  CHECK(err_a < 1e-8);
  CHECK_FALSE(tr.d2u_row0_undefined);

  // u0 = phi_1 alone: u = cos t, dtu = -sin t
  const auto single = homogeneous_state(problem(2.0, {1.0}, {0.0}), 1.0);
  CHECK(single.u[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  CHECK(single.dtu[0] == doctest::Approx(-std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("initial conditions and the Caputo identity") {
  auto p = problem(1.4, {1.0, -0.5, 0.25}, {0.3, 0.0, -0.1});
  p.forcing = separable({0.5, 1.0, -1.0}, {TimeFunction::Kind::sinusoid, {1.0, 2.0, 0.3}});
  const auto tr = solve_linear(p, TimeGrid::uniform(1.0, 0.01), false);
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(tr.u(0, n) == p.u0[n]);
    CHECK(tr.dtu(0, n) == p.u1[n]);
  }
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    for (std::size_t n = 0; n < 3; ++n) {
      CHECK(tr.dalpha(j, n) == -tr.lambdas[n] * tr.u(j, n) + tr.forcing(j, n));
    }
  }
}

TEST_CASE("constant forcing matches the closed form") {
  const double alpha = 1.6, c = 0.8;
  auto p = problem(alpha, {0.0, 0.0}, {0.0, 0.0});
  p.forcing = separable({c, -2.0 * c}, {TimeFunction::Kind::constant, {1.0}});
  const auto grid = TimeGrid::uniform(2.0, 0.02);
  const auto tr = solve_linear(p, grid, false);
  double err_u = 0.0, err_v = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double t = grid[j];
    for (std::size_t n = 0; n < 2; ++n) {
      const double lam = tr.lambdas[n];
      const double x = -lam * std::pow(t, alpha);
      const double u = p.forcing.g[n] * std::pow(t, alpha) * ml_e(alpha, alpha + 1.0, x);
      const double v = p.forcing.g[n] * std::pow(t, alpha - 1.0) * ml_e(alpha, alpha, x);
      err_u = std::max(err_u, std::abs(tr.u(j, n) - u));
      err_v = std::max(err_v, std::abs(tr.dtu(j, n) - v));
    }
  }
  CHECK(err_u < 1e-8);
  CHECK(err_v < 1e-8);
}

TEST_CASE("zero-eigenvalue kernel integrates monomials") {
  const double alpha = 1.7, dt = 0.05;
  const auto mk = build_mode_kernel(alpha, 0.0, dt, 40, false);
  std::vector<double> ones(41, 1.0);
  for (std::size_t j : {1u, 7u, 40u}) {
    const double t = j * dt;
    CHECK(product_sum(mk.wA, mk.wB, ones, j) ==
          doctest::Approx(std::pow(t, alpha) / std::tgamma(alpha + 1.0)).epsilon(1e-12));
  }
  // exact for linear data too: int_0^t s (t-s)^(a-1)/Gamma(a) ds = t^(a+1)/Gamma(a+2)
  std::vector<double> lin(41);
  for (std::size_t j = 0; j <= 40; ++j) lin[j] = j * dt;
  const double t = 2.0;
  CHECK(product_sum(mk.wA, mk.wB, lin, 40) ==
        doctest::Approx(std::pow(t, alpha + 1.0) / std::tgamma(alpha + 2.0)).epsilon(1e-12));
}

TEST_CASE("convolve_forcing") {
  auto p = problem(1.5, {0.0}, {0.0});
  auto z = convolve_forcing(p, TimeGrid::uniform(1.0, 0.1));
  for (double v : z.s3.data()) CHECK(v == 0.0);
  for (double v : z.s3p.data()) CHECK(v == 0.0);

  p.forcing = separable({1.0}, {TimeFunction::Kind::constant, {1.0}});
  CHECK_THROWS_AS(convolve_forcing(p, TimeGrid::from_points({0.0, 0.1, 0.3})), DomainError);
  CHECK_THROWS_AS(solve_linear(p, TimeGrid::from_points({0.0, 0.1, 0.3}), false), DomainError);
}

TEST_CASE("sinusoidal forcing converges at second order") {
  const double alpha = 1.5;
  auto p = problem(alpha, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  p.forcing = separable({1.0, 0.5, 0.25}, {TimeFunction::Kind::sinusoid, {1.0, 3.0, 0.0}});
  auto final_u = [&](double dt) {
    const auto tr = solve_linear(p, TimeGrid::uniform(1.0, dt), false);
    return std::vector<double>(tr.u.row(tr.u.rows() - 1).begin(), tr.u.row(tr.u.rows() - 1).end());
  };
  const auto ref = final_u(0.02 / 32.0);
  auto err = [&](double dt) {
    const auto u = final_u(dt);
    double e = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) e = std::max(e, std::abs(u[n] - ref[n]));
    return e;
  };
  const double e1 = err(0.02), e2 = err(0.01), e3 = err(0.005);
  CHECK(std::log2(e1 / e2) >= 1.8);
  CHECK(std::log2(e2 / e3) >= 1.8);
}

TEST_CASE("linearity") {
  const auto grid = TimeGrid::uniform(1.0, 0.02);
  auto a = problem(1.3, {1.0, 0.0, -0.5}, {0.0, 0.2, 0.1});
  a.forcing = separable({0.1, 0.2, 0.3}, {TimeFunction::Kind::exponential_decay, {1.0, 2.0}});
  auto b = problem(1.3, {0.0, 0.4, 0.5}, {1.0, -0.2, 0.0});
  b.forcing = separable({-0.3, 0.0, 1.0}, {TimeFunction::Kind::exponential_decay, {1.0, 2.0}});
  auto ab = problem(1.3, {1.0, 0.4, 0.0}, {1.0, 0.0, 0.1});
  ab.forcing = separable({-0.2, 0.2, 1.3}, {TimeFunction::Kind::exponential_decay, {1.0, 2.0}});
  const auto ta = solve_linear(a, grid, false);
  const auto tb = solve_linear(b, grid, false);
  const auto tab = solve_linear(ab, grid, false);
  double e = 0.0;
  for (std::size_t i = 0; i < tab.u.data().size(); ++i) {
    e = std::max(e, std::abs(tab.u.data()[i] - ta.u.data()[i] - tb.u.data()[i]));
    e = std::max(e, std::abs(tab.dtu.data()[i] - ta.dtu.data()[i] - tb.dtu.data()[i]));
  }
  CHECK(e < 1e-12);
}

TEST_CASE("appending zero modes leaves existing modes unchanged") {
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  auto p = problem(1.7, {1.0, 0.3}, {0.0, 0.5});
  p.forcing = separable({0.2, 0.1}, {TimeFunction::Kind::polynomial, {0.0, 1.0, -0.5}});
  auto q = p;
  q.u0 = {1.0, 0.3, 0.0, 0.0, 0.0};
  q.u1 = {0.0, 0.5, 0.0, 0.0, 0.0};
  q.forcing.g = {0.2, 0.1, 0.0, 0.0, 0.0};
  const auto tp = solve_linear(p, grid, true);
  const auto tq = solve_linear(q, grid, true);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t n = 0; n < 2; ++n) {
      CHECK(tp.u(j, n) == tq.u(j, n));
      CHECK(tp.dtu(j, n) == tq.dtu(j, n));
      CHECK(tp.dalpha(j, n) == tq.dalpha(j, n));
      CHECK((*tp.d2u)(j, n) == (*tq.d2u)(j, n));
    }
  }
}

TEST_CASE("results do not depend on the worker count") {
  std::vector<double> u0(40), u1(40);
  for (std::size_t n = 0; n < 40; ++n) {
    u0[n] = 1.0 / ((n + 1.0) * (n + 1.0));
    u1[n] = std::sin(n + 1.0) / (n + 1.0);
  }
  auto p = problem(1.5, u0, u1);
  p.forcing = separable(u1, {TimeFunction::Kind::sinusoid, {1.0, 1.0, 0.0}});
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  const std::size_t saved = thread_count();
  set_thread_count(1);
  const auto a = solve_linear(p, grid, true);
  set_thread_count(3);
  const auto b = solve_linear(p, grid, true);
  set_thread_count(saved);
  CHECK(a.u == b.u);
  CHECK(a.dtu == b.dtu);
  CHECK(*a.d2u == *b.d2u);
}

TEST_CASE("second derivative agrees with differences of the first") {
  auto p = problem(1.5, {1.0, -0.4}, {0.5, 0.2});
  p.forcing = separable({0.3, 1.0}, {TimeFunction::Kind::sinusoid, {1.0, 2.0, 0.4}});
  const double dt = 0.002;
  const auto tr = solve_linear(p, TimeGrid::uniform(1.0, dt), true);
  CHECK(tr.d2u_row0_undefined);
  double e = 0.0;
  for (std::size_t j = 100; j + 1 < tr.times.size(); ++j) {
    for (std::size_t n = 0; n < 2; ++n) {
      const double fd = (tr.dtu(j + 1, n) - tr.dtu(j - 1, n)) / (2.0 * dt);
      e = std::max(e, std::abs(fd - (*tr.d2u)(j, n)));
    }
  }
  CHECK(e < 1e-4);
}

TEST_CASE("rough data triggers the regularity warning") {
  std::vector<double> u0(64), u1(64, 0.0);
  for (std::size_t n = 0; n < 64; ++n) u0[n] = 1.0 / (n + 1.0);
  auto p = problem(1.5, u0, u1);
  const auto rough = solve_linear(p, TimeGrid::uniform(0.5, 0.1), true);
  CHECK_FALSE(rough.warnings.empty());
  for (std::size_t n = 0; n < 64; ++n) u0[n] = std::pow(n + 1.0, -6.0);
  p.u0 = u0;
  const auto smooth = solve_linear(p, TimeGrid::uniform(0.5, 0.1), true);
  CHECK(smooth.warnings.empty());
}

TEST_CASE("non-finite values are reported with their time index") {
  auto p = problem(1.5, {0.0, 0.0, 1.7e308}, {0.0, 0.0, 0.0});
  CHECK_THROWS_AS(solve_linear(p, TimeGrid::from_points({0.0, 1.0}), false), NumericFailure);
}

TEST_CASE("strong norm probe") {
  auto zero = solve_linear(problem(1.5, {0.0, 0.0}, {0.0, 0.0}), TimeGrid::uniform(1.0, 0.1), true);
  const auto pz = strong_norm_probe(zero);
  for (double v : pz.combined) CHECK(v == 0.0);
  CHECK(pz.d2u_l1 == 0.0);

  // alpha = 2, u0 = phi_1: ||d2u|| = |cos t|
  auto wave = solve_linear(problem(2.0, {1.0}, {0.0}), TimeGrid::uniform(1.0, 0.001), true);
  const auto pw = strong_norm_probe(wave);
  CHECK(pw.d2_computed);
  CHECK(pw.d2u_l1 == doctest::Approx(std::sin(1.0)).epsilon(1e-6));
  CHECK(pw.au_l2[0] == 1.0);

  auto no_d2 = solve_linear(problem(1.5, {1.0}, {0.0}), TimeGrid::uniform(1.0, 0.1), false);
  CHECK_FALSE(strong_norm_probe(no_d2).d2_computed);

  // sup_t t^(a-1) ||D^a u(t)|| over [1e-4, 1] for u0 = phi_1
  std::vector<double> t{0.0};
  for (int i = 0; i <= 40; ++i) t.push_back(1e-4 * std::pow(1e4, i / 40.0));
  auto env = solve_linear(problem(1.5, {1.0}, {0.0}), TimeGrid::from_points(t), false);
  const auto pe = strong_norm_probe(env);
  double sup = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) sup = std::max(sup, std::pow(t[j], 0.5) * pe.dalpha_l2[j]);
  CHECK(std::isfinite(sup));
  CHECK(sup <= 1.0);
}
