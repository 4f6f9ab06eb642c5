#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "mlwave/cli.hpp"
#include "mlwave/diagnostics.hpp"
#include "mlwave/errors.hpp"
#include "mlwave/mittag_leffler.hpp"

namespace mlwave {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kPi = 3.141592653589793;

struct Suite {
  VerifyReport report;

  // value <= threshold passes
  void at_most(const std::string& name, double value, double threshold, std::string detail = "") {
    report.checks.push_back({name, value, threshold, value <= threshold, std::move(detail)});
  }
  void at_least(const std::string& name, double value, double threshold, std::string detail = "") {
    report.checks.push_back({name, value, threshold, value >= threshold, std::move(detail)});
  }
  // runs `body`; an exception becomes a failed check
  void guard(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report.checks.push_back({name, NAN, 0.0, false, std::string("threw: ") + e.what()});
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string pair_label(double a, double b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "alpha=%g, %g", a, b);
  return buf;
}

OperatorPtr interval(std::size_t capacity = 1024) {
  OperatorSpecConfig c;
  c.mode_capacity = capacity;
  return make_operator(c);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

void ml_suite(Suite& s) {
  s.guard("exp special case", [&] {
    double e = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double x = -30.0 + 35.0 * i / 200.0;
      e = std::max(e, rel(ml_e(1.0, 1.0, x), std::exp(x)));
    }
    s.at_most("E_{1,1}(x) = exp(x) on [-30, 5]", e, 1e-10);
  });
  s.guard("cos and sinc special cases", [&] {
    double ec = 0.0, es = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double x = 20.0 * i / 200.0;
      // absolute near the zeros, relative elsewhere
      ec = std::max(ec, std::abs(ml_e(2.0, 1.0, -x * x) - std::cos(x)) / std::max(1.0, std::abs(std::cos(x))));
      const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
      es = std::max(es, std::abs(ml_e(2.0, 2.0, -x * x) - sinc) / std::max(1.0, std::abs(sinc)));
    }
    s.at_most("E_{2,1}(-x^2) = cos x on [0, 20]", ec, 1e-10);
    s.at_most("E_{2,2}(-x^2) = sin(x)/x on [0, 20]", es, 1e-10);
  });
  for (double a : {1.2, 1.5, 1.8}) {
    for (double lam : {0.5, 2.0, 10.0}) {
      s.guard("identities " + pair_label(a, lam), [&] {
        IdentityResiduals r[3];
        const double hs[3] = {1e-3, 5e-4, 2.5e-4};
        for (int i = 0; i < 3; ++i) r[i] = ml_identity_residuals(a, lam, 1.0, hs[i]);
        double worst = INFINITY;
        for (int i = 0; i < 2; ++i) {
          worst = std::min({worst, std::log2(r[i].first_derivative / r[i + 1].first_derivative),
                            std::log2(r[i].integrated_kernel / r[i + 1].integrated_kernel),
                            std::log2(r[i].kernel_derivative / r[i + 1].kernel_derivative)});
        }
        s.at_least("identity order " + pair_label(a, lam), worst, 1.9);
      });
    }
  }
  for (double a : {1.2, 1.5, 1.8}) {
    for (double b : {1.0, a, a - 1.0, 2.0}) {
      s.guard("bound " + pair_label(a, b), [&] {
        const double c1 = ml_bound_probe(a, b, 1e6, 256);
        const double c2 = ml_bound_probe(a, b, 1e6, 512);
        s.at_most("bound probe stable " + pair_label(a, b), rel(c2, c1), 0.01,
                  "sup = " + std::to_string(c2));
      });
    }
  }
}

void linear_suite(Suite& s) {
  const auto op = interval();
  s.guard("homogeneous closed form", [&] {
    LinearProblem p;
    p.op = op;
    p.alpha = 1.5;
    p.u0 = {0.7, 0.0, -0.2};
    p.u1 = {0.3, 1.0, 0.0};
    const auto tr = solve_linear(p, TimeGrid::uniform(2.0, 0.01), false);
    double e = 0.0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      const double t = tr.times[j];
      for (std::size_t n = 0; n < 3; ++n) {
        const double z = -tr.lambdas[n] * std::pow(t, 1.5);
        const double ref = ml_e(1.5, 1.0, z) * p.u0[n] + t * ml_e(1.5, 2.0, z) * p.u1[n];
        e = std::max(e, std::abs(tr.u(j, n) - ref));
      }
    }
    s.at_most("homogeneous modes match E_{a,1}, t E_{a,2}", e, 1e-12);
  });
  s.guard("constant forcing closed form", [&] {
    LinearProblem p;
    p.op = op;
    p.alpha = 1.5;
    p.u0 = {0.0, 0.0};
    p.u1 = {0.0, 0.0};
    p.forcing.kind = ForcingSpec::Kind::separable;
    p.forcing.g = {1.0, -0.5};
    p.forcing.h = TimeFunction{};
    const auto tr = solve_linear(p, TimeGrid::uniform(2.0, 0.01), false);
    double e = 0.0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      const double ta = std::pow(tr.times[j], 1.5);
      for (std::size_t n = 0; n < 2; ++n) {
        e = std::max(e, std::abs(tr.u(j, n) - p.forcing.g[n] * ta * ml_e(1.5, 2.5, -tr.lambdas[n] * ta)));
      }
    }
    s.at_most("constant forcing matches t^a E_{a,a+1}", e, 1e-8);
  });
  s.guard("wave limit", [&] {
    LinearProblem p;
    p.op = op;
    p.alpha = 2.0;
    p.u0 = {0.0, 1.0};
    p.u1 = {0.0, 0.0};
    const auto tr = solve_linear(p, TimeGrid::uniform(10.0, 0.01), false);
    double eu = 0.0, ed = 0.0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      const double t = tr.times[j];
      eu = std::max(eu, std::abs(tr.u(j, 1) - std::cos(2.0 * t)));
      ed = std::max(ed, std::abs(tr.dtu(j, 1) + 2.0 * std::sin(2.0 * t)));
    }
    s.at_most("alpha = 2: u = cos(sqrt(l) t)", eu, 1e-9);
    s.at_most("alpha = 2: d_t u = -sqrt(l) sin(sqrt(l) t)", ed, 1e-9);
  });
  s.guard("linearity", [&] {
    LinearProblem a, b, c;
    a.op = b.op = c.op = op;
    a.alpha = b.alpha = c.alpha = 1.4;
    a.u0 = {1.0, 0.0, 0.5};
    a.u1 = {0.0, 0.2, 0.0};
    b.u0 = {0.0, -0.3, 0.1};
    b.u1 = {1.0, 0.0, 0.4};
    b.forcing.kind = ForcingSpec::Kind::separable;
    b.forcing.g = {0.5, 0.5, 0.0};
    b.forcing.h = TimeFunction{TimeFunction::Kind::sinusoid, {1.0, 3.0, 0.0}};
    c.u0 = {1.0, -0.3, 0.6};
    c.u1 = {1.0, 0.2, 0.4};
    c.forcing = b.forcing;
    const auto grid = TimeGrid::uniform(1.0, 0.01);
    const auto ta = solve_linear(a, grid, false), tb = solve_linear(b, grid, false),
               tc = solve_linear(c, grid, false);
    double e = 0.0;
    for (std::size_t i = 0; i < tc.u.data().size(); ++i) {
      e = std::max(e, std::abs(tc.u.data()[i] - ta.u.data()[i] - tb.u.data()[i]));
    }
    s.at_most("superposition of data and forcing", e, 1e-12);
  });
  s.guard("truncation", [&] {
    LinearProblem p;
    p.op = op;
    p.alpha = 1.6;
    p.u0 = {1.0, 0.5};
    p.u1 = {0.1, 0.0};
    LinearProblem q = p;
    q.u0.resize(5, 0.0);
    q.u1.resize(5, 0.0);
    const auto grid = TimeGrid::uniform(1.0, 0.02);
    const auto a = solve_linear(p, grid, false), b = solve_linear(q, grid, false);
    double e = 0.0;
    for (std::size_t j = 0; j < a.times.size(); ++j) {
      for (std::size_t n = 0; n < 2; ++n) e = std::max(e, std::abs(a.u(j, n) - b.u(j, n)));
    }
    s.at_most("appending zero modes leaves coefficients unchanged", e, 0.0);
  });
}

SemilinearProblem small_problem(std::vector<double> u0, NonlinearitySpec f, double alpha = 1.5) {
  SemilinearProblem p;
  p.op = interval();
  p.alpha = alpha;
  p.u1.assign(u0.size(), 0.0);
  p.u0 = std::move(u0);
  p.f = std::move(f);
  return p;
}

NonlinearitySpec nonlinearity(NonlinearitySpec::Kind k, double c) {
  NonlinearitySpec f;
  f.kind = k;
  f.c = c;
  return f;
}

void semilinear_suite(Suite& s) {
  s.guard("zero nonlinearity", [&] {
    auto p = small_problem({1.0, -0.5, 0.25}, nonlinearity(NonlinearitySpec::Kind::zero, 0.0));
    const auto grid = TimeGrid::uniform(1.0, 0.01);
    const auto out = run_semilinear(p, grid, {});
    LinearProblem lp;
    lp.op = p.op;
    lp.alpha = p.alpha;
    lp.u0 = p.u0;
    lp.u1 = p.u1;
    const auto lin = solve_linear(lp, grid, false);
    s.at_most("f = 0 reproduces the linear solver", max_abs_diff(out.trace.u, lin.u), 0.0);
  });
  s.guard("fixed point", [&] {
    const auto out = run_semilinear(small_problem({1.0, 0.0}, nonlinearity(NonlinearitySpec::Kind::linear_shift, 1.0)),
                                    TimeGrid::uniform(5.0, 0.01), {});
    double e = 0.0;
    for (std::size_t j = 0; j < out.trace.times.size(); ++j) {
      e = std::max({e, std::abs(out.trace.u(j, 0) - 1.0), std::abs(out.trace.u(j, 1))});
    }
    s.at_most("f(u) = u keeps phi_1 constant", e, 1e-8);
  });
  s.guard("shifted propagator", [&] {
    const auto out = run_semilinear(small_problem({1.0}, nonlinearity(NonlinearitySpec::Kind::linear_shift, 0.5)),
                                    TimeGrid::uniform(2.0, 0.005), {});
    double e = 0.0;
    for (std::size_t j = 0; j < out.trace.times.size(); ++j) {
      const double t = out.trace.times[j];
      e = std::max(e, std::abs(out.trace.u(j, 0) - ml_e(1.5, 1.0, -0.5 * std::pow(t, 1.5))));
    }
    s.at_most("f(u) = 0.5 u matches E_{a,1}(-0.5 t^a)", e, 1e-6);
  });
  s.guard("window split", [&] {
    auto p = small_problem({0.1, 0.0, 0.05, 0.0}, nonlinearity(NonlinearitySpec::Kind::sine, 0.1));
    const auto grid = TimeGrid::uniform(2.0, 0.01);
    PicardConfig one;
    one.heuristic_window = false;
    one.window_init = 2.0;
    PicardConfig two = one;
    two.window_init = 1.0;
    const auto a = run_semilinear(p, grid, one), b = run_semilinear(p, grid, two);
    s.at_most("one window vs two windows", max_abs_diff(a.trace.u, b.trace.u), 1e-8,
              std::to_string(a.windows.size()) + " vs " + std::to_string(b.windows.size()) + " windows");
  });
  s.guard("blow-up monitor", [&] {
    const auto out = run_semilinear(small_problem({1.0, 0.5, 0.2}, nonlinearity(NonlinearitySpec::Kind::zero, 0.0)),
                                    TimeGrid::uniform(50.0, 0.05), {});
    s.at_most("f = 0 never triggers the monitor on [0, 50]",
              out.status == RunOutcome::Status::completed ? 0.0 : 1.0, 0.0);
  });
}

std::vector<double> log_times(double lo, double hi, int n) {
  std::vector<double> t{0.0};
  for (int i = 0; i <= n; ++i) t.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / n));
  return t;
}

// Fitted small-t exponents for rough data with N modes on the interval.
void rates_suite(Suite& s) {
  const std::size_t N = 1000;
  const double delta = 0.02;
  const auto op = interval(N);
  const auto times = log_times(1e-3, 1e-1, 40);
  const auto grid = TimeGrid::from_points(times);
  for (double a : {1.25, 1.5, 1.75}) {
    s.guard("rates " + pair_label(a, 0.0), [&] {
      const double beta = 1.0 - 1.0 / a;
      const double sigma = 0.5 / a;
      LinearProblem p;
      p.op = op;
      p.alpha = a;
      p.u0.resize(N);
      p.u1.assign(N, 0.0);
      for (std::size_t n = 1; n <= N; ++n) p.u0[n - 1] = std::pow(double(n), -2.0 / a - 1.5);
      const auto smooth = solve_linear(p, grid, false);
      for (std::size_t n = 1; n <= N; ++n) p.u0[n - 1] = std::pow(double(n), -2.0 / a - 0.5 - delta);
      const auto rough = solve_linear(p, grid, false);
      LinearProblem q = p;
      q.u0.assign(N, 0.0);
      q.u1.resize(N);
      for (std::size_t n = 1; n <= N; ++n) q.u1[n - 1] = std::pow(double(n), -0.5 - delta);
      const auto vel = solve_linear(q, grid, false);

      std::vector<double> v1(times.size()), v2(times.size()), v3(times.size()), c(N);
      for (std::size_t j = 0; j < times.size(); ++j) {
        for (std::size_t n = 0; n < N; ++n) c[n] = smooth.dtu(j, n);
        v1[j] = frac_norm(*op, c, -beta);
        for (std::size_t n = 0; n < N; ++n) c[n] = vel.u(j, n);
        v2[j] = frac_norm(*op, c, sigma);
        for (std::size_t n = 0; n < N; ++n) c[n] = rough.dalpha(j, n);
        v3[j] = frac_norm(*op, c, 0.0);
      }
      const auto f1 = rate_fit(times, v1, 5e-3, 5e-2);
      const auto f2 = rate_fit(times, v2, 5e-3, 5e-2);
      const auto f3 = rate_fit(times, v3, 5e-3, 5e-2);
      char buf[32];
      std::snprintf(buf, sizeof buf, "alpha=%g", a);
      s.at_most(std::string("|d_t u - u1| exponent - alpha beta, ") + buf,
                std::abs(f1.exponent - a * beta), 0.1, "fit " + std::to_string(f1.exponent));
      s.at_most(std::string("u1 layer exponent - (1 - alpha sigma), ") + buf,
                std::abs(f2.exponent - (1.0 - a * sigma)), 0.1, "fit " + std::to_string(f2.exponent));
      s.at_most(std::string("|D^a u| exponent + (alpha - 1), ") + buf,
                std::abs(f3.exponent + (a - 1.0)), 0.1, "fit " + std::to_string(f3.exponent));
    });
  }
}

std::vector<double> final_row(const SolutionTrace& tr) {
  std::vector<double> v;
  for (std::size_t n = 0; n < tr.n_modes(); ++n) v.push_back(tr.u(tr.times.size() - 1, n));
  for (std::size_t n = 0; n < tr.n_modes(); ++n) v.push_back(tr.dtu(tr.times.size() - 1, n));
  return v;
}

void convergence_suite(Suite& s) {
  const auto op = interval();
  LinearProblem p;
  p.op = op;
  p.alpha = 1.5;
  p.u0 = {0.5, 0.0, 0.1};
  p.u1 = {0.0, 0.2, 0.0};
  p.forcing.kind = ForcingSpec::Kind::separable;
  p.forcing.g = {1.0, 0.5, -0.25};
  p.forcing.h = TimeFunction{TimeFunction::Kind::sinusoid, {1.0, 2.0, 0.3}};
  const std::vector<double> dts{0.04, 0.02, 0.01, 0.005};
  s.guard("sinusoidal forcing", [&] {
    const auto cs = self_convergence(
        [&](double dt) { return final_row(solve_linear(p, TimeGrid::uniform(2.0, dt), false)); }, dts);
    s.at_least("sinusoidal forcing order", cs.min_order(), 1.8);
  });
  s.guard("zero forcing", [&] {
    LinearProblem z = p;
    z.forcing = ForcingSpec{};
    const auto cs = self_convergence(
        [&](double dt) { return final_row(solve_linear(z, TimeGrid::uniform(2.0, dt), false)); }, dts);
    s.at_most("f = 0 differences at round-off", cs.exact ? 0.0 : 1.0, 0.0);
  });
  s.guard("sine semilinear", [&] {
    auto q = small_problem({0.1, 0.0, 0.05}, nonlinearity(NonlinearitySpec::Kind::sine, 0.5));
    const auto cs = self_convergence(
        [&](double dt) { return final_row(run_semilinear(q, TimeGrid::uniform(1.0, dt), {}).trace); }, dts);
    s.at_least("sine semilinear order", cs.min_order(), 1.5);
  });
  s.guard("residual trend", [&] {
    double worst = 0.0;
    std::vector<double> r;
    for (double dt : {0.02, 0.01, 0.005}) {
      const auto tr = solve_linear(p, TimeGrid::uniform(1.0, dt), false);
      double m = 0.0;
      for (std::size_t n = 0; n < 3; ++n) m = std::max(m, caputo_residual(tr, n, 0.1));
      r.push_back(m);
    }
    for (std::size_t i = 1; i < r.size(); ++i) worst = std::max(worst, r[i] / r[i - 1]);
    s.at_most("Caputo residual ratio under dt halving", worst, 1.1);
  });
}

}  // namespace

bool VerifyReport::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::json() const {
  ojson j;
  j["suite"] = suite;
  j["passed"] = passed();
  ojson arr = ojson::array();
  for (const auto& c : checks) {
    arr.push_back(ojson{{"name", c.name},
                        {"value", std::isfinite(c.value) ? ojson(c.value) : ojson(nullptr)},
                        {"threshold", c.threshold},
                        {"passed", c.passed},
                        {"detail", c.detail}});
  }
  j["checks"] = arr;
  return j.dump(2) + "\n";
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"ml", "linear", "semilinear", "rates", "convergence"};
  return names;
}

VerifyReport run_verify_suite(const std::string& suite) {
  Suite s;
  s.report.suite = suite;
  if (suite == "ml") {
    ml_suite(s);
  } else if (suite == "linear") {
    linear_suite(s);
  } else if (suite == "semilinear") {
    semilinear_suite(s);
  } else if (suite == "rates") {
    rates_suite(s);
  } else if (suite == "convergence") {
    convergence_suite(s);
  } else {
    throw DomainError("unknown verify suite '" + suite + "'");
  }
  return s.report;
}

}  // namespace mlwave
