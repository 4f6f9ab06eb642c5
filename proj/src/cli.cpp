#include "mlwave/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlwave/criticality.hpp"
#include "mlwave/diagnostics.hpp"
#include "mlwave/errors.hpp"
#include "mlwave/io.hpp"
#include "mlwave/mittag_leffler.hpp"
#include "mlwave/parallel.hpp"

namespace mlwave {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Typed access to one JSON object; records type errors and unknown keys.
class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string>& errs)
      : j_(j), path_(std::move(path)), errs_(errs) {}

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& dst) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      errs_.push_back(where(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  void get_count(const char* key, std::size_t& dst) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const auto& v = j_.at(key);
    if (v.is_number_unsigned()) {
      dst = v.get<std::size_t>();
    } else {
      errs_.push_back(where(key) + ": expected a non-negative integer");
    }
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) errs_.push_back(where(it.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
};

bool expect_object(const json& j, const std::string& path, std::vector<std::string>& errs) {
  if (j.is_object()) return true;
  errs.push_back(path + ": expected an object");
  return false;
}

template <class F>
void guarded(std::vector<std::string>& errs, const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    for (const auto& it : e.items()) errs.push_back(path + ": " + it);
  } catch (const std::exception& e) {
    errs.push_back(path + ": " + e.what());
  }
}

void parse_operator(const json& j, OperatorSpecConfig& op, std::vector<std::string>& errs) {
  if (!expect_object(j, "operator", errs)) return;
  Section s(j, "operator", errs);
  std::string kind = to_string(op.kind), base = to_string(op.base);
  s.get("kind", kind);
  s.get("lengths", op.lengths);
  s.get("shift", op.shift);
  s.get("power", op.power);
  s.get("base", base);
  s.get("q", op.q);
  s.get_count("mode_capacity", op.mode_capacity);
  s.finish();
  guarded(errs, "operator.kind", [&] { op.kind = operator_kind_from_string(kind); });
  guarded(errs, "operator.base", [&] { op.base = operator_kind_from_string(base); });
}

void parse_initial(const json& j, const std::string& path, InitialData& d, const ParseOptions& opt,
                   std::vector<std::string>& errs) {
  if (j.is_string()) {
    d.kind = InitialData::Kind::named;
    d.name = j.get<std::string>();
    return;
  }
  if (!expect_object(j, path, errs)) return;
  Section s(j, path, errs);
  const int given = int(s.has("named")) + int(s.has("coeffs")) + int(s.has("file"));
  if (given != 1) errs.push_back(path + ": exactly one of 'named', 'coeffs', 'file' is required");
  if (s.has("file")) d.kind = InitialData::Kind::file;
  if (s.has("coeffs")) d.kind = InitialData::Kind::coeffs;
  if (s.has("named")) d.kind = InitialData::Kind::named;
  s.get("named", d.name);
  s.get("coeffs", d.coeffs);
  s.get("file", d.file);
  s.get("scale", d.scale);
  if (s.has("exponent") && !(d.kind == InitialData::Kind::named && d.name == "power_law")) {
    errs.push_back(path + ".exponent: only used by the named profile 'power_law'");
  }
  s.get("exponent", d.exponent);
  s.finish();
  if (given != 1) return;

  if (d.kind == InitialData::Kind::file && !d.file.empty()) {
    fs::path f(d.file);
    if (f.is_relative() && !opt.base_dir.empty()) f = fs::path(opt.base_dir) / f;
    d.file = fs::absolute(f).lexically_normal().string();
  }
}

void parse_time_function(const json& j, TimeFunction& h, std::vector<std::string>& errs) {
  if (!expect_object(j, "forcing.h", errs)) return;
  Section s(j, "forcing.h", errs);
  std::string kind = to_string(h.kind);
  s.get("kind", kind);
  s.get("params", h.params);
  s.finish();
  guarded(errs, "forcing.h.kind", [&] { h.kind = time_function_kind_from_string(kind); });
}

void parse_forcing(const json& j, ForcingConfig& f, const ParseOptions& opt,
                   std::vector<std::string>& errs) {
  if (!expect_object(j, "forcing", errs)) return;
  Section s(j, "forcing", errs);
  std::string kind = "zero";
  s.get("kind", kind);
  if (kind == "zero") {
    f.kind = ForcingConfig::Kind::zero;
  } else if (kind == "separable") {
    f.kind = ForcingConfig::Kind::separable;
  } else {
    errs.push_back("forcing.kind: expected 'zero' or 'separable'");
  }
  if (const json* g = s.child("g")) parse_initial(*g, "forcing.g", f.g, opt, errs);
  if (const json* h = s.child("h")) parse_time_function(*h, f.h, errs);
  s.finish();
}

std::string hypothesis_name(HypothesisClass::Kind k) { return to_string(k); }

void parse_nonlinearity(const json& j, NonlinearitySpec& f, std::vector<std::string>& errs) {
  if (!expect_object(j, "nonlinearity", errs)) return;
  Section s(j, "nonlinearity", errs);
  std::string kind = to_string(f.kind);
  s.get("kind", kind);
  s.get("c", f.c);
  s.get("r", f.r);
  s.get("table_s", f.table_s);
  s.get("table_f", f.table_f);
  if (const json* d = s.child("declared")) {
    if (expect_object(*d, "nonlinearity.declared", errs)) {
      Section ds(*d, "nonlinearity.declared", errs);
      HypothesisClass h;
      std::string cls = "Hf2";
      ds.get("class", cls);
      ds.get("r", h.r);
      ds.get("C", h.C);
      ds.finish();
      if (cls == hypothesis_name(HypothesisClass::Kind::hf1)) {
        h.kind = HypothesisClass::Kind::hf1;
      } else if (cls == hypothesis_name(HypothesisClass::Kind::hf2)) {
        h.kind = HypothesisClass::Kind::hf2;
      } else {
        errs.push_back("nonlinearity.declared.class: expected 'Hf1' or 'Hf2'");
      }
      f.declared = h;
    }
  }
  s.finish();
  guarded(errs, "nonlinearity.kind", [&] { f.kind = nonlinearity_kind_from_string(kind); });
}

void parse_picard(const json& j, PicardConfig& c, std::vector<std::string>& errs) {
  if (!expect_object(j, "picard", errs)) return;
  Section s(j, "picard", errs);
  s.get("R_star", c.R_star);
  s.get("tol", c.tol);
  s.get("max_iter", c.max_iter);
  s.get("window_init", c.window_init);
  s.get("window_min", c.window_min);
  s.get("blowup_threshold", c.blowup_threshold);
  s.get_count("nonlinearity_quadrature", c.nonlinearity_quadrature);
  s.get("heuristic_window", c.heuristic_window);
  s.finish();
}

void check_initial(const InitialData& d, const std::string& path, std::size_t n,
                   std::vector<std::string>& errs) {
  if (!std::isfinite(d.scale)) errs.push_back(path + ".scale: must be finite");
  switch (d.kind) {
    case InitialData::Kind::named: {
      if (d.name == "zero" || d.name == "parabola") break;
      if (d.name == "power_law") {
        if (!std::isfinite(d.exponent)) errs.push_back(path + ".exponent: must be finite");
        break;
      }
      if (d.name.rfind("phi", 0) == 0 && d.name.size() > 3 &&
          d.name.find_first_not_of("0123456789", 3) == std::string::npos) {
        const auto k = std::stoul(d.name.substr(3));
        if (k < 1 || k > n) {
          errs.push_back(path + ": " + d.name + " is outside modes 1.." + std::to_string(n));
        }
        break;
      }
      errs.push_back(path + ": unknown profile '" + d.name +
                     "' (zero, phi<k>, parabola, power_law)");
      break;
    }
    case InitialData::Kind::coeffs:
      if (d.coeffs.size() > n) {
        errs.push_back(path + ".coeffs: " + std::to_string(d.coeffs.size()) +
                       " values for N_modes = " + std::to_string(n));
      }
      for (double c : d.coeffs) {
        if (!std::isfinite(c)) {
          errs.push_back(path + ".coeffs: values must be finite");
          break;
        }
      }
      break;
    case InitialData::Kind::file:
      if (!fs::is_regular_file(d.file)) errs.push_back(path + ".file: no such file " + d.file);
      break;
  }
}

ojson initial_json(const InitialData& d) {
  ojson j;
  switch (d.kind) {
    case InitialData::Kind::named:
      j["named"] = d.name;
      j["scale"] = d.scale;
      if (d.name == "power_law") j["exponent"] = d.exponent;
      break;
    case InitialData::Kind::coeffs:
      j["coeffs"] = d.coeffs;
      j["scale"] = d.scale;
      break;
    case InitialData::Kind::file:
      j["file"] = d.file;
      j["scale"] = d.scale;
      break;
  }
  return j;
}

ojson scenario_json(const Scenario& s) {
  ojson j;
  j["alpha"] = s.alpha;
  ojson op;
  op["kind"] = to_string(s.op.kind);
  op["lengths"] = s.op.lengths;
  op["shift"] = s.op.shift;
  op["power"] = s.op.power;
  op["base"] = to_string(s.op.base);
  op["q"] = s.op.q;
  op["mode_capacity"] = s.op.mode_capacity;
  j["operator"] = op;
  j["N_modes"] = s.n_modes;
  j["u0"] = initial_json(s.u0);
  j["u1"] = initial_json(s.u1);
  ojson fo;
  fo["kind"] = s.forcing.kind == ForcingConfig::Kind::zero ? "zero" : "separable";
  fo["g"] = initial_json(s.forcing.g);
  fo["h"] = ojson{{"kind", to_string(s.forcing.h.kind)}, {"params", s.forcing.h.params}};
  j["forcing"] = fo;
  if (s.nonlinearity) {
    const auto& f = *s.nonlinearity;
    ojson nl;
    nl["kind"] = to_string(f.kind);
    nl["c"] = f.c;
    nl["r"] = f.r;
    nl["table_s"] = f.table_s;
    nl["table_f"] = f.table_f;
    if (f.declared) {
      nl["declared"] = ojson{{"class", to_string(f.declared->kind)},
                             {"r", f.declared->r},
                             {"C", f.declared->C}};
    }
    j["nonlinearity"] = nl;
  }
  j["grid"] = ojson{{"t_end", s.t_end}, {"dt", s.dt}};
  const auto& c = s.picard;
  j["picard"] = ojson{{"R_star", c.R_star},
                      {"tol", c.tol},
                      {"max_iter", c.max_iter},
                      {"window_init", c.window_init},
                      {"window_min", c.window_min},
                      {"blowup_threshold", c.blowup_threshold},
                      {"nonlinearity_quadrature", c.nonlinearity_quadrature},
                      {"heuristic_window", c.heuristic_window}};
  j["strong_check"] = ojson{{"q", s.strong_q}, {"r", s.strong_r}};
  j["output"] = s.output;
  return j;
}

ojson regime_json(const Regime& r) {
  ojson j;
  j["case"] = r.regime_case == RegimeCase::I ? "I" : "II";
  j["subcritical"] = r.subcritical;
  j["alpha0"] = r.alpha0 ? ojson(*r.alpha0) : ojson(nullptr);
  j["theta_A"] = r.theta_A;
  j["q_A"] = r.q_A.is_infinite() ? ojson("inf") : ojson(r.q_A.value());
  j["gamma"] = r.gamma;
  j["p_range_sup"] = r.p_range_sup;
  j["r_star_kind"] = to_string(r.r_star.kind);
  j["r_star"] = r.r_star.kind == GrowthExponent::Kind::finite ? ojson(r.r_star.r_star) : ojson(nullptr);
  j["supercritical_range_empty"] = r.supercritical_range_empty;
  return j;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

std::vector<double> InitialData::resolve(const OperatorPtr& op, std::size_t n) const {
  std::vector<double> c(n, 0.0);
  switch (kind) {
    case Kind::named:
      if (name == "zero") {
        return c;
      } else if (name == "power_law") {
        for (std::size_t i = 0; i < n; ++i) c[i] = std::pow(static_cast<double>(i + 1), -exponent);
      } else if (name == "parabola") {
        const auto& L = op->lengths();
        auto g = [&](std::span<const double> x) {
          double v = 1.0;
          for (std::size_t i = 0; i < x.size(); ++i) v *= x[i] * (L[i] - x[i]);
          return v;
        };
        c = project(op, g, n, std::max<std::size_t>(4 * n, 64)).field.coeffs();
      } else if (name.rfind("phi", 0) == 0) {
        c = SpectralField::unit(op, n, std::stoul(name.substr(3))).coeffs();
      } else {
        throw ConfigError("unknown profile '" + name + "'");
      }
      break;
    case Kind::coeffs:
      if (coeffs.size() > n) throw ConfigError("more coefficients than modes");
      std::copy(coeffs.begin(), coeffs.end(), c.begin());
      break;
    case Kind::file: {
      const auto v = read_coefficients_csv(file);
      if (v.size() > n) throw ConfigError(file + ": more coefficients than modes");
      std::copy(v.begin(), v.end(), c.begin());
      break;
    }
  }
  for (double& v : c) v *= scale;
  return c;
}

Scenario parse_scenario(const std::string& text, const ParseOptions& opt) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("scenario: expected a JSON object");

  std::vector<std::string> errs;
  Scenario s;
  Section r(root, "", errs);
  r.get("alpha", s.alpha);
  if (const json* j = r.child("operator")) parse_operator(*j, s.op, errs);
  r.get_count("N_modes", s.n_modes);
  if (const json* j = r.child("u0")) parse_initial(*j, "u0", s.u0, opt, errs);
  if (const json* j = r.child("u1")) parse_initial(*j, "u1", s.u1, opt, errs);
  if (const json* j = r.child("forcing")) parse_forcing(*j, s.forcing, opt, errs);
  if (const json* j = r.child("nonlinearity")) {
    s.nonlinearity.emplace();
    parse_nonlinearity(*j, *s.nonlinearity, errs);
  }
  if (const json* j = r.child("grid")) {
    if (expect_object(*j, "grid", errs)) {
      Section g(*j, "grid", errs);
      g.get("t_end", s.t_end);
      g.get("dt", s.dt);
      g.finish();
    }
  }
  if (const json* j = r.child("picard")) parse_picard(*j, s.picard, errs);
  std::optional<double> strong_r;
  if (const json* j = r.child("strong_check")) {
    if (expect_object(*j, "strong_check", errs)) {
      Section g(*j, "strong_check", errs);
      g.get("q", s.strong_q);
      double rr = 0.0;
      if (g.has("r")) {
        g.get("r", rr);
        strong_r = rr;
      }
      g.finish();
    }
  }
  r.get("output", s.output);
  r.finish();

  // invariants
  const bool alpha_ok = s.alpha > 1.0 && s.alpha <= 2.0;
  if (!alpha_ok) errs.push_back("alpha: must lie in (1, 2]");
  if (s.alpha == 2.0 && !opt.allow_limit) {
    errs.push_back("alpha: the classical limit alpha = 2 requires the --allow-limit flag");
  }
  bool op_ok = true;
  guarded(errs, "operator", [&] {
    op_ok = false;
    s.op.validate();
    op_ok = true;
  });
  if (s.n_modes < 1) errs.push_back("N_modes: must be at least 1");
  if (s.n_modes > s.op.mode_capacity) {
    errs.push_back("N_modes: exceeds operator.mode_capacity = " + std::to_string(s.op.mode_capacity));
  }
  check_initial(s.u0, "u0", s.n_modes, errs);
  check_initial(s.u1, "u1", s.n_modes, errs);
  if (s.forcing.kind == ForcingConfig::Kind::separable) {
    check_initial(s.forcing.g, "forcing.g", s.n_modes, errs);
    guarded(errs, "forcing.h", [&] { s.forcing.h.validate(); });
  }
  if (s.nonlinearity) {
    if (s.forcing.kind != ForcingConfig::Kind::zero) {
      errs.push_back("forcing: external forcing cannot be combined with a nonlinearity");
    }
    if (s.alpha == 2.0) errs.push_back("nonlinearity: the semilinear solver needs alpha < 2");
    bool f_ok = true;
    guarded(errs, "nonlinearity", [&] {
      f_ok = false;
      s.nonlinearity->validate();
      f_ok = true;
    });
    if (f_ok && op_ok && s.alpha > 1.0 && s.alpha < 2.0) {
      const auto regime = classify(q_A_of(s.op), s.alpha);
      if (auto e = admission_error(*s.nonlinearity, regime)) errs.push_back("nonlinearity: " + *e);
    }
  }
  if (!(s.t_end > 0.0 && std::isfinite(s.t_end))) errs.push_back("grid.t_end: must be positive");
  if (!(s.dt > 0.0 && s.dt <= s.t_end)) {
    errs.push_back("grid.dt: must lie in (0, t_end]");
  } else {
    const double steps = std::round(s.t_end / s.dt);
    if (std::abs(steps * s.dt - s.t_end) > 1e-12 * std::max(1.0, s.t_end)) {
      errs.push_back("grid.dt: does not divide t_end");
    }
  }
  guarded(errs, "picard", [&] { s.picard.validate(); });
  if (!(s.strong_q >= 1.0)) errs.push_back("strong_check.q: must be >= 1");
  if (strong_r) {
    s.strong_r = *strong_r;
  } else if (s.nonlinearity && s.nonlinearity->hypothesis().kind == HypothesisClass::Kind::hf1) {
    s.strong_r = s.nonlinearity->hypothesis().r;
  }
  if (!(s.strong_r > 1.0)) errs.push_back("strong_check.r: must be > 1");
  if (s.output.empty()) errs.push_back("output: must not be empty");

  if (!errs.empty()) throw ConfigError(errs);
  return s;
}

Scenario load_scenario(const std::string& path, const ParseOptions& opt) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  ParseOptions o = opt;
  if (o.base_dir.empty()) o.base_dir = fs::absolute(path).parent_path().string();
  return parse_scenario(read_file(path), o);
}

std::string echo_scenario(const Scenario& s) { return scenario_json(s).dump(2) + "\n"; }

TimeGrid scenario_grid(const Scenario& s) { return TimeGrid::uniform(s.t_end, s.dt); }

LinearProblem make_linear_problem(const Scenario& s) {
  OperatorSpecConfig oc = s.op;
  LinearProblem p;
  p.op = make_operator(oc);
  p.alpha = s.alpha;
  p.u0 = s.u0.resolve(p.op, s.n_modes);
  p.u1 = s.u1.resolve(p.op, s.n_modes);
  if (s.forcing.kind == ForcingConfig::Kind::separable) {
    p.forcing.kind = ForcingSpec::Kind::separable;
    p.forcing.g = s.forcing.g.resolve(p.op, s.n_modes);
    p.forcing.h = s.forcing.h;
  }
  return p;
}

SemilinearProblem make_semilinear_problem(const Scenario& s) {
  if (!s.nonlinearity) throw ConfigError("nonlinearity: required for a semilinear solve");
  SemilinearProblem p;
  p.op = make_operator(s.op);
  p.alpha = s.alpha;
  p.u0 = s.u0.resolve(p.op, s.n_modes);
  p.u1 = s.u1.resolve(p.op, s.n_modes);
  p.f = *s.nonlinearity;
  return p;
}

std::string trace_csv(const SolutionTrace& tr) {
  const std::size_t n = tr.n_modes();
  std::string out = "t";
  for (const char* block : {"u", "dtu", "dalpha"}) {
    for (std::size_t i = 1; i <= n; ++i) out += "," + std::string(block) + "_" + std::to_string(i);
  }
  out += '\n';
  out.reserve(out.size() + tr.times.size() * (3 * n + 1) * 24);
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    out += format_double(tr.times[j]);
    for (const Matrix* m : {&tr.u, &tr.dtu, &tr.dalpha}) {
      for (std::size_t i = 0; i < n; ++i) {
        out += ',';
        out += format_double((*m)(j, i));
      }
    }
    out += '\n';
  }
  return out;
}

std::string norms_csv(const SolutionTrace& tr) {
  std::string out = "t,norm_Vgamma_u,norm_L2_dtu,norm_Vminusgamma_dalpha\n";
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    const auto& r = tr.norms[j];
    out += format_double(tr.times[j]) + ',' + format_double(r.vgamma_u) + ',' +
           format_double(r.l2_dtu) + ',' + format_double(r.vminusgamma_dalpha) + '\n';
  }
  return out;
}

namespace {

void write_run_files(const fs::path& dir, const Scenario& s, const SolutionTrace& tr,
                     const std::string& solver, const std::optional<Regime>& regime) {
  atomic_write((dir / "trace.csv").string(), trace_csv(tr));
  atomic_write((dir / "norms.csv").string(), norms_csv(tr));
  atomic_write((dir / "scenario.json").string(), echo_scenario(s));
  ojson sum;
  sum["metadata"] = ojson{{"program", "mlwave"}, {"timestamp", utc_timestamp()}};
  sum["solver"] = solver;
  sum["scenario"] = scenario_json(s);
  sum["regime"] = regime ? regime_json(*regime) : ojson(nullptr);
  sum["time_nodes"] = tr.times.size();
  sum["n_modes"] = tr.n_modes();
  sum["t_final"] = tr.times.back();
  const auto& last = tr.norms.back();
  sum["final_norms"] = ojson{{"norm_Vgamma_u", last.vgamma_u},
                             {"norm_L2_dtu", last.l2_dtu},
                             {"norm_Vminusgamma_dalpha", last.vminusgamma_dalpha}};
  sum["warnings"] = tr.warnings;
  atomic_write((dir / "summary.json").string(), sum.dump(2) + "\n");
}

std::vector<double> final_state(const SolutionTrace& tr) {
  std::vector<double> v;
  const std::size_t j = tr.times.size() - 1;
  for (std::size_t i = 0; i < tr.n_modes(); ++i) v.push_back(tr.u(j, i));
  for (std::size_t i = 0; i < tr.n_modes(); ++i) v.push_back(tr.dtu(j, i));
  return v;
}

int run_solve(const std::string& kind, const std::string& config, const std::string& out_dir,
              bool allow_limit, std::ostream& out) {
  Scenario s = load_scenario(config, {allow_limit, ""});
  if (!out_dir.empty()) s.output = out_dir;
  const fs::path dir(s.output);
  const auto grid = scenario_grid(s);
  if (kind == "linear") {
    if (s.nonlinearity) throw ConfigError("nonlinearity: given to a linear solve; use 'solve semilinear'");
    const auto p = make_linear_problem(s);
    const auto tr = solve_linear(p, grid, false);
    std::optional<Regime> regime;
    if (s.alpha < 2.0) regime = classify(p.op->q_A(), s.alpha);
    write_run_files(dir, s, tr, "linear", regime);
    out << "linear solve: " << tr.times.size() << " time nodes, " << tr.n_modes() << " modes -> "
        << dir.string() << "\n";
    for (const auto& w : tr.warnings) out << "warning: " << w << "\n";
    return 0;
  }
  const auto p = make_semilinear_problem(s);
  const auto res = run_semilinear(p, grid, s.picard);
  write_run_files(dir, s, res.trace, "semilinear", res.regime);
  const auto sc = strong_solution_check(res, p, s.strong_q, s.strong_r);
  ojson o;
  o["status"] = to_string(res.status);
  o["t_end"] = res.t_end;
  o["T_est"] = res.status == RunOutcome::Status::maximal_time_detected ? ojson(res.t_est) : ojson(nullptr);
  o["reason"] = res.reason;
  ojson wins = ojson::array();
  for (const auto& w : res.windows) {
    wins.push_back(ojson{{"start", w.start},
                         {"end", w.end},
                         {"iterations", w.iterations},
                         {"contraction", w.contraction}});
  }
  o["windows"] = wins;
  o["strong_check"] = ojson{{"computed", sc.computed},
                            {"exponent", sc.exponent},
                            {"norm", std::isfinite(sc.norm) ? ojson(sc.norm) : ojson(nullptr)},
                            {"finite", sc.finite},
                            {"strong", sc.strong},
                            {"verdict", sc.verdict}};
  o["regime"] = regime_json(res.regime);
  o["warnings"] = res.warnings;
  atomic_write((dir / "outcome.json").string(), o.dump(2) + "\n");
  out << "semilinear solve: " << to_string(res.status);
  if (res.status == RunOutcome::Status::maximal_time_detected) out << " at T_est = " << format_double(res.t_est);
  out << ", " << res.windows.size() << " windows -> " << dir.string() << "\n";
  return 0;
}

int run_convergence(const std::string& kind, const std::string& config,
                    const std::vector<double>& dts, const std::string& out_dir, bool allow_limit,
                    std::optional<double> min_order, std::ostream& out) {
  Scenario s = load_scenario(config, {allow_limit, ""});
  if (!out_dir.empty()) s.output = out_dir;
  std::function<std::vector<double>(double)> runner;
  if (kind == "linear") {
    if (s.nonlinearity) throw ConfigError("nonlinearity: given to a linear study");
    const auto p = make_linear_problem(s);
    runner = [p, t_end = s.t_end](double dt) {
      return final_state(solve_linear(p, TimeGrid::uniform(t_end, dt), false));
    };
  } else {
    const auto p = make_semilinear_problem(s);
    runner = [p, t_end = s.t_end, cfg = s.picard](double dt) {
      const auto r = run_semilinear(p, TimeGrid::uniform(t_end, dt), cfg);
      if (r.status != RunOutcome::Status::completed) {
        throw AccuracyError("convergence: run with dt = " + format_double(dt) + " stopped early (" +
                            r.reason + ")");
      }
      return final_state(r.trace);
    };
  }
  for (double dt : dts) {
    const double steps = std::round(s.t_end / dt);
    if (!(dt > 0.0) || std::abs(steps * dt - s.t_end) > 1e-12 * std::max(1.0, s.t_end)) {
      throw ConfigError("--dts: " + format_double(dt) + " does not divide t_end");
    }
  }
  const auto cs = self_convergence(runner, dts);
  ojson j;
  j["solver"] = kind;
  j["dts"] = cs.dts;
  j["differences"] = cs.differences;
  j["orders"] = cs.orders;
  j["exact"] = cs.exact;
  j["min_order"] = cs.exact ? ojson("exact") : ojson(cs.min_order());
  atomic_write((fs::path(s.output) / "convergence.json").string(), j.dump(2) + "\n");
  out << "differences:";
  for (double d : cs.differences) out << ' ' << format_double(d);
  out << "\norders:";
  if (cs.exact) out << " exact";
  for (double o : cs.orders) out << ' ' << format_double(o);
  out << "\n";
  if (min_order && !cs.exact && !(cs.min_order() >= *min_order)) {
    out << "observed order below " << format_double(*min_order) << "\n";
    return 3;
  }
  return 0;
}

ExtendedReal parse_extended(const std::string& s) {
  if (s == "inf" || s == "infinity") return ExtendedReal::infinity();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || !std::isfinite(v)) throw ConfigError("--qa: expected a number or 'inf'");
  return ExtendedReal::finite(v);
}

void print_report(const VerifyReport& r, std::ostream& out) {
  for (const auto& c : r.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << " value "
        << format_double(c.value) << " threshold " << format_double(c.threshold);
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  out << r.suite << ": " << (r.passed() ? "passed" : "FAILED") << "\n";
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fractional-in-time wave equations D^alpha u + A u = f(u), 1 < alpha <= 2", "mlwave"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker cap (default: MLWAVE_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  auto* ml = app.add_subcommand("ml", "Mittag-Leffler function");
  ml->require_subcommand(1);
  auto* ml_eval = ml->add_subcommand("eval", "print E_{alpha,beta}(x)");
  double alpha = 0.0, beta = 1.0, x = 0.0, tol = MLPrecision{}.rel_tol;
  ml_eval->add_option("--alpha", alpha)->required();
  ml_eval->add_option("--beta", beta)->required();
  ml_eval->add_option("--x", x)->required();
  ml_eval->add_option("--tol", tol, "relative tolerance");
  auto* ml_verify = ml->add_subcommand("verify", "run the identity suite");

  auto* crit = app.add_subcommand("criticality", "critical order and admissible growth");
  std::string qa, op_kind, base_kind;
  int dim = 1;
  double power = 0.5, qparam = 4.0, table_s = 0.75;
  bool table = false;
  auto* qa_opt = crit->add_option("--qa", qa, "Sobolev exponent q_A (number or inf)");
  auto* op_opt = crit->add_option("--operator", op_kind, "operator kind");
  qa_opt->excludes(op_opt);
  crit->add_option("--dim", dim, "space dimension for --operator")->check(CLI::PositiveNumber);
  crit->add_option("--power", power, "fractional power s");
  crit->add_option("--base", base_kind, "base operator of a fractional power");
  crit->add_option("--q", qparam, "exponent where any finite q is allowed");
  crit->add_option("--alpha", alpha)->required();
  crit->add_flag("--table", table, "also print the exponent tables as CSV");
  crit->add_option("--table-s", table_s, "fractional power used in the tables");

  auto* solve = app.add_subcommand("solve", "run a scenario");
  std::string kind, config, out_dir;
  bool allow_limit = false;
  solve->add_option("kind", kind)->required()->check(CLI::IsMember({"linear", "semilinear"}));
  solve->add_option("--config", config)->required();
  solve->add_option("--out", out_dir, "output directory (overrides the scenario)");
  solve->add_flag("--allow-limit", allow_limit, "admit alpha = 2");

  auto* verify = app.add_subcommand("verify", "run an invariant suite and write report.json");
  std::string suite;
  verify->add_option("--suite", suite)->required()->check(CLI::IsMember(verify_suites()));
  verify->add_option("--out", out_dir, "directory for report.json (default: .)");

  auto* conv = app.add_subcommand("convergence", "self-convergence study of a scenario");
  std::vector<double> dts;
  std::optional<double> min_order;
  conv->add_option("kind", kind)->required()->check(CLI::IsMember({"linear", "semilinear"}));
  conv->add_option("--config", config)->required();
  conv->add_option("--dts", dts, "step sizes, each half the previous")->required()->delimiter(',');
  conv->add_option("--out", out_dir, "output directory (overrides the scenario)");
  conv->add_option("--min-order", min_order, "exit 3 when the observed order is lower");
  conv->add_flag("--allow-limit", allow_limit, "admit alpha = 2");

  // name the offending word instead of CLI11's generic complaint
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads") {
      ++i;
      continue;
    }
    if (a.rfind("-", 0) == 0) continue;
    if (app.get_subcommand_no_throw(a) == nullptr) {
      err << "error: unknown subcommand '" << a << "'\n" << app.help();
      return 1;
    }
    break;
  }

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }
  if (threads > 0) set_thread_count(threads);

  try {
    if (ml->parsed()) {
      if (ml_eval->parsed()) {
        MLPrecision p;
        p.rel_tol = tol;
        p.validate();
        out << format_double(ml_e(MLQuery{alpha, beta, x}, p)) << "\n";
        return 0;
      }
      if (ml_verify->parsed()) {
        const auto r = run_verify_suite("ml");
        print_report(r, out);
        return r.passed() ? 0 : 3;
      }
    }
    if (crit->parsed()) {
      ExtendedReal q_A = ExtendedReal::infinity();
      if (!qa.empty()) {
        q_A = parse_extended(qa);
      } else if (!op_kind.empty()) {
        OperatorSpecConfig cfg;
        cfg.kind = operator_kind_from_string(op_kind);
        if (base_kind.empty()) {
          cfg.base = dim == 1 ? OperatorKind::dirichlet_laplacian_interval
                              : OperatorKind::dirichlet_laplacian_box;
        } else {
          cfg.base = operator_kind_from_string(base_kind);
        }
        cfg.lengths.assign(static_cast<std::size_t>(dim), 3.141592653589793);
        cfg.power = power;
        cfg.q = qparam;
        cfg.validate();
        q_A = q_A_of(cfg);
      } else {
        throw ConfigError("criticality: give --qa or --operator");
      }
      out << regime_json(classify(q_A, alpha)).dump(2) << "\n";
      if (table) out << exponent_tables_csv(exponent_tables(qparam, table_s));
      return 0;
    }
    if (solve->parsed()) return run_solve(kind, config, out_dir, allow_limit, out);
    if (verify->parsed()) {
      const auto r = run_verify_suite(suite);
      const fs::path dir(out_dir.empty() ? "." : out_dir);
      atomic_write((dir / "report.json").string(), r.json());
      print_report(r, out);
      return r.passed() ? 0 : 3;
    }
    if (conv->parsed()) {
      return run_convergence(kind, config, dts, out_dir, allow_limit, min_order, out);
    }
  } catch (const ConfigError& e) {
    for (const auto& it : e.items()) err << "error: " << it << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const OverflowError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const AccuracyError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace mlwave
