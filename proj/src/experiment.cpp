#include "mcm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>

#include "mcm/dirichlet.hpp"
#include "mcm/functions.hpp"
#include "mcm/levelset.hpp"
#include "mcm/measure.hpp"
#include "mcm/mollify.hpp"
#include "mcm/msolve.hpp"
#include "mcm/perron.hpp"

namespace mcm {

namespace fs = std::filesystem;
namespace fn = mcm::functions;
using io::json;

json ConfigError::to_json() const { return json{{"error", "invalid config"}, {"path", path_}, {"message", what()}}; }

namespace {

std::string F(double v) { return io::format_double(v); }
std::string B(bool v) { return v ? "true" : "false"; }

/// Object reader that remembers which keys were consumed so leftovers can be
/// reported as typos.
class Params {
 public:
  Params(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string sub(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& at(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(sub(key), "missing required key");
    return *v;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(sub(key), "missing required key");
      return *fallback;
    }
    if (!v->is_number()) throw ConfigError(sub(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(sub(key), "expected a finite number");
    return x;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(sub(key), "must be positive");
    return x;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(sub(key), "missing required key");
      return *fallback;
    }
    if (!v->is_number_integer()) throw ConfigError(sub(key), "expected an integer");
    return v->get<int>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(sub(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(sub(key), "missing required key");
      return *fallback;
    }
    if (!v->is_string()) throw ConfigError(sub(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(sub(key), "missing required key");
      return *fallback;
    }
    if (!v->is_array()) throw ConfigError(sub(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(sub(key) + "/" + std::to_string(i), "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  Point point(const std::string& key, std::optional<Point> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(sub(key), "missing required key");
      return *fallback;
    }
    if (v->is_number()) return {v->get<double>(), 0.0};
    if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number())
      return {(*v)[0].get<double>(), (*v)[1].get<double>()};
    throw ConfigError(sub(key), "expected a point [x, y]");
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError(sub(item.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class F>
auto guarded(const std::string& path, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractError& e) {
    throw ConfigError(path, e.what());
  } catch (const json::exception& e) {
    throw ConfigError(path, e.what());
  }
}

FieldFunction named_function(Params& p, const std::string& path) {
  const std::string name = p.text("name");
  FieldFunction f;
  if (name == "constant") {
    f = fn::constant(p.number("value"));
  } else if (name == "affine") {
    f = fn::affine(p.number("c0", 0.0), p.number("a1", 0.0), p.number("a2", 0.0));
  } else if (name == "cone") {
    f = fn::cone(p.point("center", Point{0, 0}), p.number("slope", 1.0));
  } else if (name == "paraboloid") {
    f = fn::paraboloid(p.number("k"), p.point("center", Point{0, 0}));
  } else if (name == "hemisphere") {
    f = fn::hemisphere(p.positive("R"), p.point("center", Point{0, 0}));
  } else if (name == "scherk") {
    f = fn::scherk();
  } else if (name == "jump") {
    f = fn::jump_profile(p.number("a"), p.number("b"), p.number("delta"), p.number("sigma"), p.number("c"));
  } else if (name == "log_pole") {
    f = fn::log_pole(p.point("center", Point{0, 0}));
  } else if (name == "ridge") {
    f = fn::ridge(p.positive("M"), p.positive("base", 0.1), p.positive("power", 4.0));
  } else {
    throw ConfigError(path + "/name", "unknown function '" + name +
                                          "' (constant, affine, cone, paraboloid, hemisphere, scherk, jump, "
                                          "log_pole, ridge)");
  }
  p.finish();
  return f;
}

Shape shape_of(const json& j, const std::string& path) {
  return guarded(path, [&] { return io::shape_from_json(j); });
}

/// Shape pulled inwards by `m`.
Shape shrink(const Shape& s, double m) {
  Shape r = s;
  switch (s.kind) {
    case ShapeKind::Disk: r.radius -= m; break;
    case ShapeKind::Annulus:
      r.radius -= m;
      r.inner_radius += m;
      break;
    case ShapeKind::Rectangle:
      for (int a = 0; a < 2; ++a) {
        r.lo[a] += m;
        r.hi[a] -= m;
      }
      break;
    case ShapeKind::Interval:
      r.lo[0] += m;
      r.hi[0] -= m;
      break;
  }
  const bool empty = s.kind == ShapeKind::Disk || s.kind == ShapeKind::Annulus
                         ? r.radius <= r.inner_radius
                         : r.lo[0] >= r.hi[0] || (s.kind == ShapeKind::Rectangle && r.lo[1] >= r.hi[1]);
  if (empty) throw ContractError("domain too small for the requested margin");
  return r;
}

SolveOptions solver_options(const json* j, const std::string& path) {
  SolveOptions o;
  if (!j) return o;
  Params p(*j, path);
  o.max_iter = p.integer("max_iter", o.max_iter);
  o.tol = p.positive("tol", o.tol);
  o.armijo = p.positive("armijo", o.armijo);
  o.backtracks = p.integer("backtracks", o.backtracks);
  const std::string init = p.text("init", to_string(o.init));
  guarded(p.sub("init"), [&] { o.init = init_policy_from_string(init); });
  if (o.init == InitPolicy::Provided) throw ConfigError(p.sub("init"), "'provided' is internal to continuation runs");
  p.finish();
  guarded(path, [&] { o.validate(); });
  return o;
}

std::vector<TestBall> explicit_balls(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of {center, radius}");
  std::vector<TestBall> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Params p(j[i], path + "/" + std::to_string(i));
    out.push_back({p.point("center", Point{0, 0}), p.positive("radius")});
    p.finish();
  }
  return out;
}

/// Output files plus their hashes, in write order.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& rel, const std::string& s) {
    io::write_text(dir_ / rel, s);
    files_.push_back({rel, io::hex64(io::fnv1a(s))});
  }
  void csv(const std::string& rel, const io::CsvTable& t) { text(rel, t.str()); }
  void json_file(const std::string& rel, const json& j) { text(rel, j.dump(2) + "\n"); }

  const std::vector<OutputFile>& list() const { return files_; }

 private:
  fs::path dir_;
  std::vector<OutputFile> files_;
};

using Checks = std::vector<Assertion>;

void check(Checks& c, std::string name, bool pass, std::string detail = "") {
  c.push_back({std::move(name), pass, std::move(detail)});
}

std::string res_tag(int res) { return std::to_string(res); }

// ---------------------------------------------------------------- solve

struct SolvePlan {
  Shape shape;
  FieldFunction f, phi;
  std::optional<FieldFunction> exact;
  SolveOptions solver;
  double rate = 3.0;

  static SolvePlan parse(const ExperimentConfig& c) {
    SolvePlan s;
    s.shape = shape_of(c.domain, "/domain");
    Params p(c.params, "/params");
    s.f = p.has("f") ? function_from_json(p.at("f"), p.sub("f")) : fn::constant(0.0);
    s.phi = function_from_json(p.at("phi"), p.sub("phi"));
    if (p.has("exact")) s.exact = function_from_json(p.at("exact"), p.sub("exact"));
    s.solver = solver_options(p.find("solver"), p.sub("solver"));
    s.rate = p.positive("rate", 3.0);
    p.finish();
    return s;
  }

  void run(const ExperimentConfig& c, Outputs& out, Checks& checks) const {
    io::CsvTable log{{"region", "h", "iters", "residual", "converged", "error"}, {}};
    std::vector<double> errors;
    const std::string region = io::shape_to_json(shape).at("type").get<std::string>();
    for (int res : c.resolutions) {
      const DomainMask m = make_grid(shape, res);
      const ScalarField fs = sample_function(f, m);
      const SolveOutcome s = solve_dirichlet(m, &fs, sample_function(phi, m), solver);
      double err = std::numeric_limits<double>::quiet_NaN();
      if (exact) {
        err = 0.0;
        for (std::size_t k = 0; k < m.grid.size(); ++k)
          if (m.interior(k)) err = std::max(err, std::abs(s.solution[k] - (*exact)(m.grid.center(k))));
        errors.push_back(err);
      }
      log.add({region, F(m.grid.h), std::to_string(s.iterations), F(s.residual), B(s.converged), F(err)});
      out.json_file("field_" + res_tag(res) + ".json", io::field_to_json(s.solution));
      check(checks, "converged at resolution " + res_tag(res), s.converged,
            "residual " + F(s.residual) + (s.converged ? "" : ", " + s.diagnosis));
    }
    out.csv("runs.csv", log);
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double ratio = errors[i - 1] / errors[i];
      check(checks,
            "error ratio " + res_tag(c.resolutions[i - 1]) + " -> " + res_tag(c.resolutions[i]) + " >= " + F(rate),
            ratio >= rate, "ratio " + F(ratio));
    }
  }
};

// ---------------------------------------------------------------- perron

std::vector<std::pair<int, double>> level_schedule(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of [level, eps]");
  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    const std::string at = path + "/" + std::to_string(i);
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number())
      throw ConfigError(at, "expected [level, eps]");
    const int level = e[0].get<int>();
    const double eps = e[1].get<double>();
    if (level < 0 || level > 10) throw ConfigError(at, "level must lie in [0, 10]");
    if (!(eps > 0.0) || eps > std::ldexp(0.25, -level)) throw ConfigError(at, "eps must lie in (0, 2^-level/4]");
    out.emplace_back(level, eps);
  }
  return out;
}

void check_schedule_resolutions(const std::vector<std::pair<int, double>>& schedule, const std::vector<int>& res,
                                const std::string& path) {
  for (std::size_t i = 0; i < schedule.size(); ++i)
    for (int r : res)
      if (schedule[i].second < 2.0 / r)
        throw ConfigError(path + "/" + std::to_string(i),
                          "eps is below 2h at resolution " + std::to_string(r));
}

struct PerronPlan {
  Shape shape;
  FieldFunction u;
  std::vector<std::pair<int, double>> schedule;
  SolveOptions solver = lift_defaults();

  static PerronPlan parse(const ExperimentConfig& c) {
    PerronPlan s;
    s.shape = shape_of(c.domain, "/domain");
    Params p(c.params, "/params");
    s.u = function_from_json(p.at("u"), p.sub("u"));
    s.schedule = level_schedule(p.at("schedule"), p.sub("schedule"));
    check_schedule_resolutions(s.schedule, c.resolutions, p.sub("schedule"));
    if (p.has("solver")) s.solver = solver_options(p.find("solver"), p.sub("solver"));
    p.finish();
    return s;
  }

  void run(const ExperimentConfig& c, Outputs& out, Checks& checks) const {
    for (int res : c.resolutions) {
      const DomainMask m = make_grid(shape, res);
      const auto seq = smooth_subharmonic_sequence(sample_function(u, m), m, schedule, solver);
      io::CsvTable sweep{{"level", "ball", "center_x", "center_y", "max_increase", "iters"}, {}};
      io::CsvTable terms{{"level", "eps", "defect", "sup_change", "monotone", "rejected", "aborted"}, {}};
      for (const auto& t : seq) {
        const BallCover cover = make_ball_cover(m, t.level);
        for (const auto& r : t.trace.balls) {
          const Point& x = cover.centers.at(r.index);
          sweep.add({std::to_string(t.level), std::to_string(r.index), F(x[0]), F(x[1]), F(r.max_increase),
                     std::to_string(r.iterations)});
        }
        terms.add({std::to_string(t.level), F(t.eps), F(t.defect), F(t.trace.sup_change), B(t.trace.monotone),
                   std::to_string(t.trace.rejected), B(t.trace.aborted)});
        check(checks, "sweep level " + std::to_string(t.level) + " monotone at resolution " + res_tag(res),
              t.trace.monotone && !t.trace.aborted, "sup change " + F(t.trace.sup_change));
      }
      out.csv("sweep_" + res_tag(res) + ".csv", sweep);
      out.csv("sequence_" + res_tag(res) + ".csv", terms);
      if (!seq.empty()) out.json_file("field_" + res_tag(res) + ".json", io::field_to_json(seq.back().field));
    }
  }
};

// ---------------------------------------------------------------- measure

struct MeasurePlan {
  Shape shape;
  FieldFunction u;
  std::string sequence = "mollified";  // mollified | perron | single
  std::vector<double> eps_h{8, 4, 2};
  std::vector<std::pair<int, double>> schedule;
  std::vector<TestBall> balls;  // explicit family
  struct Random {
    int count = 10;
    double rmin = 0.1, rmax = 0.5;
  };
  std::optional<Random> random;
  double gap_h = 4.0;
  std::vector<double> expected;
  double rel_tol = 0.02;
  bool convergence = false;

  static MeasurePlan parse(const ExperimentConfig& c) {
    MeasurePlan s;
    s.shape = shape_of(c.domain, "/domain");
    Params p(c.params, "/params");
    s.u = function_from_json(p.at("u"), p.sub("u"));
    if (p.has("sequence")) {
      Params q(p.at("sequence"), p.sub("sequence"));
      s.sequence = q.text("type");
      if (s.sequence == "mollified") {
        s.eps_h = q.numbers("eps_h", s.eps_h);
        if (s.eps_h.empty()) throw ConfigError(q.sub("eps_h"), "need at least one width");
        for (double e : s.eps_h)
          if (!(e >= 2.0)) throw ConfigError(q.sub("eps_h"), "widths are multiples of h and at least 2");
      } else if (s.sequence == "perron") {
        s.schedule = level_schedule(q.at("schedule"), q.sub("schedule"));
        check_schedule_resolutions(s.schedule, c.resolutions, q.sub("schedule"));
      } else if (s.sequence != "single") {
        throw ConfigError(q.sub("type"), "expected mollified, perron or single");
      }
      q.finish();
    }
    const json& balls = p.at("balls");
    if (balls.is_object()) {
      Params q(balls, p.sub("balls"));
      Params r(q.at("random"), q.sub("random"));
      Random rnd;
      rnd.count = r.integer("count", rnd.count);
      rnd.rmin = r.positive("rmin", rnd.rmin);
      rnd.rmax = r.positive("rmax", rnd.rmax);
      if (rnd.count < 1 || rnd.rmin > rnd.rmax) throw ConfigError(q.sub("random"), "need count >= 1 and rmin <= rmax");
      r.finish();
      q.finish();
      s.random = rnd;
    } else {
      s.balls = explicit_balls(balls, p.sub("balls"));
    }
    s.gap_h = p.positive("gap_h", s.gap_h);
    s.expected = p.numbers("expected", std::vector<double>{});
    if (!s.expected.empty() && s.expected.size() != s.balls.size())
      throw ConfigError(p.sub("expected"), "need one value per explicit ball");
    s.rel_tol = p.positive("rel_tol", s.rel_tol);
    s.convergence = p.flag("assert_convergence", false);
    p.finish();
    return s;
  }

  void run(const ExperimentConfig& c, Outputs& out, Checks& checks) const {
    io::CsvTable conv{{"resolution", "h", "ball", "r", "mu", "expected", "rel_error"}, {}};
    std::vector<double> worst_per_res;
    for (int res : c.resolutions) {
      const DomainMask m = make_grid(shape, res);
      const double h = m.grid.h;
      const ScalarField us = sample_function(u, m);
      std::vector<ScalarField> seq;
      std::vector<double> defects;
      double reach = 0.0;
      if (sequence == "mollified") {
        for (double e : eps_h) seq.push_back(mollify_field(us, e * h));
        reach = *std::max_element(eps_h.begin(), eps_h.end()) * h;
      } else if (sequence == "perron") {
        for (auto& t : smooth_subharmonic_sequence(us, m, schedule)) {
          reach = std::max(reach, t.eps);
          defects.push_back(t.defect);
          seq.push_back(std::move(t.field));
        }
      } else {
        seq.push_back(us);
      }
      std::vector<TestBall> family = balls;
      if (random) {
        const DomainMask admissible = classify(m.grid, shrink(shape, reach + 2 * h));
        family = random_ball_family(admissible, random->count, random->rmin, random->rmax, gap_h * h, c.seed).balls;
      }
      std::vector<const ScalarField*> ptrs;
      for (const auto& f : seq) ptrs.push_back(&f);
      const BallMeasureTable t = seq.size() == 1 ? ball_measure_table(seq[0], family)
                                                 : ball_measure_table(ptrs, family, defects);
      io::CsvTable rows{{"center_x", "center_y", "r", "mu", "method", "band", "converged"}, {}};
      double worst = 0.0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        rows.add({F(r.ball.center[0]), F(r.ball.center[1]), F(r.ball.radius), F(r.mu), to_string(t.method),
                  F(r.band), B(r.converged)});
        if (!expected.empty()) {
          const double e = std::abs(r.mu / expected[i] - 1.0);
          worst = std::max(worst, e);
          conv.add({res_tag(res), F(h), std::to_string(i), F(r.ball.radius), F(r.mu), F(expected[i]), F(e)});
        }
      }
      out.csv("balls_" + res_tag(res) + ".csv", rows);
      check(checks, "ball measures settled at resolution " + res_tag(res), t.converged,
            "eps_neg " + F(t.eps_neg));
      if (!expected.empty()) worst_per_res.push_back(worst);
    }
    if (!expected.empty()) {
      out.csv("convergence.csv", conv);
      check(checks, "finest resolution within " + F(rel_tol) + " of expected", worst_per_res.back() <= rel_tol,
            "worst relative error " + F(worst_per_res.back()));
      if (convergence)
        for (std::size_t i = 1; i < worst_per_res.size(); ++i)
          check(checks, "error nonincreasing " + res_tag(c.resolutions[i - 1]) + " -> " + res_tag(c.resolutions[i]),
                worst_per_res[i] <= worst_per_res[i - 1], F(worst_per_res[i - 1]) + " -> " + F(worst_per_res[i]));
    }
  }
};

// ---------------------------------------------------------------- harnack

struct HarnackPlan {
  Shape shape;
  std::vector<FieldFunction> members;
  ClipBall ball;
  std::vector<double> levels;
  SolveOptions solver;
  bool increasing = false;
  std::optional<double> center_bound;

  static HarnackPlan parse(const ExperimentConfig& c) {
    HarnackPlan s;
    s.shape = shape_of(c.domain, "/domain");
    Params p(c.params, "/params");
    const json& m = p.at("members");
    if (!m.is_array() || m.empty()) throw ConfigError(p.sub("members"), "expected a nonempty array of boundary data");
    for (std::size_t i = 0; i < m.size(); ++i)
      s.members.push_back(function_from_json(m[i], p.sub("members") + "/" + std::to_string(i)));
    {
      Params b(p.at("ball"), p.sub("ball"));
      s.ball = {b.point("center", Point{0, 0}), b.positive("radius")};
      b.finish();
    }
    if (const json* l = p.find("levels")) {
      if (l->is_object()) {
        Params q(*l, p.sub("levels"));
        const double t0 = q.positive("t0"), t1 = q.positive("t_max");
        q.finish();
        if (t1 <= t0) throw ConfigError(p.sub("levels"), "need t0 < t_max");
        s.levels = geometric_levels(t0, t1);
      } else {
        s.levels = p.numbers("levels");
      }
    }
    s.solver = solver_options(p.find("solver"), p.sub("solver"));
    s.increasing = p.flag("increasing", false);
    if (p.has("center_bound")) s.center_bound = p.number("center_bound");
    p.finish();
    return s;
  }

  void run(const ExperimentConfig& c, Outputs& out, Checks& checks) const {
    io::CsvTable rows{{"resolution", "member", "name", "sup", "inf", "ratio", "center_value"}, {}};
    for (int res : c.resolutions) {
      const DomainMask m = make_grid(shape, res);
      io::CsvTable psi{{"member", "t", "psi"}, {}};
      double prev = -std::numeric_limits<double>::infinity();
      bool mono = true;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const SolveOutcome s = solve_dirichlet(m, nullptr, sample_function(members[i], m), solver);
        const HarnackReport r = harnack_report(s.solution, ball, levels);
        const std::string tag = "member " + std::to_string(i) + " at resolution " + res_tag(res);
        check(checks, tag + " solved", s.converged, "residual " + F(s.residual));
        check(checks, tag + " finite ratio", !r.refused && std::isfinite(r.ratio),
              r.refused ? r.reason : "ratio " + F(r.ratio));
        rows.add({res_tag(res), std::to_string(i), members[i].name, F(r.sup), F(r.inf), F(r.ratio),
                  F(r.center_value)});
        for (const auto& row : r.psi) psi.add({std::to_string(i), F(row.t), F(row.psi)});
        mono = mono && r.ratio > prev;
        prev = r.ratio;
        if (center_bound)
          check(checks, tag + " centre value <= " + F(*center_bound) + " + tol",
                r.center_value <= *center_bound + solver.tol, "u(0) = " + F(r.center_value));
      }
      if (increasing) check(checks, "ratio strictly increasing at resolution " + res_tag(res), mono);
      out.csv("psi_" + res_tag(res) + ".csv", psi);
    }
    out.csv("harnack.csv", rows);
  }
};

// ---------------------------------------------------------------- dirichlet

MeasureSpec measure_spec(const json& j, const std::string& path) {
  MeasureSpec nu;
  Params p(j, path);
  if (p.has("density")) nu.density = function_from_json(p.at("density"), p.sub("density"));
  nu.lipschitz = p.number("lipschitz", 0.0);
  auto circle = [&](const json& e, const std::string& at, bool typed) {
    Params q(e, at);
    if (typed && q.text("type") != "circle") throw ConfigError(q.sub("type"), "only circle curves are supported");
    nu.circles.push_back({q.point("center", Point{0, 0}), q.positive("radius"), q.number("lambda")});
    q.finish();
  };
  for (const char* key : {"circles", "curves"}) {
    if (const json* c = p.find(key)) {
      if (!c->is_array()) throw ConfigError(p.sub(key), "expected an array");
      for (std::size_t i = 0; i < c->size(); ++i)
        circle((*c)[i], p.sub(key) + "/" + std::to_string(i), std::string(key) == "curves");
    }
  }
  if (const json* a = p.find("atoms")) {
    if (!a->is_array()) throw ConfigError(p.sub("atoms"), "expected an array");
    for (std::size_t i = 0; i < a->size(); ++i) {
      Params q((*a)[i], p.sub("atoms") + "/" + std::to_string(i));
      nu.atoms.push_back({q.number("x"), q.number("mass")});
      q.finish();
    }
  }
  p.finish();
  return nu;
}

struct DirichletPlan {
  Shape shape;
  MeasureSpec nu;
  FieldFunction phi;
  DirichletOptions opts;

  static DirichletPlan parse(const ExperimentConfig& c) {
    DirichletPlan s;
    s.shape = shape_of(c.domain, "/domain");
    Params p(c.params, "/params");
    s.nu = measure_spec(p.at("measure"), p.sub("measure"));
    s.phi = p.has("phi") ? function_from_json(p.at("phi"), p.sub("phi")) : fn::constant(0.0);
    ContinuationSchedule& sch = s.opts.schedule;
    sch.deltas = p.numbers("deltas");
    sch.eps_factor = p.positive("eps_factor", sch.eps_factor);
    sch.eps_floor_h = p.positive("eps_floor_h", sch.eps_floor_h);
    sch.warm_start = p.flag("warm_start", sch.warm_start);
    sch.solver = solver_options(p.find("solver"), p.sub("solver"));
    if (const json* e = p.find("eta_family")) {
      Params q(*e, p.sub("eta_family"));
      EtaFamily fam;
      fam.rectangles = q.flag("rectangles", fam.rectangles);
      fam.rect_cap = q.integer("rect_cap", fam.rect_cap);
      fam.ball_radii = q.numbers("ball_radii", std::vector<double>{});
      fam.ball_stride = q.integer("ball_stride", fam.ball_stride);
      if (fam.rect_cap < 0 || fam.ball_stride < 1) throw ConfigError(q.sub("ball_stride"), "need rect_cap >= 0, ball_stride >= 1");
      q.finish();
      s.opts.eta_family = fam;
    }
    if (const json* v = p.find("validation_balls")) s.opts.validation_balls = explicit_balls(*v, p.sub("validation_balls"));
    s.opts.recovery_tol = p.positive("recovery_tol", s.opts.recovery_tol);
    p.finish();
    for (int res : c.resolutions) {
      const DomainMask m = guarded("/domain", [&] { return make_grid(s.shape, res); });
      guarded("/params/deltas", [&] { sch.validate(m.grid.h); });
      guarded("/params/measure", [&] { s.nu.validate(m); });
    }
    return s;
  }

  void run(const ExperimentConfig& c, Outputs& out, Checks& checks) const {
    io::CsvTable summary{{"resolution", "h", "eta_star", "exploratory", "unsupported_by_theory", "extrapolation_gap",
                          "total_violations", "max_recovery_error"},
                         {}};
    for (int res : c.resolutions) {
      const DomainMask m = make_grid(shape, res);
      const DirichletResult r = solve_measure_dirichlet(m, nu, sample_function(phi, m), opts);
      io::CsvTable stages{{"delta", "eps", "iters", "residual", "min_u", "max_u", "monotonicity_violations"}, {}};
      for (const auto& s : r.records)
        stages.add({F(s.delta), F(s.eps), std::to_string(s.iterations), F(s.residual), F(s.min_u), F(s.max_u),
                    std::to_string(s.monotonicity_violations)});
      out.csv("stages_" + res_tag(res) + ".csv", stages);
      out.json_file("field_" + res_tag(res) + ".json", io::field_to_json(r.solution));
      if (r.completed) out.json_file("limit_" + res_tag(res) + ".json", io::field_to_json(r.limit));
      if (!r.recovery.rows.empty()) {
        io::CsvTable rec{{"center_x", "center_y", "r", "mu", "nu", "band"}, {}};
        for (std::size_t i = 0; i < r.recovery.rows.size(); ++i) {
          const auto& row = r.recovery.rows[i];
          rec.add({F(row.ball.center[0]), F(row.ball.center[1]), F(row.ball.radius), F(row.mu), F(r.nu_balls[i]),
                   F(row.band)});
        }
        out.csv("recovery_" + res_tag(res) + ".csv", rec);
      }
      summary.add({res_tag(res), F(m.grid.h), r.eta ? F(r.eta->eta_star) : "", B(r.exploratory),
                   B(r.unsupported_by_theory), F(r.extrapolation_gap), std::to_string(r.total_violations),
                   F(r.max_recovery_error)});
      const std::string at = " at resolution " + res_tag(res);
      check(checks, "all stages converged" + at, r.completed, r.diagnosis);
      check(checks, "no monotonicity violations" + at, r.total_violations == 0,
            std::to_string(r.total_violations) + " violations");
      if (!opts.validation_balls.empty())
        check(checks, "measure recovered" + at, r.recovered, "max error " + F(r.max_recovery_error) + " of nu(Omega)");
    }
    out.csv("summary.csv", summary);
  }
};

// ---------------------------------------------------------------- verify

struct VerifyPlan {
  static VerifyPlan parse(const ExperimentConfig& c) {
    Params p(c.params, "/params");
    p.finish();
    return {};
  }

  void run(const ExperimentConfig& c, Outputs& out, Checks& checks) const {
    using std::numbers::pi;
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double a0 = U(rng), a1 = U(rng), a2 = U(rng);
    const FieldFunction plane = fn::affine(a0, a1, a2);

    io::CsvTable table{{"check", "pass", "value"}, {}};
    auto record = [&](const std::string& name, bool pass, double value) {
      table.add({name, B(pass), F(value)});
      check(checks, name, pass, "value " + F(value));
    };

    const DomainMask line = make_grid(Shape::interval(-1.0, 1.0), 100);
    record("interval has 201 centres", line.grid.extent[0] == 201, line.grid.extent[0]);
    record("interval has 2 boundary cells", line.count(CellKind::Boundary) == 2,
           static_cast<double>(line.count(CellKind::Boundary)));

    const DomainMask sq = make_grid(Shape::rectangle({0, 0}, {1, 1}), 32);
    const double per = set_geometry(domain_set(sq)).perimeter;
    record("unit square perimeter 4 +- 2h", std::abs(per - 4.0) <= 2 * sq.grid.h, per);

    const DomainMask disk = make_grid(Shape::disk({0, 0}, 1.0), 32);
    const ScalarField zero = sample_function(fn::constant(0.0), disk);
    record("zero function samples to zero", zero.max_finite() == 0.0 && zero.min_finite() == 0.0, zero.max_finite());

    const ScalarField c3 = mollify_field(sample_function(fn::constant(3.0), disk), 3 * disk.grid.h);
    double moll = 0.0;
    for (std::size_t k = 0; k < c3.size(); ++k)
      if (c3.finite(k)) moll = std::max(moll, std::abs(c3[k] - 3.0));
    record("mollified constant is constant", moll <= 1e-12, moll);

    const DiscreteSet above = superlevel_set(zero, 1.0);
    record("superlevel above the max is empty", above.cells == 0, static_cast<double>(above.cells));

    auto sup_abs = [](const ScalarField& g) {
      double s = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (g.finite(k)) s = std::max(s, std::abs(g[k]));
      return s;
    };
    const double d5 = sup_abs(h1_density(sample_function(fn::constant(5.0), disk)).density);
    record("density of a constant vanishes", d5 == 0.0, d5);
    const ScalarField up = sample_function(plane, disk);
    const double dp = sup_abs(h1_density(up).density);
    record("density of a plane vanishes", dp <= 1e-12, dp);
    const double fl = std::abs(boundary_flux(up, Interface::circle({0.1, -0.1}, 0.5)));
    record("flux of a plane through a circle vanishes", fl <= 1e-12, fl);

    const DomainMask sq64 = make_grid(Shape::rectangle({0, 0}, {1, 1}), 64);
    const ScalarField z64 = sample_function(fn::constant(0.0), sq64);
    const double area = area_functional(z64, z64, z64, sq64).total;
    record("flat area on the unit square", std::abs(area - 1.0) <= 0.02, area);

    const SolveOutcome s = solve_dirichlet(disk, nullptr, up);
    const double se = sup_distance(s.solution, up);
    record("plane trace solves to the plane", s.converged && se <= 1e-10, se);

    const LiftResult lift = perron_lift(up, {{0.0, 0.0}, 0.5});
    const double le = sup_distance(lift.field, up);
    record("lift of a plane is the plane", !lift.refused && le <= 10 * lift_defaults().tol, le);

    const BallMeasureTable bt = ball_measure_table(up, {{{0, 0}, 0.3}, {{0.2, 0.1}, 0.5}});
    double bm = 0.0;
    for (const auto& r : bt.rows) bm = std::max(bm, std::abs(r.mu));
    record("plane has zero measure", bm <= 1e-12, bm);

    const HarnackReport hc = harnack_report(sample_function(fn::constant(2.0), disk), {{0, 0}, 0.9}, {});
    record("harnack ratio of a constant is 1", !hc.refused && hc.ratio == 1.0, hc.ratio);
    const HarnackReport ha = harnack_report(sample_function(fn::affine(1.0, 0.5, 0.0), disk), {{0, 0}, 1.0}, {});
    record("harnack ratio of 1 + x/2 is 5/3", !ha.refused && std::abs(ha.ratio - 5.0 / 3.0) <= 1e-15, ha.ratio);

    const CellMeasure none = CellMeasure::from_density(zero, disk);
    const double eta0 = eta_margin_rectangles(none).eta_star;
    record("zero measure has eta* = 1", eta0 == 1.0, eta0);

    const double bv = truncated_bv_norm(zero, 0.3, {{0, 0}, 0.5});
    record("zero field has zero truncated BV norm", bv == 0.0, bv);

    MeasureSpec ring;
    ring.circles.push_back({{0, 0}, 0.5, 1.0});
    const DomainMask d64 = make_grid(Shape::disk({0, 0}, 1.0), 64);
    const ScalarField g = mollify_measure(ring, 2 * d64.grid.h, d64);
    double mass = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (d64.interior(k)) mass += g[k] * d64.grid.cell_volume();
    record("unit ring mollifies to mass pi", std::abs(mass / pi - 1.0) <= 0.005, mass);

    const AdmissibilityReport adm = boundary_admissibility(Shape::disk({0, 0}, 2.0), fn::constant(0.0));
    record("zero density margin equals boundary curvature", adm.pass && std::abs(adm.min_margin - 0.5) <= 1e-12,
           adm.min_margin);

    DirichletOptions o;
    o.schedule.deltas = {0.4, 0.2, 0.1};
    const DomainMask d16 = make_grid(Shape::disk({0, 0}, 1.0), 16);
    const DirichletResult dr = solve_measure_dirichlet(d16, MeasureSpec{}, sample_function(fn::constant(0.0), d16), o);
    double dz = 0.0;
    for (const auto& st : dr.stages) dz = std::max(dz, sup_abs(st));
    record("zero measure and trace stay zero", dr.completed && dz == 0.0, dz);

    std::vector<ScalarField> consts;
    for (double cst : {1.0, 2.0, 3.0}) consts.push_back(sample_function(fn::constant(-cst), disk));
    std::vector<GradientSample> fam;
    for (const auto& uc : consts) fam.push_back({&uc, {0, 0}, 1.0});
    const EnvelopeFit fit = gradient_bound_report(fam);
    record("constant family gives a degenerate envelope", fit.degenerate, static_cast<double>(fit.zero_gradient));

    out.csv("verify.csv", table);
  }
};

// ---------------------------------------------------------------- dispatch

using Runner = std::function<void(Outputs&, Checks&)>;

Runner plan_for(const ExperimentConfig& c) {
  if (c.kind == "solve") return [p = SolvePlan::parse(c), &c](Outputs& o, Checks& k) { p.run(c, o, k); };
  if (c.kind == "perron") return [p = PerronPlan::parse(c), &c](Outputs& o, Checks& k) { p.run(c, o, k); };
  if (c.kind == "measure") return [p = MeasurePlan::parse(c), &c](Outputs& o, Checks& k) { p.run(c, o, k); };
  if (c.kind == "harnack") return [p = HarnackPlan::parse(c), &c](Outputs& o, Checks& k) { p.run(c, o, k); };
  if (c.kind == "dirichlet") return [p = DirichletPlan::parse(c), &c](Outputs& o, Checks& k) { p.run(c, o, k); };
  if (c.kind == "verify") return [p = VerifyPlan::parse(c), &c](Outputs& o, Checks& k) { p.run(c, o, k); };
  throw ConfigError("/kind", "unknown experiment kind '" + c.kind + "' (solve, perron, measure, harnack, dirichlet, verify)");
}

void collect_files(const json& j, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (const auto& item : j.items()) {
      if (item.key() == "file" && item.value().is_string()) out.push_back(item.value().get<std::string>());
      else collect_files(item.value(), out);
    }
  } else if (j.is_array()) {
    for (const auto& e : j) collect_files(e, out);
  }
}

/// Config echo without the output directory, so reruns elsewhere compare equal.
json echo(const ExperimentConfig& c) {
  json j = c.to_json();
  j.erase("out");
  return j;
}

}  // namespace

FieldFunction function_from_json(const json& j, const std::string& path) {
  return guarded(path, [&]() -> FieldFunction {
    if (j.is_number()) return fn::constant(j.get<double>());
    if (j.is_string()) return fn::expression(j.get<std::string>());
    if (j.is_object()) {
      Params p(j, path);
      if (p.has("file")) {
        const std::string file = p.text("file");
        p.finish();
        try {
          return io::field_lookup(io::field_from_json(io::read_json(file)), "file:" + file);
        } catch (const std::runtime_error& e) {
          throw ConfigError(path + "/file", e.what());
        }
      }
      return named_function(p, path);
    }
    throw ConfigError(path, "expected a number, a formula string or a named function object");
  });
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  Params p(j, "");
  c.kind = p.text("kind");
  const bool verify = c.kind == "verify";
  if (const json* d = p.find("domain")) c.domain = *d;
  else if (!verify) throw ConfigError("/domain", "missing required key");
  if (const json* r = p.find("resolutions")) {
    if (!r->is_array()) throw ConfigError("/resolutions", "expected an array of integers");
    for (std::size_t i = 0; i < r->size(); ++i) {
      if (!(*r)[i].is_number_integer()) throw ConfigError("/resolutions/" + std::to_string(i), "expected an integer");
      c.resolutions.push_back((*r)[i].get<int>());
    }
  } else if (verify) {
    c.resolutions = {32};
  } else {
    throw ConfigError("/resolutions", "missing required key");
  }
  if (const json* q = p.find("params")) c.params = *q;
  c.out = p.text("out", std::string{});
  if (const json* s = p.find("seed")) {
    if (!s->is_number_integer() || s->get<std::int64_t>() < 0) throw ConfigError("/seed", "expected a nonnegative integer");
    c.seed = s->get<std::uint64_t>();
  }
  p.finish();
  return c;
}

json ExperimentConfig::to_json() const {
  return json{{"kind", kind},   {"domain", domain}, {"resolutions", resolutions},
              {"params", params}, {"out", out.string()}, {"seed", seed}};
}

void ExperimentConfig::validate() const {
  if (out.empty()) throw ConfigError("/out", "an output directory is required");
  if (resolutions.empty()) throw ConfigError("/resolutions", "need at least one resolution");
  for (std::size_t i = 0; i < resolutions.size(); ++i)
    if (resolutions[i] < 4 || resolutions[i] > 4096)
      throw ConfigError("/resolutions/" + std::to_string(i), "resolution must lie in [4, 4096]");
  if (kind != "verify" || !domain.is_null()) shape_of(domain, "/domain");
  plan_for(*this);
}

json Manifest::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back(json{{"path", o.path}, {"fnv1a", o.hash}});
  json as = json::array();
  for (const auto& a : assertions) as.push_back(json{{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  return json{{"config", config}, {"inputs_hash", inputs_hash}, {"outputs", std::move(outs)},
              {"assertions", std::move(as)}, {"pass", pass}};
}

Manifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Runner run = plan_for(config);

  Manifest m;
  m.config = echo(config);
  std::string inputs = m.config.dump();
  std::vector<std::string> files;
  collect_files(config.params, files);
  for (const auto& f : files) inputs += "\n" + f + "\n" + io::read_text(f);
  m.inputs_hash = io::hex64(io::fnv1a(inputs));

  fs::create_directories(config.out);
  Outputs out(config.out);
  run(out, m.assertions);
  m.outputs = out.list();
  m.pass = std::all_of(m.assertions.begin(), m.assertions.end(), [](const Assertion& a) { return a.pass; });
  io::write_json(config.out / "manifest.json", m.to_json());
  return m;
}

std::vector<Manifest> run_batch(const std::vector<ExperimentConfig>& configs) {
  std::set<fs::path> dirs;
  for (const auto& c : configs) {
    c.validate();
    if (!dirs.insert(fs::weakly_canonical(c.out)).second)
      throw ConfigError("/out", "two experiments share the directory " + c.out.string());
  }
  std::vector<std::future<Manifest>> jobs;
  for (const auto& c : configs) jobs.push_back(std::async(std::launch::async, [&c] { return run_experiment(c); }));
  std::vector<Manifest> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

Manifest write_report(const fs::path& root) {
  std::vector<fs::path> found;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == "manifest.json") found.push_back(e.path());
  std::sort(found.begin(), found.end());

  io::CsvTable table{{"experiment", "kind", "inputs_hash", "assertions", "failed", "pass"}, {}};
  Manifest m;
  m.config = json{{"kind", "report"}, {"root", root.string()}};
  std::string inputs;
  for (const auto& p : found) {
    const std::string text = io::read_text(p);
    inputs += text;
    const json j = json::parse(text);
    const auto& as = j.at("assertions");
    const auto failed = std::count_if(as.begin(), as.end(), [](const json& a) { return !a.at("pass").get<bool>(); });
    const std::string name = fs::relative(p.parent_path(), root).generic_string();
    table.add({name, j.at("config").at("kind").get<std::string>(), j.at("inputs_hash").get<std::string>(),
               std::to_string(as.size()), std::to_string(failed), B(j.at("pass").get<bool>())});
    check(m.assertions, name, j.at("pass").get<bool>(), std::to_string(failed) + " failed assertions");
  }
  m.inputs_hash = io::hex64(io::fnv1a(inputs));
  Outputs out(root);
  out.csv("summary.csv", table);
  m.outputs = out.list();
  m.pass = std::all_of(m.assertions.begin(), m.assertions.end(), [](const Assertion& a) { return a.pass; });
  return m;
}

}  // namespace mcm
