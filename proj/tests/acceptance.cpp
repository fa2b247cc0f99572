// Acceptance suite: one PASS/FAIL line per criterion. Exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcm/dirichlet.hpp"
#include "mcm/functions.hpp"
#include "mcm/levelset.hpp"
#include "mcm/measure.hpp"
#include "mcm/mollify.hpp"
#include "mcm/msolve.hpp"
#include "mcm/perron.hpp"

using namespace mcm;
namespace fn = mcm::functions;
using std::numbers::pi;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double interior_error(const ScalarField& u, const FieldFunction& exact, const DomainMask& m) {
  double e = 0.0;
  for (std::size_t k = 0; k < m.grid.size(); ++k)
    if (m.interior(k)) e = std::max(e, std::abs(u[k] - exact(m.grid.center(k))));
  return e;
}

std::vector<const ScalarField*> pointers(const std::vector<ScalarField>& v) {
  std::vector<const ScalarField*> p;
  for (const auto& f : v) p.push_back(&f);
  return p;
}

// 1: hemisphere and Scherk convergence.
void solver_regression(Verdict& v) {
  struct Case {
    const char* name;
    Shape shape;
    FieldFunction exact;
    double f;
  };
  const Case cases[] = {{"hemisphere", Shape::disk({0, 0}, 2.0), fn::hemisphere(4.0), 0.5},
                        {"scherk", Shape::rectangle({-1, -1}, {1, 1}), fn::scherk(), 0.0}};
  for (const Case& c : cases) {
    std::vector<double> err;
    double slowest = 0.0;
    for (int res : {32, 64, 128}) {
      const DomainMask m = make_grid(c.shape, res);
      const ScalarField f = sample_function(fn::constant(c.f), m);
      const auto t0 = Clock::now();
      const SolveOutcome s = solve_dirichlet(m, &f, sample_function(c.exact, m));
      slowest = std::max(slowest, seconds_since(t0));
      v.require(s.converged, std::string(c.name) + " converged at res " + std::to_string(res));
      err.push_back(interior_error(s.solution, c.exact, m));
    }
    v.detail << " " << c.name << " err=" << err[0] << "," << err[1] << "," << err[2]
             << " slowest=" << slowest << "s;";
    v.require(err[0] / err[1] >= 3.0 && err[1] / err[2] >= 3.0, std::string(c.name) + " ratio >= 3");
    v.require(slowest < 30.0, std::string(c.name) + " solve < 30 s");
  }
}

// 2: discrete divergence theorem.
void divergence_theorem(Verdict& v) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  std::vector<Interface> faces;
  for (int i = 0; i < 20; ++i) {
    if (i % 2 == 0) {
      faces.push_back(Interface::circle({0.3 * U(rng), 0.3 * U(rng)}, 0.15 + 0.35 * std::abs(U(rng))));
    } else {
      const Point lo{-0.4 + 0.1 * U(rng), -0.4 + 0.1 * U(rng)};  // corners stay inside B_0.75
      faces.push_back(Interface::rectangle(lo, {lo[0] + 0.2 + 0.5 * std::abs(U(rng)), lo[1] + 0.2 + 0.5 * std::abs(U(rng))}));
    }
  }
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double a = U(rng), b = U(rng), c = 3 * U(rng), d = 3 * U(rng), e = U(rng);
    FieldFunction f{"random smooth", [=](const Point& x) {
                      return a * std::sin(c * x[0] + d * x[1]) + b * std::cos(d * x[0] - c * x[1]) + e * x[0] * x[1];
                    }};
    const ScalarField u = sample_function(f, m);
    const DensityResult dr = h1_density(u);
    for (const auto& ic : faces) worst = std::max(worst, std::abs(boundary_flux(u, ic) - density_sum(dr.density, ic)));
  }
  v.detail << " max |flux - density sum| = " << worst << " over 400 pairs;";
  v.require(worst <= 1e-12, "gap <= 1e-12");
}

struct ConeData {
  DomainMask mask;
  std::vector<ScalarField> mollified;
  std::vector<ScalarField> perron;
  std::vector<double> defects;
};

ConeData cone_sequences() {
  ConeData d{make_grid(Shape::disk({0, 0}, 2.0), 128), {}, {}, {}};
  const double h = d.mask.grid.h;
  const ScalarField u = sample_function(fn::cone(), d.mask);
  for (double e : {8 * h, 4 * h, 2 * h}) d.mollified.push_back(mollify_field(u, e));
  for (auto& t : smooth_subharmonic_sequence(u, d.mask, {{2, 1.0 / 16}, {3, 1.0 / 32}, {4, 1.0 / 64}})) {
    d.perron.push_back(std::move(t.field));
    d.defects.push_back(t.defect);
  }
  return d;
}

// 3: cone measure from both sequences, 1D atom.
void cone_measure(Verdict& v, const ConeData& d) {
  const std::vector<TestBall> balls{{{0, 0}, 0.25}, {{0, 0}, 0.5}, {{0, 0}, 0.75}};
  v.require(d.perron.size() == 3, "three Perron-sweep terms");
  const BallMeasureTable tm = ball_measure_table(pointers(d.mollified), balls);
  const BallMeasureTable tp = ball_measure_table(pointers(d.perron), balls, d.defects);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const double exact = std::sqrt(2.0) * pi * balls[i].radius;
    const double em = tm.rows[i].mu / exact - 1.0, ep = tp.rows[i].mu / exact - 1.0;
    v.detail << " r=" << balls[i].radius << " moll " << 100 * em << "% perron " << 100 * ep << "%;";
    v.require(std::abs(em) <= 0.02, "mollified within 2%");
    v.require(std::abs(ep) <= 0.02, "perron within 2%");
  }
  const DomainMask m1 = make_grid(Shape::interval(-1.0, 1.0), 200);
  const InterfaceMass a = interface_singular_mass(sample_function(fn::cone(), m1), Interface::points(0.0, 0.0), 2 * m1.grid.h);
  v.require(a.mass.has_value(), "1D atom settles");
  if (a.mass) {
    v.detail << " 1D atom " << *a.mass << ";";
    v.require(std::abs(*a.mass / std::sqrt(2.0) - 1.0) <= 0.01, "atom within 1%");
  }
}

// 4: sandwich between the two cone sequences.
void sandwich(Verdict& v, const ConeData& d) {
  const double h = d.mask.grid.h;
  // Kernel supports stay defined well inside B₂.
  const DomainMask admissible = classify(d.mask.grid, Shape::disk({0, 0}, 1.8));
  const BallFamily fam = random_ball_family(admissible, 12, 0.2, 0.6, 4 * h, 42);
  const WeakConvergenceReport r = weak_convergence_check(pointers(d.mollified), pointers(d.perron), fam, 0.03, 0.1);
  v.detail << " L1 gap " << r.l1_gap << ", worst excess " << r.worst.excess() << " over " << r.pairs.size()
           << " pairs;";
  v.require(!r.refused, "not refused: " + r.reason);
  v.require(r.pass, "every pair within 3%");
}

// 5: Perron lift properties.
void perron_properties(Verdict& v) {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 48);
  const double slack = 10.0 * lift_defaults().tol;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<ScalarField> fields{sample_function(fn::cone(), m)};
  for (int i = 0; i < 3; ++i) {
    // Smooth convex: PD quadratic plus a convex exponential ridge.
    const double a = 0.5 + std::abs(U(rng)), b = 0.5 + std::abs(U(rng)), c = 0.4 * U(rng);
    const double p = U(rng), q = U(rng), s = 0.3 * std::abs(U(rng)), dx = U(rng), dy = U(rng);
    fields.push_back(sample_function(
        FieldFunction{"random convex",
                      [=](const Point& x) {
                        return a * x[0] * x[0] + b * x[1] * x[1] + 2 * c * x[0] * x[1] + p * x[0] + q * x[1] +
                               s * std::exp(dx * x[0] + dy * x[1]);
                      }},
        m));
  }
  const TestBall big{{0.05, -0.05}, 0.5}, small{{0.1, 0.0}, 0.3};
  double worst_mono = 0.0, worst_idem = 0.0, worst_nest = 0.0, worst_out = 0.0;
  for (const auto& u : fields) {
    const LiftResult lb = perron_lift(u, big);
    const LiftResult ls = perron_lift(u, small);
    v.require(!lb.refused && !ls.refused && !lb.rejected && !ls.rejected, "lifts solved");
    const LiftResult twice = perron_lift(lb.field, big);
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (!u.finite(k)) continue;
      worst_mono = std::max(worst_mono, u[k] - lb.field[k]);
      worst_idem = std::max(worst_idem, std::abs(twice.field[k] - lb.field[k]));
      worst_nest = std::max(worst_nest, ls.field[k] - lb.field[k]);
      const Point x = m.grid.center(k);
      if (distance(x, big.center) >= big.radius) worst_out = std::max(worst_out, std::abs(lb.field[k] - u[k]));
    }
  }
  v.detail << " monotone " << worst_mono << ", idempotent " << worst_idem << ", nested " << worst_nest
           << ", outside " << worst_out << " (slack " << slack << ");";
  v.require(worst_mono <= slack, "monotone");
  v.require(worst_idem <= slack, "idempotent");
  v.require(worst_nest <= slack, "nested");
  v.require(worst_out == 0.0, "outside invariance");
}

// 6: Harnack ratios.
void harnack(Verdict& v) {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const ClipBall ball{{0, 0}, 1.0 - 2 * m.grid.h};
  for (int k = 1; k <= 5; ++k) {
    const double amp = 0.2 * k;
    const FieldFunction phi{"positive trace", [=](const Point& x) {
                              return 1.5 + amp * std::cos(k * std::atan2(x[1], x[0]) + 0.3 * k);
                            }};
    const SolveOutcome s = solve_dirichlet(m, nullptr, sample_function(phi, m));
    v.require(s.converged, "positive graph solved");
    const HarnackReport r = harnack_report(s.solution, ball, geometric_levels(0.5, 2.5));
    v.require(!r.refused && std::isfinite(r.ratio) && r.inf > 0.0, "finite ratio");
    bool mono = true;
    for (std::size_t i = 1; i < r.psi.size(); ++i) mono = mono && r.psi[i].psi <= r.psi[i - 1].psi;
    v.require(!r.psi.empty() && mono, "psi recorded and nonincreasing");
    v.detail << " k=" << k << " ratio " << r.ratio << ";";
  }
  double prev = 0.0;
  const double tol = SolveOptions{}.tol;
  for (double M : {2.0, 4.0, 8.0}) {
    const SolveOutcome s = solve_dirichlet(m, nullptr, sample_function(fn::ridge(M), m));
    v.require(s.converged, "ridge solved");
    const HarnackReport r = harnack_report(s.solution, ball, {});
    v.require(!r.refused, "ridge ratio defined");
    v.detail << " M=" << M << " ratio " << r.ratio << " u(0) " << r.center_value << ";";
    v.require(r.ratio > prev, "ratio strictly increasing in M");
    v.require(r.center_value <= 1.0 + tol, "u(0) <= 1 + tol");
    prev = r.ratio;
  }
}

struct RingData {
  DomainMask mask;
  DirichletResult result;
  double seconds = 0.0;
};

RingData ring_problem() {
  RingData d{make_grid(Shape::disk({0, 0}, 1.0), 64), {}, 0.0};
  MeasureSpec nu;
  nu.circles.push_back({{0.0, 0.0}, 0.5, 0.5});
  DirichletOptions o;
  o.schedule.deltas = {0.4, 0.2, 0.1, 0.05, 0.025};
  EtaFamily fam;
  fam.rect_cap = 0;
  fam.ball_radii = {0.2, 0.3, 0.4, 0.5 + d.mask.grid.h, 0.6, 0.75, 0.9};
  fam.ball_stride = 8;
  o.eta_family = fam;
  o.validation_balls = {{{0, 0}, 0.3}, {{0, 0}, 0.6}, {{0, 0}, 0.9}};
  const auto t0 = Clock::now();
  d.result = solve_measure_dirichlet(d.mask, nu, sample_function(fn::constant(0.0), d.mask), o);
  d.seconds = seconds_since(t0);
  return d;
}

// 7: decay of the sublevel volumes.
void decay(Verdict& v, const RingData& d) {
  const DirichletResult& r = d.result;
  v.require(r.eta.has_value(), "eta certified");
  if (!r.eta) return;
  v.detail << " eta* " << r.eta->eta_star << ";";
  v.require(r.eta->eta_star >= 0.4, "eta* >= 0.4");
  const DecayReport dr = decay_bound_check(r.solution, d.mask, r.eta->eta_star);
  v.detail << " vanish at t=" << dr.vanish << ", anchor " << dr.anchor << ", predicted " << dr.predicted << ";";
  v.require(std::isfinite(dr.vanish), "finite vanishing level");
  v.require(dr.dominates, "envelope dominates phi^(1/n)");
  v.require(dr.pass, "vanishing level within the predicted bound");
  const double T = decay_threshold(0.2);
  v.detail << " T(0.2) = " << T << ";";
  v.require(std::abs(T - 2.967) <= 0.01, "T(0.2) = 2.967 +- 0.01");
}

// 8: exhaustive η oracle.
void eta_oracle(Verdict& v) {
  const DomainMask m = make_grid(Shape::rectangle({0, 0}, {1, 1}), 8);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> D(0, 64);
  ScalarField g(m.grid);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (m.inside(k)) g.set(k, D(rng) / 64.0);  // dyadic: every partial sum is exact
  bool all_exact = true;
  for (const ScalarField* dens : {&g}) {
    const CellMeasure nu = CellMeasure::from_density(*dens, m);
    const EtaMarginReport r = eta_margin_rectangles(nu);
    double best = 0.0;
    std::size_t count = 0;
    const Grid& gr = m.grid;
    for (int j0 = 0; j0 < gr.extent[1]; ++j0)
      for (int i0 = 0; i0 < gr.extent[0]; ++i0)
        for (int j1 = j0; j1 < gr.extent[1]; ++j1)
          for (int i1 = i0; i1 < gr.extent[0]; ++i1) {
            double mass = 0.0;
            bool inside = true;
            for (int j = j0; j <= j1; ++j)
              for (int i = i0; i <= i1; ++i) {
                const std::size_t k = gr.index(i, j);
                inside = inside && nu.inside[k];
                mass += nu.mass[k];
              }
            if (!inside) continue;
            ++count;
            best = std::max(best, mass / (2.0 * ((i1 - i0 + 1) + (j1 - j0 + 1)) * gr.h));
          }
    all_exact = all_exact && r.max_ratio == best && r.tested == count;
    v.detail << " random dyadic: scan " << r.max_ratio << " oracle " << best << " (" << count << " sets);";
  }
  v.require(all_exact, "scan equals oracle exactly");
  const CellMeasure unit = CellMeasure::from_density(sample_function(fn::constant(1.0), m), m);
  const EtaMarginReport r = eta_margin_rectangles(unit);
  v.detail << " unit density eta* " << r.eta_star << ";";
  v.require(std::abs(r.eta_star - 0.75) <= 1e-12, "eta* = 0.75");
}

// 9: measure-data pipeline.
void pipeline(Verdict& v, const RingData& d) {
  const DirichletResult& r = d.result;
  v.detail << " stages " << r.records.size() << ", violations " << r.total_violations << ", max recovery error "
           << 100 * r.max_recovery_error << "% of nu(Omega), extrapolation gap " << r.extrapolation_gap << ", "
           << d.seconds << "s;";
  v.require(r.completed, "all stages converged");
  v.require(r.total_violations == 0, "no monotonicity violations");
  v.require(r.recovered, "recovery within 5%");
  for (std::size_t i = 0; i < r.recovery.rows.size(); ++i)
    v.detail << " r=" << r.recovery.rows[i].ball.radius << " mu " << r.recovery.rows[i].mu << " nu " << r.nu_balls[i]
             << ";";
}

struct JumpData {
  DomainMask mask;
  ScalarField uc, u0;
  std::vector<ScalarField> seq_c, seq_0;
};

JumpData jump_sequences() {
  JumpData d{make_grid(Shape::disk({0, 0}, 2.0), 512), {}, {}, {}, {}};
  const double h = d.mask.grid.h;
  d.uc = sample_function(fn::jump_profile(2, 2, 0.25, 0.25, 0.5), d.mask);
  d.u0 = sample_function(fn::jump_profile(2, 2, 0.25, 0.25, 0.0), d.mask);
  for (double e : {16 * h, 8 * h, 4 * h, 2 * h}) {
    d.seq_c.push_back(mollify_field(d.uc, e));
    d.seq_0.push_back(mollify_field(d.u0, e));
  }
  return d;
}

// 10: non-uniqueness witness.
void non_uniqueness(Verdict& v, const JumpData& d) {
  const double gap = sup_distance(d.uc, d.u0);
  v.detail << " |u_c - u_0| = " << gap << ";";
  v.require(std::abs(gap - 0.5) <= 1e-12, "sup distance = c");
  const DomainMask admissible = classify(d.mask.grid, Shape::disk({0, 0}, 1.8));
  const BallFamily fam = random_ball_family(admissible, 10, 0.2, 0.6, 4 * d.mask.grid.h, 11);
  const BallMeasureTable tc = ball_measure_table(pointers(d.seq_c), fam.balls);
  const BallMeasureTable t0 = ball_measure_table(pointers(d.seq_0), fam.balls);
  double worst = 0.0;
  for (std::size_t i = 0; i < fam.balls.size(); ++i)
    worst = std::max(worst, std::abs(tc.rows[i].mu - t0.rows[i].mu) / std::abs(t0.rows[i].mu));
  v.detail << " worst relative measure gap " << 100 * worst << "%;";
  v.require(worst <= 0.02, "measures agree within 2%");
  // Shells start at 4h so that no flux stencil reaches the cells cut by the jump.
  const InterfaceMass im = interface_singular_mass(d.uc, Interface::circle({0, 0}, 1.0), 4 * d.mask.grid.h);
  v.require(im.mass.has_value(), "interface mass settles");
  if (im.mass) {
    v.detail << " interface mass " << *im.mass << " band " << im.band << ";";
    v.require(std::abs(*im.mass) <= im.band, "interface mass 0 within band");
  }
}

// 11: gradient envelope over solved minimal graphs.
void gradient_envelope(Verdict& v) {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<ScalarField> sols;
  for (int i = 0; i < 10; ++i) {
    const double c0 = 2 * U(rng), a = U(rng), b = U(rng), q = 1.5 * U(rng);
    const FieldFunction phi{"trace", [=](const Point& x) {
                              return c0 + a * x[0] + b * x[1] + q * (x[0] * x[0] - x[1] * x[1]);
                            }};
    const SolveOutcome s = solve_dirichlet(m, nullptr, sample_function(phi, m));
    v.require(s.converged, "member solved");
    sols.push_back(s.solution);
  }
  std::vector<GradientSample> fam;
  for (const auto& u : sols) fam.push_back({&u, {0, 0}, 0.5});
  const EnvelopeFit f = gradient_bound_report(fam);
  v.detail << " envelope log|Du(0)| <= " << f.c1 << " + " << f.c2 << "*|u(0)|/r, max residual " << f.max_residual
           << ";";
  v.require(!f.degenerate, "nondegenerate fit");
  v.require(f.max_residual <= 1e-12, "all points on or below the envelope");
}

// 12: truncated BV norms along the u_c sequence.
void bv_bound(Verdict& v, const JumpData& d) {
  std::vector<double> n;
  for (const auto& f : d.seq_c) n.push_back(truncated_bv_norm(f, 1.0, {{0, 0}, 1.5}));
  const auto [lo, hi] = std::minmax_element(n.end() - 4, n.end());
  v.detail << " norms";
  for (double x : n) v.detail << " " << x;
  v.detail << ", max/min " << *hi / *lo << ";";
  v.require(*hi / *lo <= 1.5, "max/min <= 1.5");
}

}  // namespace

int main() {
  int failed = 0;
  auto run = [&](int id, const char* name, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      body(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s [%d] %s (%.1fs):%s\n", v.pass ? "PASS" : "FAIL", id, name, seconds_since(t0), v.detail.str().c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  };

  run(1, "solver regression", solver_regression);
  run(2, "discrete divergence theorem", divergence_theorem);
  {
    ConeData cone;
    run(3, "cone measure", [&](Verdict& v) {
      cone = cone_sequences();
      cone_measure(v, cone);
    });
    run(4, "weak-convergence sandwich", [&](Verdict& v) { sandwich(v, cone); });
  }
  run(5, "perron properties", perron_properties);
  run(6, "harnack behaviour", harnack);
  {
    RingData ring;
    run(7, "decay of sublevel volumes", [&](Verdict& v) {
      ring = ring_problem();
      decay(v, ring);
    });
    run(8, "eta-margin brute force", eta_oracle);
    run(9, "measure-data pipeline", [&](Verdict& v) { pipeline(v, ring); });
  }
  {
    JumpData jump;
    run(10, "non-uniqueness witness", [&](Verdict& v) {
      jump = jump_sequences();
      non_uniqueness(v, jump);
    });
    run(11, "gradient envelope", gradient_envelope);
    run(12, "truncated BV bound", [&](Verdict& v) { bv_bound(v, jump); });
  }
  std::printf("%d of 12 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
