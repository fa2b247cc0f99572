#include "mcm/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mcm/mollify.hpp"

namespace mcm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bump(double s2) { return s2 < 1.0 ? std::exp(1.0 / (s2 - 1.0)) : 0.0; }

Point circle_point(const CircleDensity& c, double theta) {
  return {c.center[0] + c.radius * std::cos(theta), c.center[1] + c.radius * std::sin(theta)};
}

/// Mass of circle `c` inside Ω (and inside B_r(b) when r > 0), by a fine
/// midpoint rule; exact when the circle is wholly in or out.
double circle_mass(const CircleDensity& c, const Shape& shape, const Point* b, double r) {
  const int n = 1 << 14;
  const double dl = kTwoPi * c.radius / n;
  long double m = 0.0L;
  for (int k = 0; k < n; ++k) {
    const Point p = circle_point(c, kTwoPi * (k + 0.5) / n);
    if (shape.signed_distance(p) <= 0.0) continue;
    if (b && distance(p, *b) >= r) continue;
    m += dl;
  }
  return static_cast<double>(m) * c.lambda;
}

/// Adds `mass` at `p` to g spread with the normalized bump over interior
/// cells within ε. Falls back to the nearest interior cell when the bump
/// sees none.
void scatter(const DomainMask& mask, const Point& p, double mass, double eps, std::vector<double>& g) {
  const Grid& gr = mask.grid;
  const int reach = static_cast<int>(std::ceil(eps / gr.h)) + 1;
  const int ic = static_cast<int>(std::lround((p[0] - gr.origin[0]) / gr.h));
  const int jc = gr.dim == 2 ? static_cast<int>(std::lround((p[1] - gr.origin[1]) / gr.h)) : 0;
  const int jr = gr.dim == 2 ? reach : 0;
  std::vector<std::pair<std::size_t, double>> w;
  double total = 0.0;
  for (int j = jc - jr; j <= jc + jr; ++j)
    for (int i = ic - reach; i <= ic + reach; ++i) {
      if (!gr.contains(i, j)) continue;
      const std::size_t k = gr.index(i, j);
      if (!mask.interior(k)) continue;
      const Point x = gr.center(i, j);
      const double dy = gr.dim == 2 ? x[1] - p[1] : 0.0;
      const double s2 = ((x[0] - p[0]) * (x[0] - p[0]) + dy * dy) / (eps * eps);
      const double b = bump(s2);
      if (b <= 0.0) continue;
      w.emplace_back(k, b);
      total += b;
    }
  const double vol = gr.cell_volume();
  if (total <= 0.0) {
    if (gr.contains(ic, jc) && mask.interior(gr.index(ic, jc))) g[gr.index(ic, jc)] += mass / vol;
    return;
  }
  for (const auto& [k, b] : w) g[k] += mass * b / (total * vol);
}

std::size_t cell_of(const Grid& g, const Point& p) {
  const int i = std::clamp(static_cast<int>(std::lround((p[0] - g.origin[0]) / g.h)), 0, g.extent[0] - 1);
  const int j =
      g.dim == 2 ? std::clamp(static_cast<int>(std::lround((p[1] - g.origin[1]) / g.h)), 0, g.extent[1] - 1) : 0;
  return g.index(i, j);
}

double boundary_sup(const DomainMask& mask, const ScalarField& phi) {
  double s = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < phi.size(); ++k)
    if (mask.boundary(k) && phi.finite(k)) s = std::max(s, phi[k]);
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void MeasureSpec::validate(const DomainMask& mask) const {
  const int dim = mask.grid.dim;
  if (!(lipschitz >= 0.0)) throw ContractError("measure: Lipschitz constant must be nonnegative");
  if (dim == 2 && !atoms.empty())
    throw ContractError(
        "measure: point masses are not admissible in 2D: a ball B_r around an atom of mass m has "
        "nu(B_r) >= m while |dB_r| = 2 pi r -> 0, so nu(w) < |dw| fails for small balls");
  if (dim == 1 && !circles.empty()) throw ContractError("measure: circle densities need a 2D domain");
  for (const auto& c : circles) {
    if (!(c.radius > 0.0)) throw ContractError("measure: circle radius must be positive");
    if (!(c.lambda >= 0.0)) throw ContractError("measure: circle density must be nonnegative");
  }
  for (const auto& a : atoms)
    if (!(a.mass >= 0.0)) throw ContractError("measure: atom mass must be nonnegative");
  if (density) {
    for (std::size_t k = 0; k < mask.grid.size(); ++k) {
      if (!mask.interior(k)) continue;
      const double v = (*density)(mask.grid.center(k));
      if (!std::isfinite(v) || v < 0.0)
        throw ContractError("measure: density '" + density->name + "' is negative or not finite at cell " +
                            std::to_string(k));
    }
  }
}

std::vector<std::size_t> MeasureSpec::touching_boundary(const Shape& shape, double margin) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const int n = 4096;
    for (int k = 0; k < n; ++k)
      if (shape.signed_distance(circle_point(circles[i], kTwoPi * (k + 0.5) / n)) <= margin) {
        out.push_back(i);
        break;
      }
  }
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (shape.signed_distance({atoms[i].x, 0.0}) <= margin) out.push_back(circles.size() + i);
  return out;
}

double MeasureSpec::total_mass(const DomainMask& mask) const {
  long double m = 0.0L;
  if (density)
    for (std::size_t k = 0; k < mask.grid.size(); ++k)
      if (mask.interior(k)) m += (*density)(mask.grid.center(k)) * mask.grid.cell_volume();
  for (const auto& c : circles) m += circle_mass(c, mask.shape, nullptr, 0.0);
  for (const auto& a : atoms)
    if (mask.shape.signed_distance({a.x, 0.0}) > 0.0) m += a.mass;
  return static_cast<double>(m);
}

double MeasureSpec::ball_mass(const DomainMask& mask, const Point& c, double r) const {
  long double m = 0.0L;
  const Grid& g = mask.grid;
  if (density)
    for (std::size_t k = 0; k < g.size(); ++k)
      if (mask.interior(k) && distance(g.center(k), c) < r) m += (*density)(g.center(k)) * g.cell_volume();
  for (const auto& cd : circles) m += circle_mass(cd, mask.shape, &c, r);
  for (const auto& a : atoms)
    if (mask.shape.signed_distance({a.x, 0.0}) > 0.0 && std::abs(a.x - c[0]) < r) m += a.mass;
  return static_cast<double>(m);
}

std::string MeasureSpec::describe() const {
  std::ostringstream os;
  bool first = true;
  auto sep = [&] {
    if (!first) os << " + ";
    first = false;
  };
  if (density) {
    sep();
    os << "density(" << density->name << ", L=" << lipschitz << ")";
  }
  for (const auto& c : circles) {
    sep();
    os << "circle(center=(" << c.center[0] << "," << c.center[1] << "), r=" << c.radius << ", lambda=" << c.lambda
       << ")";
  }
  for (const auto& a : atoms) {
    sep();
    os << "atom(x=" << a.x << ", m=" << a.mass << ")";
  }
  if (first) os << "zero";
  return os.str();
}

std::vector<Point> circle_nodes(const CircleDensity& c, double arc_step) {
  if (!(arc_step > 0.0)) throw ContractError("circle_nodes: arc step must be positive");
  const int n = std::max(8, static_cast<int>(std::ceil(kTwoPi * c.radius / arc_step)));
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(circle_point(c, kTwoPi * (k + 0.5) / n));
  return out;
}

CellMeasure cell_measure(const MeasureSpec& nu, const DomainMask& mask) {
  nu.validate(mask);
  const Grid& g = mask.grid;
  CellMeasure m;
  m.grid = g;
  m.mass.assign(g.size(), 0.0);
  m.inside.assign(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mask.interior(k)) continue;
    m.inside[k] = 1;
    if (nu.density) m.mass[k] = (*nu.density)(g.center(k)) * g.cell_volume();
  }
  for (const auto& c : nu.circles) {
    const auto nodes = circle_nodes(c, g.h / 4.0);
    const double dm = c.lambda * kTwoPi * c.radius / static_cast<double>(nodes.size());
    for (const Point& p : nodes) {
      if (mask.shape.signed_distance(p) <= 0.0) continue;
      const std::size_t k = cell_of(g, p);
      if (mask.interior(k)) m.mass[k] += dm;
    }
  }
  for (const auto& a : nu.atoms) {
    if (mask.shape.signed_distance({a.x, 0.0}) <= 0.0) continue;
    const std::size_t k = cell_of(g, {a.x, 0.0});
    if (mask.interior(k)) m.mass[k] += a.mass;
  }
  return m;
}

ScalarField mollify_measure(const MeasureSpec& nu, double eps, const DomainMask& mask, std::optional<double> arc_step) {
  nu.validate(mask);
  const Grid& g = mask.grid;
  const Kernel ker = make_kernel(g, eps);
  const double step = arc_step.value_or(g.h / 4.0);
  if (!(step > 0.0) || step > g.h * (1.0 + 1e-12))
    throw ContractError("mollify_measure: curve quadrature under-resolved (arc step " + fmt(step) + " > h = " +
                        fmt(g.h) + ")");

  std::vector<double> acc(g.size(), 0.0);
  if (nu.density) {
    // Kernel renormalized over interior cells: constants are reproduced and
    // no mass leaks across ∂Ω.
    std::vector<double> f(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (mask.interior(k)) f[k] = (*nu.density)(g.center(k));
#pragma omp parallel for schedule(static)
    for (int j = 0; j < g.extent[1]; ++j)
      for (int i = 0; i < g.extent[0]; ++i) {
        const std::size_t k = g.index(i, j);
        if (!mask.interior(k)) continue;
        long double s = 0.0L, w = 0.0L;
        for (std::size_t m = 0; m < ker.offsets.size(); ++m) {
          const int a = i + ker.offsets[m][0], b = j + ker.offsets[m][1];
          if (!g.contains(a, b)) continue;
          const std::size_t q = g.index(a, b);
          if (!mask.interior(q)) continue;
          s += static_cast<long double>(ker.weights[m]) * f[q];
          w += ker.weights[m];
        }
        acc[k] = w > 0.0L ? static_cast<double>(s / w) : f[k];
      }
  }
  for (const auto& c : nu.circles) {
    const auto nodes = circle_nodes(c, step);
    const double dm = c.lambda * kTwoPi * c.radius / static_cast<double>(nodes.size());
    for (const Point& p : nodes)
      if (mask.shape.signed_distance(p) > 0.0) scatter(mask, p, dm, eps, acc);
  }
  for (const auto& a : nu.atoms)
    if (mask.shape.signed_distance({a.x, 0.0}) > 0.0) scatter(mask, {a.x, 0.0}, a.mass, eps, acc);

  ScalarField out(g, Provenance::Mollified);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (mask.inside(k)) out.set(k, mask.interior(k) ? std::max(acc[k], 0.0) : 0.0);
  return out;
}

AdmissibilityReport boundary_admissibility(const Shape& shape, const FieldFunction& f, int samples) {
  AdmissibilityReport r;
  if (shape.kind != ShapeKind::Disk && shape.kind != ShapeKind::Annulus) {
    r.refused = true;
    r.reason = "no closed-form boundary mean curvature for " + shape.describe();
    return r;
  }
  if (samples < 1) throw ContractError("boundary_admissibility: need at least one sample");
  const double factor = 2.0;  // n/(n−1) with n = 2
  struct Ring {
    double radius, curvature;
  };
  std::vector<Ring> rings{{shape.radius, 1.0 / shape.radius}};
  if (shape.kind == ShapeKind::Annulus) rings.push_back({shape.inner_radius, -1.0 / shape.inner_radius});
  r.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& ring : rings)
    for (int k = 0; k < samples; ++k) {
      const double th = kTwoPi * k / samples;
      AdmissibilitySample s;
      s.x = {shape.center[0] + ring.radius * std::cos(th), shape.center[1] + ring.radius * std::sin(th)};
      s.curvature = ring.curvature;
      s.f = f(s.x);
      s.margin = s.curvature - factor * s.f;
      r.min_margin = std::min(r.min_margin, s.margin);
      r.samples.push_back(s);
    }
  r.pass = r.min_margin > 0.0;
  return r;
}

double ContinuationSchedule::eps_for(double delta, double h) const {
  return std::max(eps_floor_h * h, eps_factor * delta);
}

void ContinuationSchedule::validate(double h) const {
  if (deltas.empty()) throw ContractError("schedule: empty delta list");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0 && deltas[i] < 1.0)) throw ContractError("schedule: delta must lie in (0, 1)");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ContractError("schedule: deltas must be strictly decreasing");
  }
  if (!(eps_floor_h >= 2.0)) throw ContractError("schedule: eps floor must be at least 2h");
  if (!(eps_factor >= 0.0)) throw ContractError("schedule: eps factor must be nonnegative");
  (void)h;
  solver.validate();
}

DirichletResult solve_measure_dirichlet(const DomainMask& mask, const MeasureSpec& nu, const ScalarField& phi,
                                        const DirichletOptions& opts) {
  const Grid& g = mask.grid;
  if (!(phi.grid() == g)) throw ContractError("solve_measure_dirichlet: trace and mask grids differ");
  nu.validate(mask);
  const ContinuationSchedule& sched = opts.schedule;
  sched.validate(g.h);

  DirichletResult res;
  if (!nu.touching_boundary(mask.shape).empty()) res.unsupported_by_theory = true;
  if (opts.eta_family) {
    res.eta = eta_margin(cell_measure(nu, mask), *opts.eta_family);
    if (!(res.eta->eta_star > 0.0)) res.exploratory = true;
  }
  if (nu.density && g.dim == 2) {
    res.admissibility = boundary_admissibility(mask.shape, *nu.density);
    if (!res.admissibility->refused && !res.admissibility->pass) res.exploratory = true;
  }

  const double sup_phi = boundary_sup(mask, phi);
  const double slack = 10.0 * sched.solver.tol;
  for (std::size_t s = 0; s < sched.deltas.size(); ++s) {
    StageRecord rec;
    rec.delta = sched.deltas[s];
    rec.eps = sched.eps_for(rec.delta, g.h);
    ScalarField f = mollify_measure(nu, rec.eps, mask);
    for (std::size_t k = 0; k < f.size(); ++k)
      if (f.finite(k)) f.set(k, (1.0 - rec.delta) * f[k]);

    SolveOptions so = sched.solver;
    const bool warm = sched.warm_start && !res.stages.empty();
    if (warm) so.init = InitPolicy::Provided;
    const SolveOutcome out = solve_dirichlet(mask, &f, warm ? res.stages.back() : phi, so);
    rec.iterations = out.iterations;
    rec.residual = out.residual;
    rec.converged = out.converged;
    rec.min_u = out.solution.min_finite();
    rec.max_u = out.solution.max_finite();
    rec.sup_bound = rec.max_u <= sup_phi + slack;
    if (!out.converged) {
      rec.diagnosis = out.diagnosis;
      res.records.push_back(rec);
      std::ostringstream os;
      os << "stage delta=" << rec.delta << " did not converge (residual " << rec.residual
         << "); candidate violation of the strict mass bound nu(w) < |dw|";
      if (!out.diagnosis.empty()) os << ": " << out.diagnosis;
      res.diagnosis = os.str();
      if (res.stages.empty()) res.solution = out.solution;
      break;
    }
    if (!res.stages.empty()) {
      const ScalarField& prev = res.stages.back();
      for (std::size_t k = 0; k < g.size(); ++k)
        if (mask.interior(k) && out.solution[k] > prev[k] + slack) ++rec.monotonicity_violations;
    }
    res.total_violations += rec.monotonicity_violations;
    res.records.push_back(rec);
    res.stages.push_back(out.solution);
  }
  res.completed = res.stages.size() == sched.deltas.size();
  if (!res.stages.empty()) res.solution = res.stages.back();

  // Lagrange extrapolation in δ to δ = 0 through the last (up to) three stages.
  res.limit = res.solution;
  const std::size_t n = res.stages.size();
  if (n >= 2) {
    const std::size_t m = std::min<std::size_t>(3, n);
    std::vector<double> d(m), w(m);
    for (std::size_t a = 0; a < m; ++a) d[a] = res.records[n - m + a].delta;
    for (std::size_t a = 0; a < m; ++a) {
      w[a] = 1.0;
      for (std::size_t b = 0; b < m; ++b)
        if (b != a) w[a] *= (0.0 - d[b]) / (d[a] - d[b]);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!mask.interior(k)) continue;
      double v = 0.0;
      for (std::size_t a = 0; a < m; ++a) v += w[a] * res.stages[n - m + a][k];
      res.limit.set(k, v);
      res.extrapolation_gap = std::max(res.extrapolation_gap, std::abs(v - res.solution[k]));
    }
  }

  res.nu_total = nu.total_mass(mask);
  if (!opts.validation_balls.empty() && n > 0) {
    std::vector<const ScalarField*> seq;
    for (const auto& u : res.stages) seq.push_back(&u);
    res.recovery = ball_measure_table(seq, opts.validation_balls);
    res.recovered = res.completed;
    for (const auto& row : res.recovery.rows) {
      const double exact = nu.ball_mass(mask, row.ball.center, row.ball.radius);
      res.nu_balls.push_back(exact);
      const double err = std::abs(row.mu - exact);
      const double scale = res.nu_total > 0.0 ? res.nu_total : 1.0;
      res.max_recovery_error = std::max(res.max_recovery_error, err / scale);
      if (err > opts.recovery_tol * res.nu_total + res.recovery.eps_neg + 1e-9) res.recovered = false;
    }
  }
  return res;
}

}  // namespace mcm
