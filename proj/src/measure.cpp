#include "mcm/measure.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

namespace mcm {

namespace {

void check_ball(const DomainMask& mask, const TestBall& b, double gap) {
  const Grid& g = mask.grid;
  if (b.radius < 8.0 * g.h * (1.0 - 1e-12))
    throw ContractError("ball family: radius " + std::to_string(b.radius) + " below 8h");
  if (mask.shape.signed_distance(b.center) < b.radius + gap + 2.0 * g.h)
    throw ContractError("ball family: inflated ball B_{r+t} leaves the domain");
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

BallFamily make_ball_family(const DomainMask& mask, std::vector<TestBall> balls, double gap) {
  for (const auto& b : balls) check_ball(mask, b, gap);
  BallFamily f;
  f.balls = std::move(balls);
  f.gap = gap;
  return f;
}

BallFamily random_ball_family(const DomainMask& mask, std::size_t count, double rmin, double rmax, double gap,
                              std::uint64_t seed) {
  if (!(rmin > 0.0 && rmax >= rmin)) throw ContractError("random_ball_family: bad radius range");
  const Grid& g = mask.grid;
  std::mt19937_64 rng(seed);
  BallFamily f;
  f.gap = gap;
  f.seed = seed;
  const double x0 = g.origin[0], x1 = g.origin[0] + (g.extent[0] - 1) * g.h;
  const double y0 = g.origin[1], y1 = g.origin[1] + (g.extent[1] - 1) * g.h;
  std::size_t attempts = 0;
  while (f.balls.size() < count) {
    if (++attempts > 100000 * (count + 1)) throw ContractError("random_ball_family: cannot place balls");
    TestBall b;
    b.radius = rmin + (rmax - rmin) * unit_uniform(rng);
    b.center = {x0 + (x1 - x0) * unit_uniform(rng), g.dim == 2 ? y0 + (y1 - y0) * unit_uniform(rng) : 0.0};
    if (b.radius < 8.0 * g.h * (1.0 - 1e-12)) continue;
    if (mask.shape.signed_distance(b.center) < b.radius + gap + 2.0 * g.h) continue;
    f.balls.push_back(b);
  }
  return f;
}

std::string to_string(MeasureMethod m) {
  switch (m) {
    case MeasureMethod::DensityIntegral: return "density-integral";
    case MeasureMethod::Flux: return "flux";
    case MeasureMethod::SequenceLimit: return "limit-of-sequence";
  }
  return "density-integral";
}

Extrapolation aitken_last_three(const std::vector<double>& t) {
  Extrapolation e;
  if (t.empty()) return e;
  e.value = t.back();
  if (t.size() < 3) {
    e.band = t.size() == 2 ? std::abs(t[1] - t[0]) : 0.0;
    return e;
  }
  const double a = t[t.size() - 3], b = t[t.size() - 2], c = t[t.size() - 1];
  e.band = std::max({a, b, c}) - std::min({a, b, c});
  const double d1 = b - a, d2 = c - b;
  if (d1 != 0.0) {
    const double q = d2 / d1;
    // Near q = 1 the correction d2·q/(1−q) amplifies noise in the terms.
    if (std::abs(q) <= kAitkenMaxRatio) {
      e.value = c + d2 * q / (1.0 - q);
      e.accelerated = true;
    }
  }
  return e;
}

BallMeasureTable ball_measure_table(const ScalarField& u, const std::vector<TestBall>& balls) {
  BallMeasureTable t;
  t.method = MeasureMethod::DensityIntegral;
  const DensityResult d = h1_density(u);
  long double total = 0.0L;
  for (std::size_t k = 0; k < d.density.size(); ++k)
    if (d.density.finite(k)) total += d.density[k];
  t.total = static_cast<double>(total) * u.grid().cell_volume();
  t.rows.resize(balls.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < balls.size(); ++b) {
    const Interface c = Interface::circle(balls[b].center, balls[b].radius);
    const Interface iface = u.grid().dim == 1
                                ? Interface::points(balls[b].center[0] - balls[b].radius,
                                                    balls[b].center[0] + balls[b].radius)
                                : c;
    BallMeasureRow& row = t.rows[b];
    row.ball = balls[b];
    try {
      row.mu = density_sum(d.density, iface);
      row.flux_gap = std::abs(row.mu - boundary_flux(u, iface));
    } catch (...) {
#pragma omp critical(measure_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return t;
}

namespace {

Interface ball_interface(const Grid& g, const TestBall& b) {
  if (g.dim == 1) return Interface::points(b.center[0] - b.radius, b.center[0] + b.radius);
  return Interface::circle(b.center, b.radius);
}

}  // namespace

BallMeasureTable ball_measure_table(const std::vector<const ScalarField*>& seq, const std::vector<TestBall>& balls,
                                    const std::vector<double>& defects, double band_rel, double band_abs) {
  if (seq.empty()) throw ContractError("ball_measure_table: empty sequence");
  BallMeasureTable t;
  t.method = MeasureMethod::SequenceLimit;
  const Grid& g = seq.back()->grid();
  t.rows.resize(balls.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < balls.size(); ++b) {
    BallMeasureRow& row = t.rows[b];
    row.ball = balls[b];
    try {
      for (const ScalarField* u : seq) row.terms.push_back(boundary_flux(*u, ball_interface(u->grid(), balls[b])));
    } catch (...) {
#pragma omp critical(measure_error)
      if (!error) error = std::current_exception();
      continue;
    }
    const Extrapolation e = aitken_last_three(row.terms);
    row.mu = e.value;
    row.band = e.band;
    row.converged = e.band <= band_rel * std::abs(e.value) + band_abs;
  }
  if (error) std::rethrow_exception(error);
  for (const auto& row : t.rows) t.converged = t.converged && row.converged;

  const DensityResult d = h1_density(*seq.back());
  long double total = 0.0L;
  for (std::size_t k = 0; k < d.density.size(); ++k)
    if (d.density.finite(k)) total += d.density[k];
  t.total = static_cast<double>(total) * g.cell_volume();

  double dmax = 0.0;
  const std::size_t from = defects.size() > 3 ? defects.size() - 3 : 0;
  for (std::size_t j = from; j < defects.size(); ++j) dmax = std::max(dmax, defects[j]);
  std::size_t defined = 0;
  for (std::size_t k = 0; k < d.density.size(); ++k) defined += d.density.finite(k) ? 1 : 0;
  t.eps_neg = dmax * static_cast<double>(defined) * g.cell_volume();
  return t;
}

WeakConvergenceReport weak_convergence_check(const std::vector<const ScalarField*>& seq_a,
                                             const std::vector<const ScalarField*>& seq_b, const BallFamily& family,
                                             double tol_rel, double l1_threshold) {
  WeakConvergenceReport rep;
  if (seq_a.empty() || seq_b.empty()) throw ContractError("weak_convergence_check: empty sequence");
  rep.l1_gap = l1_distance(*seq_a.back(), *seq_b.back());
  if (!(rep.l1_gap <= l1_threshold)) {
    rep.refused = true;
    rep.reason = "sequences disagree in L1: " + std::to_string(rep.l1_gap) + " > " + std::to_string(l1_threshold);
    return rep;
  }
  std::vector<TestBall> outer = family.balls;
  for (auto& b : outer) b.radius += family.gap;
  rep.a_inner = ball_measure_table(seq_a, family.balls);
  rep.a_outer = ball_measure_table(seq_a, outer);
  rep.b_inner = ball_measure_table(seq_b, family.balls);
  rep.b_outer = ball_measure_table(seq_b, outer);
  rep.pass = true;
  rep.worst.ball = family.balls.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < family.balls.size(); ++b) {
    for (int dir = 0; dir < 2; ++dir) {
      SandwichPair p;
      p.ball = b;
      p.direction = dir;
      p.lhs = dir == 0 ? rep.a_inner.rows[b].mu : rep.b_inner.rows[b].mu;
      p.rhs = dir == 0 ? rep.b_outer.rows[b].mu : rep.a_outer.rows[b].mu;
      p.slack = tol_rel * std::abs(p.rhs);
      rep.pairs.push_back(p);
      if (p.excess() > 0.0) rep.pass = false;
      if (p.excess() > worst) {
        worst = p.excess();
        rep.worst = p;
      }
    }
  }
  return rep;
}

InterfaceMass interface_singular_mass(const ScalarField& u, const Interface& jump, double base_width) {
  InterfaceMass out;
  const Grid& g = u.grid();
  if (!(base_width >= 2.0 * g.h)) throw ContractError("interface_singular_mass: base width below 2h");
  for (int m = 0; m < 4; ++m) {
    const double w = base_width * std::ldexp(1.0, m);
    double mass = 0.0;
    if (jump.kind == Interface::Kind::Points || g.dim == 1) {
      const double p = jump.kind == Interface::Kind::Points ? jump.lo[0] : jump.center[0];
      mass = boundary_flux(u, Interface::points(p - w, p + w));
    } else if (jump.kind == Interface::Kind::Circle) {
      if (jump.radius - w <= 2.0 * g.h) break;
      mass = boundary_flux(u, Interface::circle(jump.center, jump.radius + w)) -
             boundary_flux(u, Interface::circle(jump.center, jump.radius - w));
    } else {
      throw ContractError("interface_singular_mass: jump set must be a circle or a point");
    }
    out.widths.push_back(w);
    out.shell_mass.push_back(mass);
  }
  if (out.shell_mass.size() < 4) {
    out.note = "too few admissible widths";
    return out;
  }
  const auto& s = out.shell_mass;
  // A + Bw + Cw² through (w, 2w, 4w) and through (2w, 4w, 8w), evaluated at 0.
  const double e1 = (8.0 * s[0] - 6.0 * s[1] + s[2]) / 3.0;
  const double e2 = (8.0 * s[1] - 6.0 * s[2] + s[3]) / 3.0;
  out.band = std::abs(e1 - e2);
  double scale = 0.0;
  for (double v : s) scale = std::max(scale, std::abs(v));
  if (!std::isfinite(e1) || out.band > 0.5 * scale + 1e-12) {
    out.note = "extrapolation does not settle";
    return out;
  }
  out.mass = e1;
  out.note = "settled";
  return out;
}

}  // namespace mcm
