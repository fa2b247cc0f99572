#include "mcm/perron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mcm/mollify.hpp"

namespace mcm {

SolveOptions lift_defaults() {
  SolveOptions o;
  o.tol = 1e-10;
  o.max_iter = 40;
  o.init = InitPolicy::Harmonic;
  return o;
}

LiftResult perron_lift_in_place(ScalarField& u, const TestBall& ball, const SolveOptions& opts) {
  LiftResult res;
  const Region reg = ball_region(u.grid(), ball.center, ball.radius);
  for (std::size_t k : reg.layer) {
    if (u.is_neg_inf(k)) {
      res.rejected = true;
      return res;
    }
    if (!u.defined(k)) throw ContractError("perron_lift: ball layer leaves the domain");
  }
  std::vector<double> before(reg.interior.size());
  std::vector<char> was_finite(reg.interior.size());
  std::vector<char> was_neg_inf(reg.interior.size());
  for (std::size_t r = 0; r < reg.interior.size(); ++r) {
    const std::size_t k = reg.interior[r];
    if (!u.defined(k)) throw ContractError("perron_lift: ball leaves the domain");
    before[r] = u[k];
    was_finite[r] = u.finite(k);
    was_neg_inf[r] = u.is_neg_inf(k);
  }
  const SolveOutcome out = solve_in_place(reg, nullptr, u, opts);
  res.iterations = out.iterations;
  res.residual = out.residual;
  if (!out.converged) {
    for (std::size_t r = 0; r < reg.interior.size(); ++r) {
      if (was_neg_inf[r]) u.set_neg_inf(reg.interior[r]);
      else u.set(reg.interior[r], before[r]);
    }
    res.refused = true;
    return res;
  }
  res.max_increase = -std::numeric_limits<double>::infinity();
  res.min_increase = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < reg.interior.size(); ++r) {
    if (!was_finite[r]) continue;
    const double d = u[reg.interior[r]] - before[r];
    res.max_increase = std::max(res.max_increase, d);
    res.min_increase = std::min(res.min_increase, d);
  }
  if (!std::isfinite(res.max_increase)) res.max_increase = res.min_increase = 0.0;
  return res;
}

LiftResult perron_lift(const ScalarField& u, const TestBall& ball, const SolveOptions& opts) {
  ScalarField work = u;
  LiftResult res = perron_lift_in_place(work, ball, opts);
  work.set_provenance(res.refused || res.rejected ? u.provenance() : Provenance::Lifted);
  res.field = std::move(work);
  return res;
}

ScalarField usc_regularize(const ScalarField& u) {
  const Grid& g = u.grid();
  ScalarField out = u;
  for (int j = 0; j < g.extent[1]; ++j) {
    for (int i = 0; i < g.extent[0]; ++i) {
      const std::size_t k = g.index(i, j);
      if (!u.defined(k)) continue;
      double m = u[k];
      for (const auto& o : neighbour_offsets(g.dim)) {
        const int a = i + o[0], b = j + o[1];
        if (g.contains(a, b) && u.defined(g.index(a, b))) m = std::max(m, u[g.index(a, b)]);
      }
      if (std::isinf(m)) out.set_neg_inf(k);
      else out.set(k, m);
    }
  }
  return out;
}

BallCover make_ball_cover(const DomainMask& mask, int level) {
  const Grid& g = mask.grid;
  const Shape& shape = mask.shape;
  BallCover cover;
  cover.level = level;
  cover.radius = std::ldexp(1.0, -level);
  const double rho = cover.radius;
  const double tol = 1e-9 * g.h;

  std::vector<Point> centers;
  // Centres keep a one-cell margin so the discrete sphere stays on defined
  // cells. Square lattice with spacing ρ anchored at the shape centre.
  const double ext = std::max(g.extent[0], g.extent[1]) * g.h;
  const int n = static_cast<int>(std::ceil(ext / rho)) + 1;
  for (int b = (g.dim == 2 ? -n : 0); b <= (g.dim == 2 ? n : 0); ++b) {
    for (int a = -n; a <= n; ++a) {
      const Point c{shape.center[0] + a * rho, g.dim == 2 ? shape.center[1] + b * rho : 0.0};
      if (shape.signed_distance(c) >= rho + g.h - tol) centers.push_back(c);
    }
  }
  // Candidate centres for the greedy fill: admissible cell centres.
  std::vector<Point> candidates;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center(k);
    if (shape.signed_distance(x) >= rho + g.h - tol) candidates.push_back(x);
  }
  // Buckets of side ρ: a covering centre lies in the 3ⁿ buckets around x.
  std::map<std::pair<long, long>, std::vector<Point>> buckets;
  auto key = [&](const Point& x) {
    return std::make_pair(static_cast<long>(std::floor((x[0] - g.origin[0]) / rho)),
                          static_cast<long>(std::floor((x[1] - g.origin[1]) / rho)));
  };
  for (const auto& c : centers) buckets[key(c)].push_back(c);
  auto covered = [&](const Point& x) {
    const auto [kx, ky] = key(x);
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        const auto it = buckets.find({kx + dx, ky + dy});
        if (it == buckets.end()) continue;
        for (const auto& c : it->second)
          if (rho - distance(x, c) > tol) return true;
      }
    return false;
  };
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center(k);
    if (!mask.interior(k) || shape.signed_distance(x) <= 0.5 * rho) continue;
    if (covered(x)) continue;
    const Point* best = nullptr;
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      const double d = distance(x, c);
      if (d < bd) {
        bd = d;
        best = &c;
      }
    }
    if (!best || !(rho - bd > tol)) throw ContractError("make_ball_cover: no admissible ball covers a cell");
    centers.push_back(*best);
    buckets[key(*best)].push_back(*best);
  }
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  cover.centers = std::move(centers);
  return cover;
}

SweepResult approximation_sweep(const ScalarField& u, const BallCover& cover, const SolveOptions& opts) {
  SweepResult res;
  res.field = u;
  res.trace.neg_inf_fraction = u.neg_inf_fraction();
  ScalarField& work = res.field;
  for (std::size_t b = 0; b < cover.centers.size(); ++b) {
    const LiftResult lr = perron_lift_in_place(work, {cover.centers[b], cover.radius}, opts);
    SweepRecord rec;
    rec.index = b;
    rec.center = cover.centers[b];
    rec.iterations = lr.iterations;
    rec.rejected = lr.rejected;
    rec.max_increase = lr.max_increase;
    rec.min_increase = lr.min_increase;
    res.trace.balls.push_back(rec);
    if (lr.rejected) {
      ++res.trace.rejected;
      continue;
    }
    if (lr.refused) {
      res.trace.aborted = true;
      res.trace.aborted_at = b;
      break;
    }
    if (lr.min_increase < -10.0 * opts.tol) res.trace.monotone = false;
  }
  work.set_provenance(Provenance::Lifted);
  double sup = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.finite(k) && work.finite(k)) sup = std::max(sup, work[k] - u[k]);
  res.trace.sup_change = sup;
  return res;
}

SweepResult approximation_sweep(const ScalarField& u, const DomainMask& mask, int level, const SolveOptions& opts) {
  if (std::ldexp(1.0, -level) < 4.0 * mask.grid.h * (1.0 - 1e-12))
    throw ContractError("approximation_sweep: ball radius 2^-j below 4h");
  return approximation_sweep(u, make_ball_cover(mask, level), opts);
}

double subharmonic_defect(const ScalarField& u) {
  const DensityResult d = h1_density(u);
  double mn = 0.0;
  for (std::size_t k = 0; k < d.density.size(); ++k)
    if (d.density.finite(k)) mn = std::min(mn, d.density[k]);
  return -mn;
}

std::vector<SequenceTerm> smooth_subharmonic_sequence(const ScalarField& u, const DomainMask& mask,
                                                      const std::vector<std::pair<int, double>>& levels,
                                                      const SolveOptions& opts) {
  std::vector<SequenceTerm> seq;
  for (const auto& [j, eps] : levels) {
    if (eps > std::ldexp(1.0, -j) / 4.0 * (1.0 + 1e-12))
      throw ContractError("smooth_subharmonic_sequence: eps_j exceeds 2^-j/4");
    SweepResult sw = approximation_sweep(u, mask, j, opts);
    SequenceTerm term;
    term.level = j;
    term.eps = eps;
    term.field = mollify_field(sw.field, eps);
    term.defect = subharmonic_defect(term.field);
    term.trace = std::move(sw.trace);
    const bool aborted = term.trace.aborted;
    seq.push_back(std::move(term));
    if (aborted) break;
  }
  return seq;
}

}  // namespace mcm
