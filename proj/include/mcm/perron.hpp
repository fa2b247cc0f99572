#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mcm/mco.hpp"
#include "mcm/msolve.hpp"

namespace mcm {

/// Solver settings used for lifts unless the caller overrides them.
SolveOptions lift_defaults();

struct LiftResult {
  ScalarField field;
  bool refused = false;   // inner solve did not converge; field is the input
  bool rejected = false;  // −∞ on the lift sphere; field is the input
  int iterations = 0;
  double residual = 0.0;
  double max_increase = 0.0;  // max(lift − u) inside, finite cells
  double min_increase = 0.0;  // min(lift − u) inside, finite cells
};

/// Replaces u inside the ball by the solution of H₁[h] = 0 with h = u on the
/// discrete sphere; u is kept exactly outside.
LiftResult perron_lift(const ScalarField& u, const TestBall& ball, const SolveOptions& opts = lift_defaults());

/// In-place variant of perron_lift; `field` of the result is left empty.
LiftResult perron_lift_in_place(ScalarField& u, const TestBall& ball, const SolveOptions& opts = lift_defaults());

/// Cellwise max over the 3ⁿ neighbourhood (defined cells only).
ScalarField usc_regularize(const ScalarField& u);

struct BallCover {
  int level = 0;
  double radius = 0.0;  // 2^{−level}
  std::vector<Point> centers;  // lexicographic by (x1, x2)
};

/// Balls of radius 2^{−j} with centres at distance ≥ 2^{−j} + h from ∂Ω covering the cells at distance
/// more than 2^{−j−1} from ∂Ω: a square lattice plus greedy fill.
BallCover make_ball_cover(const DomainMask& mask, int level);

struct SweepRecord {
  std::size_t index = 0;
  Point center{0.0, 0.0};
  double max_increase = 0.0;
  double min_increase = 0.0;
  int iterations = 0;
  bool rejected = false;
};

struct SweepTrace {
  std::vector<SweepRecord> balls;
  double sup_change = 0.0;  // max over cells of (output − input)
  bool monotone = true;     // every min_increase ≥ −10·tol
  bool aborted = false;
  std::size_t aborted_at = 0;
  std::size_t rejected = 0;
  double neg_inf_fraction = 0.0;  // of the input
};

struct SweepResult {
  ScalarField field;
  SweepTrace trace;
};

/// Sequential lifts over the level-j cover. Requires 2^{−j} ≥ 4h. A refused
/// lift stops the sweep with the partial output.
SweepResult approximation_sweep(const ScalarField& u, const DomainMask& mask, int level,
                                const SolveOptions& opts = lift_defaults());
/// Same, with an explicit ball order.
SweepResult approximation_sweep(const ScalarField& u, const BallCover& cover, const SolveOptions& opts = lift_defaults());

struct SequenceTerm {
  int level = 0;
  double eps = 0.0;
  ScalarField field;      // mollified sweep
  double defect = 0.0;    // max(0, −min H₁ density)
  SweepTrace trace;
};

/// mollify(approximation_sweep(u, j), ε_j) for each (j, ε_j), with
/// 2h ≤ ε_j ≤ 2^{−j}/4. Stops after a term whose sweep aborted.
std::vector<SequenceTerm> smooth_subharmonic_sequence(const ScalarField& u, const DomainMask& mask,
                                                      const std::vector<std::pair<int, double>>& levels,
                                                      const SolveOptions& opts = lift_defaults());

/// max(0, −min density) over cells where the density is defined.
double subharmonic_defect(const ScalarField& u);

}  // namespace mcm
