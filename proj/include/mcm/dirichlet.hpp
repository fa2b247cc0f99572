#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcm/levelset.hpp"
#include "mcm/measure.hpp"
#include "mcm/msolve.hpp"

namespace mcm {

struct CircleDensity {
  Point center{0.0, 0.0};
  double radius = 0.0;
  double lambda = 0.0;  // mass per unit length
};

struct PointMass {
  double x = 0.0;
  double mass = 0.0;
};

/// ν = f dx + Σ λ_k ds on circles + Σ atoms (1D only).
struct MeasureSpec {
  std::optional<FieldFunction> density;
  double lipschitz = 0.0;  // declared Lipschitz constant of the density
  std::vector<CircleDensity> circles;
  std::vector<PointMass> atoms;

  /// Checks signs, rejects atoms in 2D and density negativity at the
  /// interior centres.
  void validate(const DomainMask& mask) const;
  /// Circle parts that reach ∂Ω (distance below `margin`).
  std::vector<std::size_t> touching_boundary(const Shape& shape, double margin = 0.0) const;
  /// Exact mass of the singular parts plus the interior cell sum of the density.
  double total_mass(const DomainMask& mask) const;
  /// Exact ν(B_r(c)) of the singular parts plus the density cell sum over
  /// interior centres in the ball.
  double ball_mass(const DomainMask& mask, const Point& c, double r) const;
  std::string describe() const;
};

/// Quadrature nodes on a circle with arc step at most `arc_step`.
std::vector<Point> circle_nodes(const CircleDensity& c, double arc_step);

/// Cell masses of ν: density·hⁿ on interior cells, singular parts deposited
/// into the cell containing each quadrature node.
CellMeasure cell_measure(const MeasureSpec& nu, const DomainMask& mask);

/// g_ε = ρ_ε ∗ ν on the cells of the mask (ν is zero outside Ω). Singular
/// parts use kernel-weighted quadrature, normalized per node so each node
/// keeps its mass. Throws when ε < 2h or the arc step exceeds h.
ScalarField mollify_measure(const MeasureSpec& nu, double eps, const DomainMask& mask,
                            std::optional<double> arc_step = std::nullopt);

struct AdmissibilitySample {
  Point x{0.0, 0.0};
  double curvature = 0.0;  // H′ of ∂Ω
  double f = 0.0;
  double margin = 0.0;     // H′ − n/(n−1)·f
};

struct AdmissibilityReport {
  bool refused = false;
  std::string reason;
  bool pass = false;
  double min_margin = 0.0;
  std::vector<AdmissibilitySample> samples;
};

/// Boundary margin H′ − n/(n−1)·f at `samples` points per boundary circle.
/// Refused for shapes without a smooth closed-form boundary curvature
/// (rectangles, intervals).
AdmissibilityReport boundary_admissibility(const Shape& shape, const FieldFunction& f, int samples = 256);

struct ContinuationSchedule {
  std::vector<double> deltas;  // strictly decreasing, last > 0
  /// ε(δ) = max(eps_floor_h·h, eps_factor·δ).
  double eps_factor = 0.25;
  double eps_floor_h = 2.0;
  SolveOptions solver;
  bool warm_start = true;

  double eps_for(double delta, double h) const;
  void validate(double h) const;
};

struct StageRecord {
  double delta = 0.0;
  double eps = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  std::size_t monotonicity_violations = 0;  // cells with u_δ above the previous stage by > 10·tol
  bool sup_bound = true;                    // u_δ ≤ sup φ + 10·tol
  bool converged = false;
  std::string diagnosis;
};

struct DirichletOptions {
  ContinuationSchedule schedule;
  /// Family for the η-margin precondition; empty family skips the check.
  std::optional<EtaFamily> eta_family;
  /// Balls for the mass-recovery check.
  std::vector<TestBall> validation_balls;
  double recovery_tol = 0.05;  // fraction of ν(Ω)
};

struct DirichletResult {
  ScalarField solution;  // last converged stage
  ScalarField limit;     // quadratic extrapolation in δ to δ = 0 (last three stages)
  std::vector<ScalarField> stages;
  std::vector<StageRecord> records;
  bool completed = false;  // every stage converged
  std::string diagnosis;
  std::string tag = "monotone-continuation solution";
  bool exploratory = false;            // η-margin not certified
  bool unsupported_by_theory = false;  // a singular part reaches ∂Ω
  std::optional<EtaMarginReport> eta;
  std::optional<AdmissibilityReport> admissibility;
  double extrapolation_gap = 0.0;  // sup |limit − solution| over cells
  std::size_t total_violations = 0;
  BallMeasureTable recovery;       // sequence fluxes against ν
  std::vector<double> nu_balls;    // ν(B) for the validation balls
  double nu_total = 0.0;
  double max_recovery_error = 0.0;  // max |μ − ν| / ν(Ω)
  bool recovered = false;
};

/// Stages solve H₁[u] = (1−δ)·g_{ε(δ)} with trace φ, warm-started from the
/// previous stage. Stops at the first stage that does not converge.
DirichletResult solve_measure_dirichlet(const DomainMask& mask, const MeasureSpec& nu, const ScalarField& phi,
                                        const DirichletOptions& opts);

}  // namespace mcm
