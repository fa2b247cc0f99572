#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcm/mco.hpp"

namespace mcm {

struct BallFamily {
  std::vector<TestBall> balls;
  double gap = 0.0;  // sandwich inflation t; B_{r+t} ⊂ Ω for every ball
  std::uint64_t seed = 0;
};

/// Validates an explicit family: radius ≥ 8h and B_{r+gap} (with its
/// one-cell layer) inside the domain.
BallFamily make_ball_family(const DomainMask& mask, std::vector<TestBall> balls, double gap);
/// `count` balls with radii uniform in [rmin, rmax] and centres uniform in
/// the admissible part of Ω, drawn from mt19937_64(seed).
BallFamily random_ball_family(const DomainMask& mask, std::size_t count, double rmin, double rmax, double gap,
                              std::uint64_t seed);

enum class MeasureMethod { DensityIntegral, Flux, SequenceLimit };
std::string to_string(MeasureMethod m);

struct Extrapolation {
  double value = 0.0;
  double band = 0.0;  // spread of the last three terms
  bool accelerated = false;  // Aitken applied
};

/// Largest |ratio| of successive differences accepted for acceleration.
inline constexpr double kAitkenMaxRatio = 0.75;

/// Aitken Δ² on the last three terms; the last term when the ratio of
/// successive differences exceeds kAitkenMaxRatio in magnitude or fewer than
/// three terms exist.
Extrapolation aitken_last_three(const std::vector<double>& terms);

struct BallMeasureRow {
  TestBall ball;
  double mu = 0.0;
  double band = 0.0;
  bool converged = true;
  std::vector<double> terms;  // per-sequence-term fluxes
  double flux_gap = 0.0;      // smooth case: |density sum − flux|
};

struct BallMeasureTable {
  std::vector<BallMeasureRow> rows;
  double total = 0.0;      // over all cells with a density
  double eps_neg = 0.0;    // defect slack
  MeasureMethod method = MeasureMethod::DensityIntegral;
  bool converged = true;
};

/// Smooth field: μ(B) = Σ density·hⁿ over cell centres in B, cross-checked
/// against the boundary flux.
BallMeasureTable ball_measure_table(const ScalarField& u, const std::vector<TestBall>& balls);

/// Approximating sequence: per-term fluxes through each sphere, extrapolated
/// from the last three terms. A row is non-converged when its band exceeds
/// band_rel·|μ| + band_abs. `defects` (may be empty) feed ε_neg.
BallMeasureTable ball_measure_table(const std::vector<const ScalarField*>& sequence, const std::vector<TestBall>& balls,
                                    const std::vector<double>& defects = {}, double band_rel = 0.02,
                                    double band_abs = 1e-3);

struct SandwichPair {
  std::size_t ball = 0;
  int direction = 0;  // 0: μ_A(B_r) ≤ μ_B(B_{r+t}); 1: μ_B(B_r) ≤ μ_A(B_{r+t})
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double excess() const { return lhs - rhs - slack; }
};

struct WeakConvergenceReport {
  bool refused = false;
  std::string reason;
  double l1_gap = 0.0;
  bool pass = false;
  SandwichPair worst;
  std::vector<SandwichPair> pairs;
  BallMeasureTable a_inner, a_outer, b_inner, b_outer;
};

/// Sandwich μ_A(B_r) ≤ μ_B(B_{r+t}) + tol·|μ_B(B_{r+t})| and the symmetric
/// inequality on every ball. Refused when the last terms differ in L¹ by more
/// than l1_threshold.
WeakConvergenceReport weak_convergence_check(const std::vector<const ScalarField*>& seq_a,
                                             const std::vector<const ScalarField*>& seq_b, const BallFamily& family,
                                             double tol_rel, double l1_threshold);

struct InterfaceMass {
  std::optional<double> mass;  // empty when the extrapolation does not settle
  double band = 0.0;
  std::vector<double> widths;
  std::vector<double> shell_mass;
  std::string note;
};

/// Singular mass on a circle (or a 1D point) J: flux(outer shell) −
/// flux(inner shell) at widths w, 2w, 4w, 8w, extrapolated to w → 0.
InterfaceMass interface_singular_mass(const ScalarField& u, const Interface& jump, double base_width);

}  // namespace mcm
