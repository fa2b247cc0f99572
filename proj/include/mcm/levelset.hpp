#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcm/geometry.hpp"
#include "mcm/mco.hpp"

namespace mcm {

/// Default δ in the gradient threshold 2δ^{−1/2}: 4^{−n}.
double default_delta(int dim);

struct LevelSetStats {
  double r = 0.0;
  double t = 0.0;
  double volume = 0.0;
  double gamma_int = 0.0;
  double gamma_bdy = 0.0;
  double rho = 0.0;            // geodesic radius, |Γ^int| = 2ρ in 2D
  double ratio = 0.0;          // |Γ^bdy| / |Γ^int|, +∞ when Γ^int is empty
  bool ratio_defined = false;  // false for an empty set
  double threshold = 0.0;      // 2δ^{−1/2}
  double gstar_fraction = 0.0; // |Γ*| / |Γ^bdy|, 0 when Γ^bdy is empty
  bool empty = true;
  std::size_t ambiguous = 0;   // saddle cells in the reconstruction
};

/// Statistics of Ω_{r,t} = {x ∈ B_r : u > t}.
LevelSetStats level_set_report(const ScalarField& u, const ClipBall& ball, double t,
                               std::optional<double> delta = std::nullopt);

struct CoareaRow {
  double t = 0.0;
  double phi = 0.0;        // |Ω_{r,t}|
  double dphi = 0.0;       // centred difference in t
  double integral = 0.0;   // ∫_{Γ^bdy} 1/|Du|
  double band = 0.0;       // |φ′ + ∫| / max(|φ′|, |∫|), 0 when both vanish
  bool flagged = false;    // |Du| < 1e-8 somewhere on the interface
  bool agree = false;      // band ≤ tol and not flagged
};

/// φ, φ′ (step dt) and the interface integral at each level.
std::vector<CoareaRow> coarea_profile(const ScalarField& u, const ClipBall& ball, const std::vector<double>& levels,
                                      double dt, double tol = 0.03);

/// Geometric levels t₀·2^{k/4} up to t_max, merged with `extra` and sorted.
std::vector<double> geometric_levels(double t0, double t_max, const std::vector<double>& extra = {});

struct PsiRow {
  double t = 0.0;
  double psi = 0.0;  // |{x ∈ ∂B_r : u > t}|
};

struct HarnackReport {
  bool refused = false;
  std::string reason;
  double sup = 0.0;  // over cells in the closed ball B_{r/2}
  double inf = 0.0;
  double ratio = 0.0;
  double center_value = 0.0;  // u at the ball centre (interpolated)
  std::vector<PsiRow> psi;
};

/// sup/inf over B_{r/2} and ψ on the sampled levels. ψ uses equispaced
/// points on ∂B_r with arc step ≤ h/2.
HarnackReport harnack_report(const ScalarField& u, const ClipBall& ball, const std::vector<double>& levels);

struct WeakHarnack {
  double sup = 0.0;  // over B_{r/2}
  double rhs = 0.0;  // (r^{−n} ∫_{B_r} (u⁺)^p)^{1/p}
  double implied_c = 0.0;
  bool defined = false;  // false when u⁺ ≡ 0 on B_r
};

WeakHarnack weak_harnack_check(const ScalarField& u, double p, const ClipBall& ball);

/// Per-cell masses ν(cell) of a nonnegative measure. `inside` marks the cells
/// a test set may use.
struct CellMeasure {
  Grid grid;
  std::vector<double> mass;
  std::vector<std::uint8_t> inside;

  /// ν = g dx over the interior cells of the mask.
  static CellMeasure from_density(const ScalarField& g, const DomainMask& mask);
  double total() const;
};

struct AnnulusSet {
  Point center{0.0, 0.0};
  double inner = 0.0;
  double outer = 0.0;
};

/// Finite set family. Rectangles are cell-aligned with exact face perimeter;
/// the other members use the reconstructed perimeter of their level function.
struct EtaFamily {
  bool rectangles = true;
  int rect_cap = 0;  // max side in cells, 0 for none
  std::vector<double> ball_radii;  // balls centred at every stride-th cell
  int ball_stride = 1;
  std::vector<AnnulusSet> annuli;
  const ScalarField* field = nullptr;  // superlevel sets {field > t}
  std::vector<double> levels;

  std::string describe() const;
};

struct EtaSet {
  std::string kind;  // rectangle | ball | annulus | superlevel
  std::array<int, 4> box{0, 0, 0, 0};  // rectangle cell range i0, j0, i1, j1 (inclusive)
  Point center{0.0, 0.0};
  double a = 0.0, b = 0.0;  // ball radius / annulus radii / level
  double nu = 0.0;
  double perimeter = 0.0;
  double ratio = 0.0;
};

struct EtaMarginReport {
  std::string family;
  std::size_t tested = 0;
  std::size_t excluded_zero_perimeter = 0;
  std::size_t excluded_outside = 0;  // members leaving the admissible cells
  EtaSet worst;
  double max_ratio = 0.0;
  double eta_star = 1.0;  // 1 − max ratio
};

EtaMarginReport eta_margin(const CellMeasure& nu, const EtaFamily& family);

/// Rectangle scan alone (prefix sums, OpenMP over the first corner) and its
/// single-threaded reference. Ties keep the first box in (j0, i0, j1, i1) order.
EtaMarginReport eta_margin_rectangles(const CellMeasure& nu, int cap = 0);
EtaMarginReport eta_margin_rectangles_serial(const CellMeasure& nu, int cap = 0);

/// Smallest T with T^{2/3}/√(1+T^{4/3}) ≥ 1 − η/2. Throws for η ∉ (0, 2).
double decay_threshold(double eta);

struct DecaySample {
  double t = 0.0;
  double phi = 0.0;       // |{u ≤ −t}|
  double phi_root = 0.0;  // φ^{1/n}
  double envelope = 0.0;
};

struct DecayReport {
  double eta = 0.0;
  double T = 0.0;        // root of the threshold equation
  double anchor = 0.0;   // max(T, −inf_∂Ω u)
  double vanish = 0.0;   // −min u: φ(t) = 0 for t beyond it
  double fitted_c = 0.0; // largest C keeping the envelope above φ^{1/n}
  double predicted = 0.0;  // level where the envelope reaches zero
  bool dominates = false;
  bool pass = false;
  std::vector<DecaySample> samples;
};

/// φ(t) = |{u ≤ −t}| over interior cells against the envelope
/// max(0, φ^{1/n}(A) + Cη(A^{1/3} − t^{1/3})) for t ≥ A, A the anchor.
DecayReport decay_bound_check(const ScalarField& u, const DomainMask& mask, double eta);

/// (1/n)·Σ_faces |face gradient of max(u, −t)|·hⁿ over faces with both cells
/// in the window.
double truncated_bv_norm(const ScalarField& u, double t, const ClipBall& window);

}  // namespace mcm
