#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcm/field.hpp"

namespace mcm {

/// Gradient and flux on the face between cell (i, j) and its neighbour in
/// +axis direction. The normal derivative is a central difference of the two
/// adjacent cells, the transverse one the average of the four surrounding
/// cell differences. p = Σ_m (axis row of coef)·u[cells[m]].
struct FaceEval {
  bool valid = false;
  int axis = 0;
  int ncells = 0;
  std::array<std::size_t, 6> cells{};  // lower, upper, then transverse cells
  std::array<double, 2> p{0.0, 0.0};   // face gradient
  std::array<double, 2> F{0.0, 0.0};   // p / W
  double W = 1.0;                      // √(1+|p|²)

  /// ∂p[a]/∂u[cells[m]].
  double dp(int a, int m, double h) const;
};

FaceEval eval_face(const ScalarField& u, int axis, int i, int j);

/// Face fluxes. xface[j·(nx−1)+i] joins (i,j)–(i+1,j); yface[j·nx+i] joins
/// (i,j)–(i,j+1).
struct FluxField {
  Grid grid;
  std::vector<FaceEval> xface;
  std::vector<FaceEval> yface;

  const FaceEval& face(int axis, int i, int j) const {
    return axis == 0 ? xface[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.extent[0] - 1) +
                             static_cast<std::size_t>(i)]
                     : yface[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.extent[0]) +
                             static_cast<std::size_t>(i)];
  }
};

FluxField flux_field(const ScalarField& u);

struct DensityResult {
  ScalarField density;   // H₁[u] per cell, undefined where the stencil is
  std::size_t excluded = 0;  // finite cells dropped because the stencil meets −∞
};

/// Conservative cell density: (sum of outward face fluxes)/h.
DensityResult h1_density(const ScalarField& u);
/// Naive per-cell evaluation used as a reference for h1_density.
DensityResult h1_density_serial(const ScalarField& u);

/// Closed curve (or point pair in 1D) bounding a set of cell centres.
struct Interface {
  enum class Kind { Circle, Rectangle, Points } kind = Kind::Circle;
  Point center{0.0, 0.0};
  double radius = 0.0;
  Point lo{0.0, 0.0}, hi{0.0, 0.0};

  static Interface circle(Point c, double r);
  static Interface rectangle(Point lo, Point hi);
  static Interface points(double a, double b);

  /// Cell centres strictly inside.
  bool inside(const Point& x) const;
};

/// Outward flux through the faces separating inside from outside cells. Throws
/// (listing the cells) when a crossing face or an inside cell density is
/// undefined.
double boundary_flux(const ScalarField& u, const Interface& c);
/// ∑ density·hⁿ over cells inside c.
double density_sum(const ScalarField& density, const Interface& c);

struct AreaTerms {
  double area = 0.0;
  double source = 0.0;
  double boundary = 0.0;
  double total = 0.0;
};

/// Discrete ∫√(1+|Du|²) + ∫g u + ∫_{∂Ω}|u−φ|. The area term averages the
/// face integrands over the n directions, with half weight on faces between an
/// interior and a boundary cell. `boundary_length` is indexed by cell.
AreaTerms area_functional(const ScalarField& u, const ScalarField& g, const ScalarField& phi,
                          const DomainMask& mask, const std::vector<double>& boundary_length);
AreaTerms area_functional(const ScalarField& u, const ScalarField& g, const ScalarField& phi,
                          const DomainMask& mask);


/// I − p⊗p/(1+|p|²), row major.
std::array<double, 4> trace_form_matrix(const std::array<double, 2>& p);
/// Eigenvalues (ascending) of a symmetric 2×2 matrix.
std::array<double, 2> symmetric_eigenvalues(const std::array<double, 4>& m);

struct TestBall {
  Point center{0.0, 0.0};
  double radius = 0.0;
};

enum class BallVerdict { Pass, Fail, Inconclusive };
std::string to_string(BallVerdict v);

struct BallCheck {
  TestBall ball;
  BallVerdict verdict = BallVerdict::Inconclusive;
  double violation = 0.0;  // max(u − h) over the ball interior
  int iterations = 0;
};

struct SubharmonicReport {
  std::vector<BallCheck> balls;
  double tol = 0.0;
  bool pass = false;  // every ball passed
  std::size_t inconclusive = 0;
};

struct SubharmonicOptions {
  std::optional<double> tol;  // default 10·h²·(1+max|Du|²)
  double solver_tol = 1e-10;
  int max_iter = 50;
};

/// For each ball, solves H₁[h] = 0 with h = u on the discrete sphere and
/// checks h ≥ u − tol inside.
SubharmonicReport viscosity_subharmonic_check(const ScalarField& u, const std::vector<TestBall>& balls,
                                              const SubharmonicOptions& opts = {});

/// Largest |Du| over valid faces.
double max_face_gradient(const ScalarField& u);

/// Bilinear interpolation of cell values and of central-difference gradients.
double interpolate(const ScalarField& u, const Point& x);
std::array<double, 2> interpolate_gradient(const ScalarField& u, const Point& x);

struct GradientSample {
  const ScalarField* u = nullptr;
  Point center{0.0, 0.0};
  double radius = 1.0;
};

struct EnvelopeFit {
  std::vector<double> x;  // |u(0)|/r
  std::vector<double> y;  // log|Du(0)|, −∞ when |Du(0)| vanishes
  double c1 = 0.0;        // intercept
  double c2 = 0.0;        // slope
  double max_residual = 0.0;  // max over finite points of y − (c1 + c2 x)
  bool degenerate = false;    // fewer than two finite points
  std::size_t zero_gradient = 0;
};

/// Least upper affine envelope of (|u(0)|/r, log|Du(0)|). Throws on fewer
/// than 3 samples.
EnvelopeFit gradient_bound_report(const std::vector<GradientSample>& family);

}  // namespace mcm
