#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcm/field.hpp"

namespace mcm {

enum class InitPolicy { Harmonic, Zero, Provided };
std::string to_string(InitPolicy p);
InitPolicy init_policy_from_string(const std::string& s);

struct SolveOptions {
  int max_iter = 50;
  double tol = 1e-10;   // sup-norm residual, density units
  double armijo = 1e-4;
  int backtracks = 30;
  InitPolicy init = InitPolicy::Harmonic;
  std::size_t direct_limit = 100000;  // unknowns; BiCGSTAB above
  std::optional<double> kappa;        // boundary penalty smoothing, default h
  std::optional<double> kappa_floor;  // continuation target, default 1e-8·κ

  void validate() const;
};

struct SolveOutcome {
  ScalarField solution;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string diagnosis;
  double kappa = 0.0;           // minimizer only: final smoothing
  double functional = 0.0;      // minimizer only
  std::vector<double> witness;  // descent direction when unbounded descent is detected
};

/// Newton solve of H₁[u] = f on the region's interior cells with u fixed on
/// the layer. `data` supplies the layer values (and the initial guess under
/// InitPolicy::Provided); `f` may be null for f ≡ 0. Never throws on
/// non-convergence: the best iterate is returned with converged = false.
SolveOutcome solve_on_region(const Region& region, const ScalarField* f, const ScalarField& data,
                             const SolveOptions& opts = {});

/// As solve_on_region, but overwrites the interior cells of `u` and leaves
/// `solution` empty in the outcome.
SolveOutcome solve_in_place(const Region& region, const ScalarField* f, ScalarField& u,
                            const SolveOptions& opts = {});

/// Dirichlet problem on a masked domain; φ is read on boundary cells.
SolveOutcome solve_dirichlet(const DomainMask& mask, const ScalarField* f, const ScalarField& phi,
                             const SolveOptions& opts = {});

/// Conservative-scheme residual H₁[u] − f over the region (sup norm).
double region_residual(const Region& region, const ScalarField* f, const ScalarField& u);

/// 5-point harmonic extension of the layer values into the region.
void harmonic_extension(const Region& region, ScalarField& u);

/// Minimizer of ∫√(1+|Du|²) + ∫g u + ∫_{∂Ω}√((u−φ)²+κ²) over interior cells
/// and boundary cells with positive length element. Boundary cells without a
/// length element stay at φ. κ shrinks tenfold per stage from `kappa` to
/// `kappa_floor`.
SolveOutcome minimize_prescribed_mc(const DomainMask& mask, const ScalarField& g, const ScalarField& phi,
                                    const SolveOptions& opts = {});

}  // namespace mcm
