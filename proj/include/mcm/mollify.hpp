#pragma once

#include <array>
#include <vector>

#include "mcm/field.hpp"

namespace mcm {

/// Discrete bump ρ_ε(x) ∝ exp(1/(|x/ε|² − 1)) on the lattice offsets with
/// |offset·h| < ε, normalized so the weights sum to exactly 1 (up to rounding).
struct Kernel {
  double eps = 0.0;
  std::vector<std::array<int, 2>> offsets;
  std::vector<double> weights;
  int reach = 0;  // max |offset| per axis
};

/// Throws ContractError when ε < 2h.
Kernel make_kernel(const Grid& grid, double eps);

enum class Extension {
  /// Output defined only where the whole kernel support is defined.
  Restrict,
  /// Undefined cells count as zero; output defined on the whole grid.
  Zero,
};

/// Convolution with ρ_ε. In Restrict mode, −∞ cells in the support are
/// skipped and the remaining weights renormalized (the sentinel marks a null
/// set); a support made only of −∞ cells leaves the output undefined.
ScalarField mollify_field(const ScalarField& u, double eps, Extension ext = Extension::Restrict);
/// Single-threaded reference with the same summation order as mollify_field.
ScalarField mollify_field_serial(const ScalarField& u, double eps, Extension ext = Extension::Restrict);

}  // namespace mcm
