#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mcm/field.hpp"

namespace mcm {

struct ClipBall {
  Point center{0.0, 0.0};
  double radius = 1.0;
};

/// Set of grid cells with an optional level function (positive inside) used
/// for subcell reconstruction of its boundary. Cells without level data use
/// ±1, which places crossings at face midpoints.
struct DiscreteSet {
  Grid grid;
  std::vector<std::uint8_t> member;
  std::vector<double> level;  // empty, or NaN per cell where unknown
  std::optional<ClipBall> clip;
  std::size_t cells = 0;
  double volume = 0.0;     // cells·hⁿ
  double perimeter = 0.0;  // reconstructed interface length (point count in 1D)

  bool contains(std::size_t k) const { return member[k] != 0; }
};

/// {x ∈ B_r : u(x) > t} over cells where u is finite. −∞ cells are never
/// members.
DiscreteSet superlevel_set(const ScalarField& u, double t, std::optional<ClipBall> clip = std::nullopt);
DiscreteSet set_from_indicator(const Grid& grid, std::vector<std::uint8_t> member);
/// Members are cells with level > 0.
DiscreteSet set_from_level(const Grid& grid, std::vector<double> level);

struct Segment {
  Point a{}, b{};
  double length = 0.0;
  bool on_clip = false;
  /// Non-member cell on the dual edge holding each endpoint (−1 off grid).
  std::array<long, 2> outer{-1, -1};
};

struct SetGeometry {
  double volume = 0.0;
  double perimeter = 0.0;
  double gamma_int = 0.0;  // part on the clip sphere
  double gamma_bdy = 0.0;  // the rest
  std::size_t ambiguous = 0;  // saddle configurations resolved by the centre value
};

/// Marching-squares reconstruction (interface points in 1D). A piece belongs
/// to Γ^int when its midpoint lies within h of the clip sphere.
std::vector<Segment> interface_segments(const DiscreteSet& s, std::size_t* ambiguous = nullptr);
SetGeometry set_geometry(const DiscreteSet& s);

/// Isoperimetric constant c_n with |∂A| ≥ c_n|A|^{1−1/n}.
double isoperimetric_constant(int dim);

/// Boundary length element per cell: each interface piece of the set gives
/// half its length to the outside cell at each endpoint. Used for ∫_{∂Ω}.
std::vector<double> boundary_length_elements(const DiscreteSet& s);

/// Set of interior cells of a mask with its shape's signed distance as level.
DiscreteSet domain_set(const DomainMask& mask);

}  // namespace mcm
