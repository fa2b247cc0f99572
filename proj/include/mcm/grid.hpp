#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcm {

using Point = std::array<double, 2>;

/// Raised when an operation is called outside its documented preconditions.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by make_grid when a shape cannot be resolved at the requested h.
class SizingError : public ContractError {
 public:
  using ContractError::ContractError;
};

enum class ShapeKind { Interval, Disk, Rectangle, Annulus };

/// Closed-form description of a bounded domain. Intervals are 1D, the rest 2D.
struct Shape {
  ShapeKind kind = ShapeKind::Disk;
  Point center{0.0, 0.0};
  double radius = 1.0;        // disk radius / annulus outer radius
  double inner_radius = 0.0;  // annulus only
  Point lo{0.0, 0.0};         // rectangle corners; interval uses lo[0], hi[0]
  Point hi{0.0, 0.0};

  static Shape interval(double a, double b);
  static Shape disk(Point center, double radius);
  static Shape rectangle(Point lo, Point hi);
  static Shape annulus(Point center, double inner, double outer);

  int dimension() const { return kind == ShapeKind::Interval ? 1 : 2; }
  /// Positive inside, zero on the boundary, negative outside.
  double signed_distance(const Point& x) const;
  double measure() const;           // |Ω|
  double boundary_measure() const;  // |∂Ω| (point count in 1D)
  std::string describe() const;
};

/// Uniform cell-centred grid. Cell (i, j) has centre origin + (i, j)·h.
/// In 1D extent[1] == 1 and j is always 0.
struct Grid {
  int dim = 2;
  double h = 1.0;
  std::array<int, 2> extent{3, 3};
  Point origin{0.0, 0.0};

  std::size_t size() const {
    return static_cast<std::size_t>(extent[0]) * static_cast<std::size_t>(extent[1]);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(extent[0]) +
           static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(extent[0])); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(extent[0])); }
  bool contains(int i, int j) const {
    return i >= 0 && j >= 0 && i < extent[0] && j < extent[1];
  }
  Point center(int i, int j) const {
    return {origin[0] + i * h, dim == 2 ? origin[1] + j * h : 0.0};
  }
  Point center(std::size_t k) const { return center(col(k), row(k)); }
  double cell_volume() const { return dim == 2 ? h * h : h; }
  /// (n−1)-measure of one cell face: h in 2D, 1 in 1D.
  double face_measure() const { return dim == 2 ? h : 1.0; }

  bool operator==(const Grid&) const = default;
};

enum class CellKind : std::uint8_t { Exterior = 0, Boundary = 1, Interior = 2 };

/// Interior cells carry unknowns, boundary cells (the exterior-adjacent layer
/// in the 3ⁿ neighbourhood of the interior) carry Dirichlet data.
struct DomainMask {
  Grid grid;
  Shape shape;
  std::vector<CellKind> kind;

  bool interior(std::size_t k) const { return kind[k] == CellKind::Interior; }
  bool boundary(std::size_t k) const { return kind[k] == CellKind::Boundary; }
  bool inside(std::size_t k) const { return kind[k] != CellKind::Exterior; }
  std::size_t count(CellKind c) const;
};

/// Builds the grid and mask for `shape` at h = 1/resolution.
DomainMask make_grid(const Shape& shape, double resolution);

/// Classifies the cells of an existing grid against `shape`.
DomainMask classify(const Grid& grid, const Shape& shape);

/// Throws ContractError unless the interior is non-empty and face-connected
/// and the boundary layer is exactly the 3ⁿ-neighbourhood of the interior.
void check_mask_invariants(const DomainMask& mask);

/// A Dirichlet sub-problem on a grid: unknown cells plus the layer that
/// carries data. Cells are restricted to a bounding box so that small ball
/// problems cost O(ball) rather than O(grid).
struct Region {
  Grid grid;
  std::array<int, 2> box_lo{0, 0};
  std::array<int, 2> box_hi{0, 0};  // inclusive
  std::vector<std::size_t> interior;
  std::vector<std::size_t> layer;
  std::vector<int> local;  // over the box: index into `interior` or −1

  int local_index(int i, int j) const {
    if (i < box_lo[0] || i > box_hi[0] || j < box_lo[1] || j > box_hi[1]) return -1;
    const int w = box_hi[0] - box_lo[0] + 1;
    return local[static_cast<std::size_t>((j - box_lo[1]) * w + (i - box_lo[0]))];
  }
};

Region region_of(const DomainMask& mask);
/// Region for the open ball B_r(c); the layer is its 3ⁿ-neighbourhood.
Region ball_region(const Grid& grid, const Point& c, double r);

/// 3ⁿ neighbourhood offsets excluding the centre.
const std::vector<std::array<int, 2>>& neighbour_offsets(int dim);

double distance(const Point& a, const Point& b);

}  // namespace mcm
