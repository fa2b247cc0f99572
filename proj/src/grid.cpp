#include "mcm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace mcm {

namespace {

constexpr double kInsideTol = 1e-9;  // in units of h

struct AxisLayout {
  double anchor;
  double offset;  // centres at anchor + (k + offset)·h
};

AxisLayout rectangle_axis(double lo, double hi, double h) {
  const double cells = (hi - lo) / h;
  if (std::abs(cells - std::round(cells)) < 1e-9) return {lo, 0.5};  // cells tile the side
  return {0.5 * (lo + hi), 0.0};
}

}  // namespace

Shape Shape::interval(double a, double b) {
  Shape s;
  s.kind = ShapeKind::Interval;
  s.lo = {a, 0.0};
  s.hi = {b, 0.0};
  s.center = {0.5 * (a + b), 0.0};
  s.radius = 0.5 * (b - a);
  return s;
}

Shape Shape::disk(Point center, double radius) {
  Shape s;
  s.kind = ShapeKind::Disk;
  s.center = center;
  s.radius = radius;
  return s;
}

Shape Shape::rectangle(Point lo, Point hi) {
  Shape s;
  s.kind = ShapeKind::Rectangle;
  s.lo = lo;
  s.hi = hi;
  s.center = {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
  return s;
}

Shape Shape::annulus(Point center, double inner, double outer) {
  Shape s;
  s.kind = ShapeKind::Annulus;
  s.center = center;
  s.inner_radius = inner;
  s.radius = outer;
  return s;
}

double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double Shape::signed_distance(const Point& x) const {
  switch (kind) {
    case ShapeKind::Interval:
      return std::min(x[0] - lo[0], hi[0] - x[0]);
    case ShapeKind::Disk:
      return radius - distance(x, center);
    case ShapeKind::Annulus: {
      const double d = distance(x, center);
      return std::min(radius - d, d - inner_radius);
    }
    case ShapeKind::Rectangle: {
      const double dx = std::max(lo[0] - x[0], x[0] - hi[0]);
      const double dy = std::max(lo[1] - x[1], x[1] - hi[1]);
      if (dx <= 0.0 && dy <= 0.0) return -std::max(dx, dy);
      return -std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
    }
  }
  return 0.0;
}

double Shape::measure() const {
  switch (kind) {
    case ShapeKind::Interval: return hi[0] - lo[0];
    case ShapeKind::Disk: return std::numbers::pi * radius * radius;
    case ShapeKind::Annulus: return std::numbers::pi * (radius * radius - inner_radius * inner_radius);
    case ShapeKind::Rectangle: return (hi[0] - lo[0]) * (hi[1] - lo[1]);
  }
  return 0.0;
}

double Shape::boundary_measure() const {
  switch (kind) {
    case ShapeKind::Interval: return 2.0;
    case ShapeKind::Disk: return 2.0 * std::numbers::pi * radius;
    case ShapeKind::Annulus: return 2.0 * std::numbers::pi * (radius + inner_radius);
    case ShapeKind::Rectangle: return 2.0 * ((hi[0] - lo[0]) + (hi[1] - lo[1]));
  }
  return 0.0;
}

std::string Shape::describe() const {
  std::ostringstream os;
  switch (kind) {
    case ShapeKind::Interval: os << "interval[" << lo[0] << "," << hi[0] << "]"; break;
    case ShapeKind::Disk: os << "disk(c=" << center[0] << "," << center[1] << ",r=" << radius << ")"; break;
    case ShapeKind::Annulus:
      os << "annulus(c=" << center[0] << "," << center[1] << ",r=" << inner_radius << ".." << radius << ")";
      break;
    case ShapeKind::Rectangle:
      os << "rectangle[" << lo[0] << "," << hi[0] << "]x[" << lo[1] << "," << hi[1] << "]";
      break;
  }
  return os.str();
}

std::size_t DomainMask::count(CellKind c) const {
  return static_cast<std::size_t>(std::count(kind.begin(), kind.end(), c));
}

const std::vector<std::array<int, 2>>& neighbour_offsets(int dim) {
  static const std::vector<std::array<int, 2>> one{{-1, 0}, {1, 0}};
  static const std::vector<std::array<int, 2>> two{{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                                   {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
  return dim == 1 ? one : two;
}

DomainMask classify(const Grid& grid, const Shape& shape) {
  DomainMask mask{grid, shape, std::vector<CellKind>(grid.size(), CellKind::Exterior)};
  const double tol = kInsideTol * grid.h;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (shape.signed_distance(grid.center(k)) > tol) mask.kind[k] = CellKind::Interior;
  }
  const auto& offs = neighbour_offsets(grid.dim);
  for (int j = 0; j < grid.extent[1]; ++j) {
    for (int i = 0; i < grid.extent[0]; ++i) {
      const std::size_t k = grid.index(i, j);
      if (mask.kind[k] == CellKind::Interior) continue;
      for (const auto& o : offs) {
        const int a = i + o[0], b = j + o[1];
        if (grid.contains(a, b) && mask.kind[grid.index(a, b)] == CellKind::Interior) {
          mask.kind[k] = CellKind::Boundary;
          break;
        }
      }
    }
  }
  return mask;
}

DomainMask make_grid(const Shape& shape, double resolution) {
  if (!(resolution >= 8.0)) throw ContractError("make_grid: resolution must be >= 8 cells per unit");
  const double h = 1.0 / resolution;

  switch (shape.kind) {
    case ShapeKind::Interval:
      if (shape.hi[0] - shape.lo[0] <= 2.0 * h) throw SizingError("make_grid: interval shorter than 2h");
      break;
    case ShapeKind::Disk:
      if (shape.radius <= 2.0 * h) throw SizingError("make_grid: disk radius <= 2h");
      break;
    case ShapeKind::Annulus:
      if (shape.inner_radius <= 0.0 || shape.radius - shape.inner_radius <= 2.0 * h)
        throw SizingError("make_grid: annulus width <= 2h or inner radius <= 0");
      break;
    case ShapeKind::Rectangle:
      if (shape.hi[0] - shape.lo[0] <= 2.0 * h || shape.hi[1] - shape.lo[1] <= 2.0 * h)
        throw SizingError("make_grid: rectangle side <= 2h");
      break;
  }

  const int dim = shape.dimension();
  std::array<AxisLayout, 2> axes{};
  Point blo{}, bhi{};
  switch (shape.kind) {
    case ShapeKind::Interval:
      axes[0] = {shape.lo[0], 0.0};
      axes[1] = {0.0, 0.0};
      blo = {shape.lo[0], 0.0};
      bhi = {shape.hi[0], 0.0};
      break;
    case ShapeKind::Disk:
    case ShapeKind::Annulus:
      axes[0] = {shape.center[0], 0.0};
      axes[1] = {shape.center[1], 0.0};
      blo = {shape.center[0] - shape.radius, shape.center[1] - shape.radius};
      bhi = {shape.center[0] + shape.radius, shape.center[1] + shape.radius};
      break;
    case ShapeKind::Rectangle:
      axes[0] = rectangle_axis(shape.lo[0], shape.hi[0], h);
      axes[1] = rectangle_axis(shape.lo[1], shape.hi[1], h);
      blo = shape.lo;
      bhi = shape.hi;
      break;
  }

  Grid wide;
  wide.dim = dim;
  wide.h = h;
  std::array<int, 2> kmin{0, 0};
  for (int a = 0; a < dim; ++a) {
    kmin[a] = static_cast<int>(std::floor((blo[a] - axes[a].anchor) / h - axes[a].offset)) - 2;
    const int kmax = static_cast<int>(std::ceil((bhi[a] - axes[a].anchor) / h - axes[a].offset)) + 2;
    wide.extent[a] = kmax - kmin[a] + 1;
    wide.origin[a] = axes[a].anchor + (kmin[a] + axes[a].offset) * h;
  }
  if (dim == 1) {
    wide.extent[1] = 1;
    wide.origin[1] = 0.0;
  }

  const DomainMask provisional = classify(wide, shape);
  std::array<int, 2> lo{wide.extent[0], wide.extent[1]}, hi{-1, -1};
  for (std::size_t k = 0; k < wide.size(); ++k) {
    if (provisional.kind[k] == CellKind::Exterior) continue;
    const int i = wide.col(k), j = wide.row(k);
    lo[0] = std::min(lo[0], i);
    lo[1] = std::min(lo[1], j);
    hi[0] = std::max(hi[0], i);
    hi[1] = std::max(hi[1], j);
  }
  if (hi[0] < 0) throw SizingError("make_grid: shape contains no cell centre");

  Grid grid;
  grid.dim = dim;
  grid.h = h;
  grid.extent = {hi[0] - lo[0] + 1, dim == 2 ? hi[1] - lo[1] + 1 : 1};
  grid.origin = {axes[0].anchor + (kmin[0] + lo[0] + axes[0].offset) * h,
                 dim == 2 ? axes[1].anchor + (kmin[1] + lo[1] + axes[1].offset) * h : 0.0};
  if (grid.extent[0] < 3 || (dim == 2 && grid.extent[1] < 3))
    throw SizingError("make_grid: fewer than 3 cells per axis");

  DomainMask mask = classify(grid, shape);
  check_mask_invariants(mask);
  return mask;
}

void check_mask_invariants(const DomainMask& mask) {
  const Grid& g = mask.grid;
  std::size_t first = g.size();
  std::size_t n_interior = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask.interior(k)) {
      if (first == g.size()) first = k;
      ++n_interior;
    }
  }
  if (n_interior == 0) throw ContractError("mask: empty interior");

  std::vector<char> seen(g.size(), 0);
  std::queue<std::size_t> q;
  q.push(first);
  seen[first] = 1;
  std::size_t reached = 0;
  const std::array<std::array<int, 2>, 4> faces{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  while (!q.empty()) {
    const std::size_t k = q.front();
    q.pop();
    ++reached;
    const int i = g.col(k), j = g.row(k);
    for (const auto& o : faces) {
      const int a = i + o[0], b = j + o[1];
      if (!g.contains(a, b)) continue;
      const std::size_t m = g.index(a, b);
      if (!seen[m] && mask.interior(m)) {
        seen[m] = 1;
        q.push(m);
      }
    }
  }
  if (reached != n_interior) throw ContractError("mask: interior is not connected");

  const auto& offs = neighbour_offsets(g.dim);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = g.col(k), j = g.row(k);
    bool touches_interior = false;
    for (const auto& o : offs) {
      const int a = i + o[0], b = j + o[1];
      if (!g.contains(a, b)) {
        if (mask.interior(k)) throw ContractError("mask: interior cell on the grid edge");
        continue;
      }
      touches_interior = touches_interior || mask.interior(g.index(a, b));
    }
    if (mask.boundary(k) && !touches_interior) throw ContractError("mask: detached boundary cell");
    if (mask.kind[k] == CellKind::Exterior && touches_interior)
      throw ContractError("mask: exterior cell adjacent to the interior");
  }
}

Region region_of(const DomainMask& mask) {
  Region r;
  r.grid = mask.grid;
  r.box_lo = {0, 0};
  r.box_hi = {mask.grid.extent[0] - 1, mask.grid.extent[1] - 1};
  r.local.assign(mask.grid.size(), -1);
  for (std::size_t k = 0; k < mask.grid.size(); ++k) {
    if (mask.interior(k)) {
      r.local[k] = static_cast<int>(r.interior.size());
      r.interior.push_back(k);
    } else if (mask.boundary(k)) {
      r.layer.push_back(k);
    }
  }
  return r;
}

Region ball_region(const Grid& grid, const Point& c, double radius) {
  Region r;
  r.grid = grid;
  const double h = grid.h;
  const double tol = kInsideTol * h;
  for (int a = 0; a < grid.dim; ++a) {
    r.box_lo[a] = static_cast<int>(std::floor((c[a] - radius - grid.origin[a]) / h)) - 1;
    r.box_hi[a] = static_cast<int>(std::ceil((c[a] + radius - grid.origin[a]) / h)) + 1;
  }
  if (grid.dim == 1) r.box_lo[1] = r.box_hi[1] = 0;
  for (int a = 0; a < 2; ++a) {
    r.box_lo[a] = std::max(r.box_lo[a], 0);
    r.box_hi[a] = std::min(r.box_hi[a], grid.extent[a] - 1);
  }

  const int w = r.box_hi[0] - r.box_lo[0] + 1;
  const int ht = r.box_hi[1] - r.box_lo[1] + 1;
  r.local.assign(static_cast<std::size_t>(w * ht), -1);
  std::vector<char> inside(static_cast<std::size_t>(w * ht), 0);
  for (int j = r.box_lo[1]; j <= r.box_hi[1]; ++j) {
    for (int i = r.box_lo[0]; i <= r.box_hi[0]; ++i) {
      if (radius - distance(grid.center(i, j), c) > tol)
        inside[static_cast<std::size_t>((j - r.box_lo[1]) * w + (i - r.box_lo[0]))] = 1;
    }
  }
  const auto& offs = neighbour_offsets(grid.dim);
  for (int j = r.box_lo[1]; j <= r.box_hi[1]; ++j) {
    for (int i = r.box_lo[0]; i <= r.box_hi[0]; ++i) {
      const std::size_t lk = static_cast<std::size_t>((j - r.box_lo[1]) * w + (i - r.box_lo[0]));
      if (inside[lk]) {
        const bool edge = i == r.box_lo[0] || i == r.box_hi[0] ||
                          (grid.dim == 2 && (j == r.box_lo[1] || j == r.box_hi[1]));
        const bool grid_edge = i == 0 || i == grid.extent[0] - 1 ||
                               (grid.dim == 2 && (j == 0 || j == grid.extent[1] - 1));
        if (edge && grid_edge) throw ContractError("ball_region: ball and its layer do not fit in the grid");
        r.local[lk] = static_cast<int>(r.interior.size());
        r.interior.push_back(grid.index(i, j));
        continue;
      }
      for (const auto& o : offs) {
        const int a = i + o[0], b = j + o[1];
        if (a < r.box_lo[0] || a > r.box_hi[0] || b < r.box_lo[1] || b > r.box_hi[1]) continue;
        if (inside[static_cast<std::size_t>((b - r.box_lo[1]) * w + (a - r.box_lo[0]))]) {
          r.layer.push_back(grid.index(i, j));
          break;
        }
      }
    }
  }
  if (r.interior.empty()) throw ContractError("ball_region: ball contains no cell centre");
  return r;
}

}  // namespace mcm
