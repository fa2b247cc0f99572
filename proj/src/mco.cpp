#include "mcm/mco.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcm/geometry.hpp"
#include "mcm/msolve.hpp"

namespace mcm {

double FaceEval::dp(int a, int m, double h) const {
  if (a == axis) {
    if (m == 0) return -1.0 / h;
    if (m == 1) return 1.0 / h;
    return 0.0;
  }
  if (m == 2 || m == 3) return 0.25 / h;
  if (m == 4 || m == 5) return -0.25 / h;
  return 0.0;
}

FaceEval eval_face(const ScalarField& u, int axis, int i, int j) {
  const Grid& g = u.grid();
  FaceEval f;
  f.axis = axis;
  const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
  if (!g.contains(i, j) || !g.contains(i + di, j + dj)) return f;
  f.cells[0] = g.index(i, j);
  f.cells[1] = g.index(i + di, j + dj);
  f.ncells = 2;
  if (g.dim == 2) {
    // transverse neighbours: +t of both, then −t of both
    const int ti = axis == 0 ? 0 : 1, tj = axis == 0 ? 1 : 0;
    const int pts[4][2] = {{i + ti, j + tj}, {i + di + ti, j + dj + tj}, {i - ti, j - tj}, {i + di - ti, j + dj - tj}};
    for (int m = 0; m < 4; ++m) {
      if (!g.contains(pts[m][0], pts[m][1])) return f;
      f.cells[static_cast<std::size_t>(2 + m)] = g.index(pts[m][0], pts[m][1]);
    }
    f.ncells = 6;
  }
  for (int m = 0; m < f.ncells; ++m)
    if (!u.finite(f.cells[static_cast<std::size_t>(m)])) return f;

  const double h = g.h;
  const auto v = [&](int m) { return u[f.cells[static_cast<std::size_t>(m)]]; };
  f.p[axis] = (v(1) - v(0)) / h;
  if (g.dim == 2) f.p[1 - axis] = ((v(2) - v(4)) + (v(3) - v(5))) / (4.0 * h);
  f.W = std::sqrt(1.0 + f.p[0] * f.p[0] + f.p[1] * f.p[1]);
  f.F = {f.p[0] / f.W, f.p[1] / f.W};
  f.valid = true;
  return f;
}

FluxField flux_field(const ScalarField& u) {
  const Grid& g = u.grid();
  FluxField ff;
  ff.grid = g;
  const int nx = g.extent[0], ny = g.extent[1];
  ff.xface.resize(static_cast<std::size_t>(nx - 1) * static_cast<std::size_t>(ny));
  if (g.dim == 2) ff.yface.resize(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny - 1));
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      ff.xface[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx - 1) + static_cast<std::size_t>(i)] =
          eval_face(u, 0, i, j);
  if (g.dim == 2) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx; ++i)
        ff.yface[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)] =
            eval_face(u, 1, i, j);
  }
  return ff;
}

namespace {

bool stencil_has_neg_inf(const ScalarField& u, int i, int j) {
  const Grid& g = u.grid();
  for (const auto& o : neighbour_offsets(g.dim)) {
    const int a = i + o[0], b = j + o[1];
    if (g.contains(a, b) && u.is_neg_inf(g.index(a, b))) return true;
  }
  return false;
}

/// Density from the four (two in 1D) faces; nullopt when any is invalid.
template <class FaceAt>
std::optional<double> cell_density(const Grid& g, int i, int j, FaceAt&& face) {
  if (i < 1 || i + 1 >= g.extent[0]) return std::nullopt;
  const FaceEval xm = face(0, i - 1, j), xp = face(0, i, j);
  if (!xm.valid || !xp.valid) return std::nullopt;
  if (g.dim == 1) return (xp.F[0] - xm.F[0]) / g.h;
  if (j < 1 || j + 1 >= g.extent[1]) return std::nullopt;
  const FaceEval ym = face(1, i, j - 1), yp = face(1, i, j);
  if (!ym.valid || !yp.valid) return std::nullopt;
  return ((xp.F[0] - xm.F[0]) + (yp.F[1] - ym.F[1])) / g.h;
}

DensityResult finish(const ScalarField& u, ScalarField density) {
  DensityResult r{std::move(density), 0};
  const Grid& g = u.grid();
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.finite(k) && !r.density.defined(k) && stencil_has_neg_inf(u, g.col(k), g.row(k))) ++r.excluded;
  return r;
}

}  // namespace

DensityResult h1_density(const ScalarField& u) {
  const FluxField ff = flux_field(u);
  const Grid& g = u.grid();
  ScalarField out(g, u.provenance());
  const auto face = [&ff](int axis, int i, int j) -> const FaceEval& { return ff.face(axis, i, j); };
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.extent[1]; ++j) {
    for (int i = 0; i < g.extent[0]; ++i) {
      if (const auto d = cell_density(g, i, j, face)) out.set(g.index(i, j), *d);
    }
  }
  return finish(u, std::move(out));
}

DensityResult h1_density_serial(const ScalarField& u) {
  const Grid& g = u.grid();
  ScalarField out(g, u.provenance());
  const auto face = [&u](int axis, int i, int j) { return eval_face(u, axis, i, j); };
  for (int j = 0; j < g.extent[1]; ++j)
    for (int i = 0; i < g.extent[0]; ++i)
      if (const auto d = cell_density(g, i, j, face)) out.set(g.index(i, j), *d);
  return finish(u, std::move(out));
}

Interface Interface::circle(Point c, double r) {
  Interface f;
  f.kind = Kind::Circle;
  f.center = c;
  f.radius = r;
  return f;
}

Interface Interface::rectangle(Point lo, Point hi) {
  Interface f;
  f.kind = Kind::Rectangle;
  f.lo = lo;
  f.hi = hi;
  return f;
}

Interface Interface::points(double a, double b) {
  Interface f;
  f.kind = Kind::Points;
  f.lo = {a, 0.0};
  f.hi = {b, 0.0};
  return f;
}

bool Interface::inside(const Point& x) const {
  switch (kind) {
    case Kind::Circle: return distance(x, center) < radius;
    case Kind::Rectangle: return x[0] > lo[0] && x[0] < hi[0] && x[1] > lo[1] && x[1] < hi[1];
    case Kind::Points: return x[0] > lo[0] && x[0] < hi[0];
  }
  return false;
}

namespace {

Point raw_center(const Grid& g, int i, int j) {
  return {g.origin[0] + i * g.h, g.dim == 2 ? g.origin[1] + j * g.h : 0.0};
}

[[noreturn]] void throw_cells(const std::string& what, const Grid& g, const std::vector<std::size_t>& cells) {
  std::ostringstream os;
  os << what << " (" << cells.size() << " cells):";
  for (std::size_t m = 0; m < std::min<std::size_t>(cells.size(), 12); ++m)
    os << " (" << g.col(cells[m]) << "," << g.row(cells[m]) << ")";
  if (cells.size() > 12) os << " ...";
  throw ContractError(os.str());
}

}  // namespace

double boundary_flux(const ScalarField& u, const Interface& c) {
  const Grid& g = u.grid();
  const int nx = g.extent[0], ny = g.extent[1];
  std::vector<std::size_t> bad;
  // Inside cells must be on the grid and carry a density.
  for (int j = -1; j <= ny; ++j) {
    for (int i = -1; i <= nx; ++i) {
      if (g.dim == 1 && j != 0) continue;
      if (!c.inside(raw_center(g, i, j))) continue;
      if (!g.contains(i, j) || i < 1 || i + 1 >= nx || (g.dim == 2 && (j < 1 || j + 1 >= ny)))
        throw ContractError("boundary_flux: interface reaches the edge of the grid");
      const auto face = [&u](int axis, int a, int b) { return eval_face(u, axis, a, b); };
      if (!cell_density(g, i, j, face)) bad.push_back(g.index(i, j));
    }
  }
  if (!bad.empty()) throw_cells("boundary_flux: interface clips undefined cells", g, bad);

  long double total = 0.0L;
  const int naxes = g.dim;
  for (int axis = 0; axis < naxes; ++axis) {
    const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
    for (int j = 0; j + dj < ny; ++j) {
      for (int i = 0; i + di < nx; ++i) {
        const bool a = c.inside(g.center(i, j)), b = c.inside(g.center(i + di, j + dj));
        if (a == b) continue;
        const FaceEval f = eval_face(u, axis, i, j);
        total += (a ? 1.0L : -1.0L) * f.F[axis];
      }
    }
  }
  return static_cast<double>(total) * g.face_measure();
}

double density_sum(const ScalarField& density, const Interface& c) {
  const Grid& g = density.grid();
  long double s = 0.0L;
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!c.inside(g.center(k))) continue;
    if (!density.finite(k)) {
      bad.push_back(k);
      continue;
    }
    s += density[k];
  }
  if (!bad.empty()) throw_cells("density_sum: undefined density inside the interface", g, bad);
  return static_cast<double>(s) * g.cell_volume();
}

AreaTerms area_functional(const ScalarField& u, const ScalarField& gfield, const ScalarField& phi,
                          const DomainMask& mask, const std::vector<double>& boundary_length) {
  const Grid& g = mask.grid;
  if (!(u.grid() == g) || !(gfield.grid() == g) || !(phi.grid() == g))
    throw ContractError("area_functional: grids differ");
  const double hn = g.cell_volume();
  long double area = 0.0L, source = 0.0L, bnd = 0.0L;
  for (int axis = 0; axis < g.dim; ++axis) {
    const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
    for (int j = 0; j + dj < g.extent[1]; ++j) {
      for (int i = 0; i + di < g.extent[0]; ++i) {
        const std::size_t a = g.index(i, j), b = g.index(i + di, j + dj);
        if (!mask.inside(a) || !mask.inside(b)) continue;
        const int n_int = (mask.interior(a) ? 1 : 0) + (mask.interior(b) ? 1 : 0);
        if (n_int == 0) continue;
        const FaceEval f = eval_face(u, axis, i, j);
        if (!f.valid) throw ContractError("area_functional: u not finite on a face stencil");
        area += (n_int == 2 ? 1.0L : 0.5L) * f.W;
      }
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask.interior(k)) source += static_cast<long double>(gfield.value(k)) * u.value(k);
    if (mask.boundary(k) && boundary_length[k] > 0.0)
      bnd += static_cast<long double>(boundary_length[k]) * std::abs(u.value(k) - phi.value(k));
  }
  AreaTerms t;
  t.area = static_cast<double>(area) * hn / g.dim;
  t.source = static_cast<double>(source) * hn;
  t.boundary = static_cast<double>(bnd);
  t.total = t.area + t.source + t.boundary;
  return t;
}

AreaTerms area_functional(const ScalarField& u, const ScalarField& gfield, const ScalarField& phi,
                          const DomainMask& mask) {
  return area_functional(u, gfield, phi, mask, boundary_length_elements(domain_set(mask)));
}


std::array<double, 4> trace_form_matrix(const std::array<double, 2>& p) {
  const double d = 1.0 + p[0] * p[0] + p[1] * p[1];
  return {1.0 - p[0] * p[0] / d, -p[0] * p[1] / d, -p[1] * p[0] / d, 1.0 - p[1] * p[1] / d};
}

std::array<double, 2> symmetric_eigenvalues(const std::array<double, 4>& m) {
  const double tr = m[0] + m[3];
  const double diff = 0.5 * (m[0] - m[3]);
  const double r = std::hypot(diff, m[1]);
  return {0.5 * tr - r, 0.5 * tr + r};
}

std::string to_string(BallVerdict v) {
  switch (v) {
    case BallVerdict::Pass: return "pass";
    case BallVerdict::Fail: return "fail";
    case BallVerdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double max_face_gradient(const ScalarField& u) {
  const FluxField ff = flux_field(u);
  double m = 0.0;
  for (const auto* faces : {&ff.xface, &ff.yface})
    for (const auto& f : *faces)
      if (f.valid) m = std::max(m, std::hypot(f.p[0], f.p[1]));
  return m;
}

SubharmonicReport viscosity_subharmonic_check(const ScalarField& u, const std::vector<TestBall>& balls,
                                              const SubharmonicOptions& opts) {
  const Grid& g = u.grid();
  SubharmonicReport rep;
  if (opts.tol) {
    rep.tol = *opts.tol;
  } else {
    const double du = max_face_gradient(u);
    rep.tol = 10.0 * g.h * g.h * (1.0 + du * du);
  }
  SolveOptions so;
  so.tol = opts.solver_tol;
  so.max_iter = opts.max_iter;
  so.init = InitPolicy::Harmonic;
  rep.balls.resize(balls.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < balls.size(); ++b) {
    BallCheck& bc = rep.balls[b];
    bc.ball = balls[b];
    try {
      const Region reg = ball_region(g, balls[b].center, balls[b].radius);
      const SolveOutcome out = solve_on_region(reg, nullptr, u, so);
      bc.iterations = out.iterations;
      if (!out.converged) continue;
      double v = -std::numeric_limits<double>::infinity();
      for (std::size_t k : reg.interior)
        if (u.finite(k)) v = std::max(v, u[k] - out.solution[k]);
      bc.violation = v;
      bc.verdict = v <= rep.tol ? BallVerdict::Pass : BallVerdict::Fail;
    } catch (const ContractError&) {
      bc.verdict = BallVerdict::Inconclusive;
    }
  }
  rep.pass = true;
  for (const auto& bc : rep.balls) {
    if (bc.verdict == BallVerdict::Inconclusive) ++rep.inconclusive;
    if (bc.verdict != BallVerdict::Pass) rep.pass = false;
  }
  return rep;
}

namespace {

/// Lower-left cell and fractions for bilinear interpolation; false if out of grid.
bool locate(const Grid& g, const Point& x, int& i0, int& j0, double& sx, double& sy) {
  const double fx = (x[0] - g.origin[0]) / g.h;
  i0 = static_cast<int>(std::floor(fx));
  sx = fx - i0;
  if (g.dim == 1) {
    j0 = 0;
    sy = 0.0;
    return i0 >= 0 && i0 + 1 < g.extent[0];
  }
  const double fy = (x[1] - g.origin[1]) / g.h;
  j0 = static_cast<int>(std::floor(fy));
  sy = fy - j0;
  return i0 >= 0 && j0 >= 0 && i0 + 1 < g.extent[0] && j0 + 1 < g.extent[1];
}

template <class CellValue>
double bilinear(const Grid& g, const Point& x, CellValue&& value) {
  int i0, j0;
  double sx, sy;
  if (!locate(g, x, i0, j0, sx, sy)) return std::numeric_limits<double>::quiet_NaN();
  if (g.dim == 1) return (1.0 - sx) * value(i0, 0) + sx * value(i0 + 1, 0);
  return (1.0 - sx) * (1.0 - sy) * value(i0, j0) + sx * (1.0 - sy) * value(i0 + 1, j0) +
         (1.0 - sx) * sy * value(i0, j0 + 1) + sx * sy * value(i0 + 1, j0 + 1);
}

double cell_or_nan(const ScalarField& u, int i, int j) {
  if (!u.grid().contains(i, j)) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = u.grid().index(i, j);
  return u.finite(k) ? u[k] : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double interpolate(const ScalarField& u, const Point& x) {
  return bilinear(u.grid(), x, [&](int i, int j) { return cell_or_nan(u, i, j); });
}

std::array<double, 2> interpolate_gradient(const ScalarField& u, const Point& x) {
  const double h = u.grid().h;
  const double gx = bilinear(u.grid(), x, [&](int i, int j) {
    return (cell_or_nan(u, i + 1, j) - cell_or_nan(u, i - 1, j)) / (2.0 * h);
  });
  if (u.grid().dim == 1) return {gx, 0.0};
  const double gy = bilinear(u.grid(), x, [&](int i, int j) {
    return (cell_or_nan(u, i, j + 1) - cell_or_nan(u, i, j - 1)) / (2.0 * h);
  });
  return {gx, gy};
}

EnvelopeFit gradient_bound_report(const std::vector<GradientSample>& family) {
  if (family.size() < 3) throw ContractError("gradient_bound_report: need at least 3 samples to fit");
  EnvelopeFit fit;
  struct P {
    double x, y;
  };
  std::vector<P> pts;
  for (const auto& s : family) {
    if (!s.u || !(s.radius > 0.0)) throw ContractError("gradient_bound_report: bad sample");
    const double u0 = interpolate(*s.u, s.center);
    const auto du = interpolate_gradient(*s.u, s.center);
    if (!std::isfinite(u0) || !std::isfinite(du[0]) || !std::isfinite(du[1]))
      throw ContractError("gradient_bound_report: sample centre outside the field");
    const double gnorm = std::hypot(du[0], du[1]);
    const double x = std::abs(u0) / s.radius;
    const double y = gnorm < 1e-12 ? -std::numeric_limits<double>::infinity() : std::log(gnorm);
    fit.x.push_back(x);
    fit.y.push_back(y);
    if (std::isinf(y)) {
      ++fit.zero_gradient;
      continue;
    }
    pts.push_back({x, y});
  }
  if (pts.size() < 2) {
    fit.degenerate = true;
    fit.c2 = 0.0;
    fit.c1 = pts.empty() ? -std::numeric_limits<double>::infinity() : pts[0].y;
    fit.max_residual = 0.0;
    return fit;
  }
  std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  double xbar = 0.0;
  for (const auto& p : pts) xbar += p.x;
  xbar /= static_cast<double>(pts.size());

  std::vector<P> hull;  // upper hull, left to right
  for (const auto& p : pts) {
    while (!hull.empty() && hull.back().x == p.x) hull.pop_back();
    while (hull.size() >= 2) {
      const P& a = hull[hull.size() - 2];
      const P& b = hull.back();
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(p);
  }
  if (hull.size() == 1) {
    fit.c2 = 0.0;
    fit.c1 = hull[0].y;
  } else {
    std::size_t e = 0;
    while (e + 2 < hull.size() && hull[e + 1].x < xbar) ++e;
    const P& a = hull[e];
    const P& b = hull[e + 1];
    fit.c2 = (b.y - a.y) / (b.x - a.x);
    fit.c1 = a.y - fit.c2 * a.x;
  }
  fit.max_residual = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) fit.max_residual = std::max(fit.max_residual, p.y - (fit.c1 + fit.c2 * p.x));
  return fit;
}

}  // namespace mcm
