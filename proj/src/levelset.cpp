#include "mcm/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

namespace mcm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest finite cell value when bilinear interpolation runs off the field.
double value_at(const ScalarField& u, const Point& x) {
  const double v = interpolate(u, x);
  if (std::isfinite(v)) return v;
  const Grid& g = u.grid();
  const int i = static_cast<int>(std::lround((x[0] - g.origin[0]) / g.h));
  const int j = g.dim == 2 ? static_cast<int>(std::lround((x[1] - g.origin[1]) / g.h)) : 0;
  double best = std::numeric_limits<double>::quiet_NaN();
  double bd = kInf;
  for (int b = (g.dim == 2 ? -1 : 0); b <= (g.dim == 2 ? 1 : 0); ++b)
    for (int a = -1; a <= 1; ++a) {
      if (!g.contains(i + a, j + b)) continue;
      const std::size_t k = g.index(i + a, j + b);
      if (!u.finite(k)) continue;
      const double d = distance(g.center(k), x);
      if (d < bd) {
        bd = d;
        best = u[k];
      }
    }
  return best;
}

double gradient_norm(const ScalarField& u, const Point& x) {
  const auto du = interpolate_gradient(u, x);
  return std::hypot(du[0], du[1]);
}

bool in_closed_ball(const Point& x, const ClipBall& b) {
  return distance(x, b.center) <= b.radius * (1.0 + 1e-12);
}

}  // namespace

double default_delta(int dim) { return std::pow(4.0, -dim); }

LevelSetStats level_set_report(const ScalarField& u, const ClipBall& ball, double t, std::optional<double> delta) {
  const Grid& g = u.grid();
  LevelSetStats st;
  st.r = ball.radius;
  st.t = t;
  const double d = delta.value_or(default_delta(g.dim));
  if (!(d > 0.0)) throw ContractError("level_set_report: delta must be positive");
  st.threshold = 2.0 / std::sqrt(d);

  const DiscreteSet s = superlevel_set(u, t, ball);
  std::size_t amb = 0;
  const auto segs = interface_segments(s, &amb);
  st.ambiguous = amb;
  st.volume = s.volume;
  st.empty = s.cells == 0;
  double above = 0.0, measured = 0.0;
  for (const auto& seg : segs) {
    if (seg.on_clip) {
      st.gamma_int += seg.length;
      continue;
    }
    st.gamma_bdy += seg.length;
    const Point m{0.5 * (seg.a[0] + seg.b[0]), 0.5 * (seg.a[1] + seg.b[1])};
    const double gn = gradient_norm(u, m);
    if (!std::isfinite(gn)) continue;
    measured += seg.length;
    if (gn > st.threshold) above += seg.length;
  }
  st.rho = g.dim == 2 ? 0.5 * st.gamma_int : 0.0;
  st.ratio_defined = !st.empty;
  st.ratio = st.gamma_int > 0.0 ? st.gamma_bdy / st.gamma_int : kInf;
  st.gstar_fraction = measured > 0.0 ? above / measured : 0.0;
  return st;
}

std::vector<CoareaRow> coarea_profile(const ScalarField& u, const ClipBall& ball, const std::vector<double>& levels,
                                      double dt, double tol) {
  if (!(dt > 0.0)) throw ContractError("coarea_profile: dt must be positive");
  std::vector<CoareaRow> rows(levels.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t l = 0; l < levels.size(); ++l) {
    CoareaRow& row = rows[l];
    row.t = levels[l];
    const DiscreteSet s = superlevel_set(u, row.t, ball);
    row.phi = s.volume;
    const double up = superlevel_set(u, row.t + dt, ball).volume;
    const double dn = superlevel_set(u, row.t - dt, ball).volume;
    row.dphi = (up - dn) / (2.0 * dt);
    for (const auto& seg : interface_segments(s)) {
      if (seg.on_clip) continue;
      const Point m{0.5 * (seg.a[0] + seg.b[0]), 0.5 * (seg.a[1] + seg.b[1])};
      const double gn = gradient_norm(u, m);
      if (!std::isfinite(gn) || gn < 1e-8) {
        row.flagged = true;
        continue;
      }
      row.integral += seg.length / gn;
    }
    const double scale = std::max(std::abs(row.dphi), std::abs(row.integral));
    row.band = scale > 0.0 ? std::abs(row.dphi + row.integral) / scale : 0.0;
    row.agree = !row.flagged && row.band <= tol;
  }
  return rows;
}

std::vector<double> geometric_levels(double t0, double t_max, const std::vector<double>& extra) {
  if (!(t0 > 0.0)) throw ContractError("geometric_levels: t0 must be positive");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double t = t0 * std::exp2(k / 4.0);
    if (t > t_max * (1.0 + 1e-12)) break;
    out.push_back(t);
  }
  out.insert(out.end(), extra.begin(), extra.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HarnackReport harnack_report(const ScalarField& u, const ClipBall& ball, const std::vector<double>& levels) {
  const Grid& g = u.grid();
  HarnackReport rep;
  const ClipBall half{ball.center, 0.5 * ball.radius};
  rep.sup = -kInf;
  rep.inf = kInf;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!in_closed_ball(g.center(k), half)) continue;
    if (!u.finite(k)) throw ContractError("harnack_report: u is not finite on B_{r/2}");
    rep.sup = std::max(rep.sup, u[k]);
    rep.inf = std::min(rep.inf, u[k]);
  }
  if (!(rep.sup > -kInf)) throw ContractError("harnack_report: B_{r/2} contains no cell centre");
  rep.center_value = value_at(u, ball.center);
  if (!(rep.inf > 0.0)) {
    rep.refused = true;
    rep.reason = "inf over B_{r/2} is not positive";
    return rep;
  }
  rep.ratio = rep.sup / rep.inf;

  std::vector<double> sphere;
  double weight = 1.0;
  if (g.dim == 1) {
    sphere = {value_at(u, {ball.center[0] - ball.radius, 0.0}), value_at(u, {ball.center[0] + ball.radius, 0.0})};
  } else {
    const double len = 2.0 * std::numbers::pi * ball.radius;
    const std::size_t n = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(len / (0.5 * g.h))));
    weight = len / static_cast<double>(n);
    sphere.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double a = 2.0 * std::numbers::pi * (static_cast<double>(m) + 0.5) / static_cast<double>(n);
      sphere[m] = value_at(u, {ball.center[0] + ball.radius * std::cos(a), ball.center[1] + ball.radius * std::sin(a)});
    }
  }
  for (double v : sphere)
    if (!std::isfinite(v)) throw ContractError("harnack_report: u is not defined on the sphere");
  for (double t : levels) {
    std::size_t c = 0;
    for (double v : sphere) c += v > t ? 1 : 0;
    rep.psi.push_back({t, static_cast<double>(c) * weight});
  }
  return rep;
}

WeakHarnack weak_harnack_check(const ScalarField& u, double p, const ClipBall& ball) {
  if (!(p > 0.0)) throw ContractError("weak_harnack_check: p must be positive");
  const Grid& g = u.grid();
  WeakHarnack w;
  w.sup = -kInf;
  long double integral = 0.0L;
  const ClipBall half{ball.center, 0.5 * ball.radius};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center(k);
    const bool in_ball = distance(x, ball.center) < ball.radius;
    if (!in_ball) continue;
    if (!u.defined(k)) throw ContractError("weak_harnack_check: u is undefined on B_r");
    if (!u.finite(k)) continue;
    integral += std::pow(std::max(u[k], 0.0), p);
    if (in_closed_ball(x, half)) w.sup = std::max(w.sup, u[k]);
  }
  const double scaled = static_cast<double>(integral) * g.cell_volume() / std::pow(ball.radius, g.dim);
  w.rhs = std::pow(scaled, 1.0 / p);
  w.defined = w.rhs > 0.0;
  w.implied_c = w.defined ? w.sup / w.rhs : 0.0;
  return w;
}

CellMeasure CellMeasure::from_density(const ScalarField& g, const DomainMask& mask) {
  if (!(g.grid() == mask.grid)) throw ContractError("CellMeasure: density and mask grids differ");
  CellMeasure m;
  m.grid = g.grid();
  m.mass.assign(g.size(), 0.0);
  m.inside.assign(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mask.interior(k)) continue;
    if (!g.finite(k)) throw ContractError("CellMeasure: density undefined at interior cell " + std::to_string(k));
    if (g[k] < 0.0) throw ContractError("CellMeasure: density must be nonnegative");
    m.mass[k] = g[k] * m.grid.cell_volume();
    m.inside[k] = 1;
  }
  return m;
}

double CellMeasure::total() const {
  long double s = 0.0L;
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (inside[k]) s += mass[k];
  return static_cast<double>(s);
}

std::string EtaFamily::describe() const {
  std::ostringstream os;
  bool first = true;
  auto sep = [&] {
    if (!first) os << "; ";
    first = false;
  };
  if (rectangles) {
    sep();
    os << "axis rectangles" << (rect_cap > 0 ? " up to " + std::to_string(rect_cap) + " cells per side" : "");
  }
  if (!ball_radii.empty()) {
    sep();
    os << ball_radii.size() << " ball radii at every " << ball_stride << "-th cell";
  }
  if (!annuli.empty()) {
    sep();
    os << annuli.size() << " annuli";
  }
  if (field && !levels.empty()) {
    sep();
    os << levels.size() << " superlevel sets";
  }
  if (first) os << "empty";
  return os.str();
}

namespace {

struct RectBest {
  double ratio = -kInf;
  std::array<int, 4> box{0, 0, 0, 0};
  double nu = 0.0, per = 0.0;
  std::size_t tested = 0;
};

// Tie order: (j0, i0, j1, i1) lexicographic.
bool rect_before(const std::array<int, 4>& a, const std::array<int, 4>& b) {
  return std::make_tuple(a[1], a[0], a[3], a[2]) < std::make_tuple(b[1], b[0], b[3], b[2]);
}

void rect_offer(RectBest& best, double ratio, const std::array<int, 4>& box, double nu, double per) {
  if (ratio > best.ratio || (ratio == best.ratio && rect_before(box, best.box))) {
    best.ratio = ratio;
    best.box = box;
    best.nu = nu;
    best.per = per;
  }
}

struct Prefix {
  int nx = 0, ny = 0;
  std::vector<long double> mass;
  std::vector<long> count;

  explicit Prefix(const CellMeasure& m) : nx(m.grid.extent[0]), ny(m.grid.extent[1]) {
    const std::size_t w = static_cast<std::size_t>(nx + 1);
    mass.assign(w * static_cast<std::size_t>(ny + 1), 0.0L);
    count.assign(mass.size(), 0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = m.grid.index(i, j);
        const std::size_t p = static_cast<std::size_t>(j + 1) * w + static_cast<std::size_t>(i + 1);
        const std::size_t l = p - 1, d = p - w, ld = p - w - 1;
        mass[p] = (m.inside[k] ? m.mass[k] : 0.0L) + mass[l] + mass[d] - mass[ld];
        count[p] = (m.inside[k] ? 1 : 0) + count[l] + count[d] - count[ld];
      }
  }
  template <class V>
  static auto box_sum(const std::vector<V>& s, int nx, int i0, int j0, int i1, int j1) {
    const std::size_t w = static_cast<std::size_t>(nx + 1);
    auto at = [&](int i, int j) { return s[static_cast<std::size_t>(j) * w + static_cast<std::size_t>(i)]; };
    return at(i1 + 1, j1 + 1) - at(i0, j1 + 1) - at(i1 + 1, j0) + at(i0, j0);
  }
};

void scan_corner(const CellMeasure& m, const Prefix& pre, int cap, int i0, int j0, RectBest& best) {
  const Grid& g = m.grid;
  const int nx = pre.nx, ny = pre.ny;
  const int jmax = cap > 0 ? std::min(ny - 1, j0 + cap - 1) : ny - 1;
  const int imax = cap > 0 ? std::min(nx - 1, i0 + cap - 1) : nx - 1;
  for (int j1 = j0; j1 <= jmax; ++j1)
    for (int i1 = i0; i1 <= imax; ++i1) {
      const long area = static_cast<long>(i1 - i0 + 1) * static_cast<long>(j1 - j0 + 1);
      if (Prefix::box_sum(pre.count, nx, i0, j0, i1, j1) != area) continue;
      ++best.tested;
      const double nu = static_cast<double>(Prefix::box_sum(pre.mass, nx, i0, j0, i1, j1));
      const double per = g.dim == 2 ? 2.0 * static_cast<double>((i1 - i0 + 1) + (j1 - j0 + 1)) * g.h : 2.0;
      rect_offer(best, nu / per, {i0, j0, i1, j1}, nu, per);
    }
}

EtaMarginReport rect_report(const RectBest& best, int cap) {
  EtaMarginReport rep;
  rep.family = "axis rectangles" + (cap > 0 ? " up to " + std::to_string(cap) + " cells per side" : std::string());
  rep.tested = best.tested;
  if (best.tested == 0) return rep;
  rep.worst.kind = "rectangle";
  rep.worst.box = best.box;
  rep.worst.nu = best.nu;
  rep.worst.perimeter = best.per;
  rep.worst.ratio = best.ratio;
  rep.max_ratio = best.ratio;
  rep.eta_star = 1.0 - best.ratio;
  return rep;
}

}  // namespace

EtaMarginReport eta_margin_rectangles(const CellMeasure& m, int cap) {
  const Prefix pre(m);
  const int nx = pre.nx, ny = pre.ny;
  const long corners = static_cast<long>(nx) * ny;
  RectBest best;
#pragma omp parallel
  {
    RectBest local;
#pragma omp for schedule(dynamic, 4) nowait
    for (long c = 0; c < corners; ++c) scan_corner(m, pre, cap, static_cast<int>(c % nx), static_cast<int>(c / nx), local);
#pragma omp critical(eta_rect)
    {
      best.tested += local.tested;
      if (local.tested > 0) rect_offer(best, local.ratio, local.box, local.nu, local.per);
    }
  }
  return rect_report(best, cap);
}

EtaMarginReport eta_margin_rectangles_serial(const CellMeasure& m, int cap) {
  const Prefix pre(m);
  RectBest best;
  for (int j0 = 0; j0 < pre.ny; ++j0)
    for (int i0 = 0; i0 < pre.nx; ++i0) scan_corner(m, pre, cap, i0, j0, best);
  return rect_report(best, cap);
}

EtaMarginReport eta_margin(const CellMeasure& nu, const EtaFamily& family) {
  const Grid& g = nu.grid;
  for (std::size_t k = 0; k < nu.mass.size(); ++k)
    if (nu.inside[k] && nu.mass[k] < 0.0) throw ContractError("eta_margin: measure must be nonnegative");

  std::vector<EtaSet> members;
  if (g.dim == 2 && !family.ball_radii.empty()) {
    const int stride = std::max(1, family.ball_stride);
    for (int j = 0; j < g.extent[1]; j += stride)
      for (int i = 0; i < g.extent[0]; i += stride) {
        if (!nu.inside[g.index(i, j)]) continue;
        for (double r : family.ball_radii) {
          EtaSet s;
          s.kind = "ball";
          s.center = g.center(i, j);
          s.a = r;
          members.push_back(s);
        }
      }
  }
  for (const auto& an : family.annuli) {
    EtaSet s;
    s.kind = "annulus";
    s.center = an.center;
    s.a = an.inner;
    s.b = an.outer;
    members.push_back(s);
  }
  if (family.field)
    for (double t : family.levels) {
      EtaSet s;
      s.kind = "superlevel";
      s.a = t;
      members.push_back(s);
    }

  std::vector<char> status(members.size(), 0);  // 0 ok, 1 outside, 2 zero perimeter
#pragma omp parallel for schedule(dynamic)
  for (std::size_t m = 0; m < members.size(); ++m) {
    EtaSet& s = members[m];
    std::vector<double> level(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.center(k);
      if (s.kind == "ball") {
        level[k] = s.a - distance(x, s.center);
      } else if (s.kind == "annulus") {
        const double d = distance(x, s.center);
        level[k] = std::min(d - s.a, s.b - d);
      } else {
        const ScalarField& f = *family.field;
        level[k] = f.finite(k) ? f[k] - s.a : (f.is_neg_inf(k) ? -kInf : std::numeric_limits<double>::quiet_NaN());
        if (std::isinf(level[k])) level[k] = -1.0;
      }
    }
    const DiscreteSet ds = set_from_level(g, std::move(level));
    long double mass = 0.0L;
    bool outside = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!ds.contains(k)) continue;
      if (!nu.inside[k]) outside = true;
      mass += nu.mass[k];
    }
    if (outside) {
      status[m] = 1;
      continue;
    }
    s.nu = static_cast<double>(mass);
    s.perimeter = ds.perimeter;
    if (!(s.perimeter > 0.0)) {
      status[m] = 2;
      continue;
    }
    s.ratio = s.nu / s.perimeter;
  }

  EtaMarginReport rep;
  rep.family = family.describe();
  if (family.rectangles) {
    const EtaMarginReport r = eta_margin_rectangles(nu, family.rect_cap);
    rep.tested = r.tested;
    if (r.tested > 0) {
      rep.worst = r.worst;
      rep.max_ratio = r.max_ratio;
    }
  }
  bool have = rep.tested > 0;
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (status[m] == 1) {
      ++rep.excluded_outside;
      continue;
    }
    if (status[m] == 2) {
      ++rep.excluded_zero_perimeter;
      continue;
    }
    ++rep.tested;
    if (!have || members[m].ratio > rep.max_ratio) {
      rep.max_ratio = members[m].ratio;
      rep.worst = members[m];
      have = true;
    }
  }
  rep.eta_star = have ? 1.0 - rep.max_ratio : 1.0;
  if (!have) rep.max_ratio = 0.0;
  return rep;
}

double decay_threshold(double eta) {
  if (!(eta > 0.0 && eta < 2.0)) throw ContractError("decay_threshold: eta must lie in (0, 2)");
  // y/√(1+y²) = a with y = T^{2/3}; the left side is increasing in y.
  const double a = 1.0 - 0.5 * eta;
  const double y = a / std::sqrt((1.0 - a) * (1.0 + a));
  return std::pow(y, 1.5);
}

DecayReport decay_bound_check(const ScalarField& u, const DomainMask& mask, double eta) {
  if (!(eta > 0.0)) throw ContractError("decay_bound_check: eta must be positive");
  const Grid& g = u.grid();
  const int n = g.dim;
  DecayReport rep;
  rep.eta = eta;
  rep.T = decay_threshold(eta);
  double umin = kInf, bmin = kInf;
  std::vector<double> vals;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask.boundary(k) && u.finite(k)) bmin = std::min(bmin, u[k]);
    if (!mask.interior(k)) continue;
    if (!u.finite(k)) throw ContractError("decay_bound_check: u must be finite on the interior");
    umin = std::min(umin, u[k]);
    vals.push_back(u[k]);
  }
  if (vals.empty()) throw ContractError("decay_bound_check: empty interior");
  if (!std::isfinite(bmin)) throw ContractError("decay_bound_check: u is not bounded below on the boundary");
  std::sort(vals.begin(), vals.end());
  rep.anchor = std::max(rep.T, -bmin);
  rep.vanish = -umin;

  auto phi = [&](double t) {
    const auto it = std::upper_bound(vals.begin(), vals.end(), -t);
    return static_cast<double>(it - vals.begin()) * g.cell_volume();
  };
  const double tmax = 2.0 * std::max(rep.anchor, rep.vanish);
  std::vector<double> extra{rep.anchor, tmax};
  if (rep.vanish > rep.anchor) extra.push_back(rep.vanish * (1.0 - 1e-12));
  const auto levels = geometric_levels(rep.anchor, tmax, extra);

  const double inv_n = 1.0 / n;
  const double a0 = std::pow(phi(rep.anchor), inv_n);
  const double s0 = std::cbrt(rep.anchor);
  double c = kInf, first_zero = kInf;
  for (double t : levels) {
    const double pr = std::pow(phi(t), inv_n);
    rep.samples.push_back({t, phi(t), pr, 0.0});
    if (t <= rep.anchor) continue;
    const double span = eta * (std::cbrt(t) - s0);
    if (pr > 0.0) c = std::min(c, (a0 - pr) / span);
    else first_zero = std::min(first_zero, t);
  }
  if (a0 == 0.0) {
    rep.fitted_c = 0.0;
    rep.predicted = rep.anchor;
  } else {
    if (!std::isfinite(c)) c = a0 / (eta * (std::cbrt(first_zero) - s0));
    rep.fitted_c = std::max(c, 0.0);
    rep.predicted = rep.fitted_c > 0.0 ? std::pow(s0 + a0 / (rep.fitted_c * eta), 3.0) : kInf;
  }
  rep.dominates = true;
  for (auto& s : rep.samples) {
    s.envelope = std::max(0.0, a0 + rep.fitted_c * eta * (s0 - std::cbrt(s.t)));
    if (s.t >= rep.anchor && s.phi_root > s.envelope * (1.0 + 1e-12) + 1e-15) rep.dominates = false;
  }
  const bool vanished = !rep.samples.empty() && rep.samples.back().phi == 0.0;
  rep.pass = vanished && rep.dominates && std::isfinite(rep.predicted) &&
             rep.vanish <= rep.predicted * (1.0 + 1e-9) + 1e-15;
  return rep;
}

double truncated_bv_norm(const ScalarField& u, double t, const ClipBall& window) {
  if (!(t >= 0.0)) throw ContractError("truncated_bv_norm: t must be nonnegative");
  const Grid& g = u.grid();
  ScalarField ut(g, u.provenance());
  std::vector<std::uint8_t> in(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!u.defined(k)) continue;
    ut.set(k, u.finite(k) ? std::max(u[k], -t) : -t);
    in[k] = distance(g.center(k), window.center) < window.radius ? 1 : 0;
  }
  long double sum = 0.0L;
  for (int axis = 0; axis < g.dim; ++axis)
    for (int j = 0; j < g.extent[1]; ++j)
      for (int i = 0; i < g.extent[0]; ++i) {
        const FaceEval f = eval_face(ut, axis, i, j);
        if (!f.valid || !in[f.cells[0]] || !in[f.cells[1]]) continue;
        sum += std::hypot(f.p[0], f.p[1]);
      }
  return static_cast<double>(sum) * g.cell_volume() / g.dim;
}

}  // namespace mcm
