#include "mcm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mcm {

namespace {

void fill_caches(DiscreteSet& s) {
  s.cells = 0;
  for (auto m : s.member) s.cells += m ? 1 : 0;
  s.volume = static_cast<double>(s.cells) * s.grid.cell_volume();
  std::size_t amb = 0;
  double len = 0.0;
  for (const auto& seg : interface_segments(s, &amb)) len += seg.length;
  s.perimeter = len;
}

/// Level value used for interpolation; NaN when the cell is off grid or has
/// no level data.
double level_at(const DiscreteSet& s, int i, int j) {
  if (!s.grid.contains(i, j)) return std::numeric_limits<double>::quiet_NaN();
  if (s.level.empty()) return std::numeric_limits<double>::quiet_NaN();
  return s.level[s.grid.index(i, j)];
}

bool member_at(const DiscreteSet& s, int i, int j) {
  return s.grid.contains(i, j) && s.member[s.grid.index(i, j)] != 0;
}

long cell_id(const Grid& g, int i, int j) {
  return g.contains(i, j) ? static_cast<long>(g.index(i, j)) : -1;
}

/// Centre used for interpolation; off-grid cells still have a position.
Point position(const Grid& g, int i, int j) {
  return {g.origin[0] + i * g.h, g.dim == 2 ? g.origin[1] + j * g.h : 0.0};
}

/// Interface point on the dual edge from member cell p to non-member cell q.
Point crossing(const DiscreteSet& s, int pi, int pj, int qi, int qj) {
  const Point xp = position(s.grid, pi, pj), xq = position(s.grid, qi, qj);
  const double lp = level_at(s, pi, pj), lq = level_at(s, qi, qj);
  if (s.clip && s.grid.contains(qi, qj) && !std::isnan(lq)) {
    const double dq = distance(xq, s.clip->center);
    const double dp = distance(xp, s.clip->center);
    if (dq >= s.clip->radius && dp < s.clip->radius && lq == s.clip->radius - dq) {
      // exit through the clip sphere: exact segment-circle intersection
      const double ex = xq[0] - xp[0], ey = xq[1] - xp[1];
      const double fx = xp[0] - s.clip->center[0], fy = xp[1] - s.clip->center[1];
      const double a = ex * ex + ey * ey;
      const double b = 2.0 * (fx * ex + fy * ey);
      const double c = fx * fx + fy * fy - s.clip->radius * s.clip->radius;
      const double disc = std::max(0.0, b * b - 4.0 * a * c);
      const double tpar = std::clamp((-b + std::sqrt(disc)) / (2.0 * a), 0.0, 1.0);
      return {xp[0] + tpar * ex, xp[1] + tpar * ey};
    }
  }
  double frac = 0.5;
  if (!std::isnan(lp) && !std::isnan(lq) && lp > 0.0 && lq <= 0.0) frac = lp / (lp - lq);
  return {xp[0] + frac * (xq[0] - xp[0]), xp[1] + frac * (xq[1] - xp[1])};
}

bool near_clip(const DiscreteSet& s, const Point& m) {
  return s.clip && std::abs(distance(m, s.clip->center) - s.clip->radius) <= s.grid.h;
}

void interface_points_1d(const DiscreteSet& s, std::vector<Segment>& out) {
  const Grid& g = s.grid;
  for (int i = -1; i < g.extent[0]; ++i) {
    const bool a = member_at(s, i, 0), b = member_at(s, i + 1, 0);
    if (a == b) continue;
    const Point x = a ? crossing(s, i, 0, i + 1, 0) : crossing(s, i + 1, 0, i, 0);
    Segment seg;
    seg.a = seg.b = x;
    seg.length = 1.0;
    seg.on_clip = near_clip(s, x);
    seg.outer = {a ? cell_id(g, i + 1, 0) : cell_id(g, i, 0), -1};
    out.push_back(seg);
  }
}

}  // namespace

DiscreteSet superlevel_set(const ScalarField& u, double t, std::optional<ClipBall> clip) {
  if (!std::isfinite(t)) throw ContractError("superlevel_set: level t must be finite");
  DiscreteSet s;
  s.grid = u.grid();
  s.clip = clip;
  s.member.assign(u.size(), 0);
  s.level.assign(u.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!u.finite(k)) continue;
    double l = u[k] - t;
    if (clip) l = std::min(l, clip->radius - distance(s.grid.center(k), clip->center));
    s.level[k] = l;
    s.member[k] = l > 0.0 ? 1 : 0;
  }
  fill_caches(s);
  return s;
}

DiscreteSet set_from_indicator(const Grid& grid, std::vector<std::uint8_t> member) {
  if (member.size() != grid.size()) throw ContractError("set_from_indicator: size mismatch");
  DiscreteSet s;
  s.grid = grid;
  s.member = std::move(member);
  fill_caches(s);
  return s;
}

DiscreteSet set_from_level(const Grid& grid, std::vector<double> level) {
  if (level.size() != grid.size()) throw ContractError("set_from_level: size mismatch");
  DiscreteSet s;
  s.grid = grid;
  s.member.assign(grid.size(), 0);
  for (std::size_t k = 0; k < grid.size(); ++k) s.member[k] = level[k] > 0.0 ? 1 : 0;
  s.level = std::move(level);
  fill_caches(s);
  return s;
}

DiscreteSet domain_set(const DomainMask& mask) {
  std::vector<double> level(mask.grid.size());
  for (std::size_t k = 0; k < mask.grid.size(); ++k) {
    const double sd = mask.shape.signed_distance(mask.grid.center(k));
    level[k] = mask.interior(k) ? std::max(sd, 1e-300) : std::min(sd, 0.0);
  }
  return set_from_level(mask.grid, std::move(level));
}

std::vector<Segment> interface_segments(const DiscreteSet& s, std::size_t* ambiguous) {
  std::vector<Segment> out;
  if (ambiguous) *ambiguous = 0;
  const Grid& g = s.grid;
  if (g.dim == 1) {
    interface_points_1d(s, out);
    return out;
  }
  // Corners of dual square (i, j): c0=(i,j) c1=(i+1,j) c2=(i+1,j+1) c3=(i,j+1).
  // Edge e connects corners e and (e+1)%4.
  static constexpr int kCorner[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int j = -1; j < g.extent[1]; ++j) {
    for (int i = -1; i < g.extent[0]; ++i) {
      bool in[4];
      int code = 0;
      for (int c = 0; c < 4; ++c) {
        in[c] = member_at(s, i + kCorner[c][0], j + kCorner[c][1]);
        code |= in[c] ? (1 << c) : 0;
      }
      if (code == 0 || code == 15) continue;

      auto edge_point = [&](int e, long& outer) {
        const int a = e, b = (e + 1) % 4;
        const int p = in[a] ? a : b, q = in[a] ? b : a;
        const int pi = i + kCorner[p][0], pj = j + kCorner[p][1];
        const int qi = i + kCorner[q][0], qj = j + kCorner[q][1];
        outer = cell_id(g, qi, qj);
        return crossing(s, pi, pj, qi, qj);
      };
      auto emit = [&](int e0, int e1) {
        Segment seg;
        seg.a = edge_point(e0, seg.outer[0]);
        seg.b = edge_point(e1, seg.outer[1]);
        seg.length = distance(seg.a, seg.b);
        seg.on_clip = near_clip(s, {0.5 * (seg.a[0] + seg.b[0]), 0.5 * (seg.a[1] + seg.b[1])});
        out.push_back(seg);
      };

      switch (code) {
        case 1: case 14: emit(3, 0); break;
        case 2: case 13: emit(0, 1); break;
        case 4: case 11: emit(1, 2); break;
        case 8: case 7: emit(2, 3); break;
        case 3: case 12: emit(3, 1); break;
        case 6: case 9: emit(0, 2); break;
        case 5:
        case 10: {
          if (ambiguous) ++*ambiguous;
          double avg = 0.0;
          for (int c = 0; c < 4; ++c) {
            const double l = level_at(s, i + kCorner[c][0], j + kCorner[c][1]);
            avg += std::isnan(l) ? (in[c] ? 1.0 : -1.0) : l;
          }
          const bool centre_in = avg > 0.0;
          // Cut off the corners that are not connected through the centre.
          const bool cut_c0 = (code == 5) != centre_in;  // c0 is in for code 5
          if (cut_c0) {
            emit(3, 0);
            emit(1, 2);
          } else {
            emit(0, 1);
            emit(2, 3);
          }
          break;
        }
        default: break;
      }
    }
  }
  return out;
}

SetGeometry set_geometry(const DiscreteSet& s) {
  SetGeometry geo;
  geo.volume = s.volume;
  const auto segs = interface_segments(s, &geo.ambiguous);
  long double total = 0.0L, gi = 0.0L;
  for (const auto& seg : segs) {
    total += seg.length;
    if (seg.on_clip) gi += seg.length;
  }
  geo.perimeter = static_cast<double>(total);
  geo.gamma_int = static_cast<double>(gi);
  geo.gamma_bdy = static_cast<double>(total - gi);
  return geo;
}

double isoperimetric_constant(int dim) { return dim == 1 ? 2.0 : 2.0 * std::sqrt(std::numbers::pi); }

std::vector<double> boundary_length_elements(const DiscreteSet& s) {
  std::vector<double> ell(s.grid.size(), 0.0);
  for (const auto& seg : interface_segments(s)) {
    if (s.grid.dim == 1) {
      if (seg.outer[0] >= 0) ell[static_cast<std::size_t>(seg.outer[0])] += seg.length;
      continue;
    }
    for (long o : seg.outer)
      if (o >= 0) ell[static_cast<std::size_t>(o)] += 0.5 * seg.length;
  }
  return ell;
}

}  // namespace mcm
