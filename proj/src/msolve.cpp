#include "mcm/msolve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mcm/geometry.hpp"
#include "mcm/mco.hpp"

namespace mcm {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

std::string to_string(InitPolicy p) {
  switch (p) {
    case InitPolicy::Harmonic: return "harmonic";
    case InitPolicy::Zero: return "zero";
    case InitPolicy::Provided: return "provided";
  }
  return "harmonic";
}

InitPolicy init_policy_from_string(const std::string& s) {
  if (s == "harmonic") return InitPolicy::Harmonic;
  if (s == "zero") return InitPolicy::Zero;
  if (s == "provided") return InitPolicy::Provided;
  throw ContractError("unknown init policy '" + s + "'");
}

void SolveOptions::validate() const {
  if (!(tol > 0.0)) throw ContractError("SolveOptions: tol must be > 0");
  if (max_iter < 1) throw ContractError("SolveOptions: max_iter must be >= 1");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ContractError("SolveOptions: armijo must lie in (0,1)");
  if (backtracks < 0) throw ContractError("SolveOptions: backtracks must be >= 0");
  if (kappa && !(*kappa > 0.0)) throw ContractError("SolveOptions: kappa must be > 0");
  if (kappa_floor && !(*kappa_floor > 0.0)) throw ContractError("SolveOptions: kappa_floor must be > 0");
}

namespace {

struct CellFace {
  int axis, i, j;
  double sign;
};

/// The faces of cell (i, j) with outward orientation.
int cell_faces(const Grid& g, int i, int j, CellFace out[4]) {
  out[0] = {0, i - 1, j, -1.0};
  out[1] = {0, i, j, 1.0};
  if (g.dim == 1) return 2;
  out[2] = {1, i, j - 1, -1.0};
  out[3] = {1, i, j, 1.0};
  return 4;
}

double rhs_at(const ScalarField* f, std::size_t k) { return f ? f->value(k) : 0.0; }

void check_layer(const Region& reg, const ScalarField& u) {
  for (std::size_t k : reg.layer)
    if (!u.finite(k))
      throw ContractError("solve: boundary data not finite at cell (" + std::to_string(reg.grid.col(k)) + "," +
                          std::to_string(reg.grid.row(k)) + ")");
}

/// Residual H₁[u] − f on the region interior.
Vec residual_vector(const Region& reg, const ScalarField* f, const ScalarField& u) {
  const Grid& g = reg.grid;
  Vec R(static_cast<Eigen::Index>(reg.interior.size()));
  CellFace faces[4];
  for (std::size_t r = 0; r < reg.interior.size(); ++r) {
    const std::size_t k = reg.interior[r];
    const int i = g.col(k), j = g.row(k);
    const int nf = cell_faces(g, i, j, faces);
    double s = 0.0;
    for (int q = 0; q < nf; ++q) {
      const FaceEval fe = eval_face(u, faces[q].axis, faces[q].i, faces[q].j);
      if (!fe.valid) throw ContractError("solve: stencil leaves the finite region");
      s += faces[q].sign * fe.F[faces[q].axis];
    }
    R[static_cast<Eigen::Index>(r)] = s / g.h - rhs_at(f, k);
  }
  return R;
}

SpMat jacobian(const Region& reg, const ScalarField& u) {
  const Grid& g = reg.grid;
  const double h = g.h;
  std::vector<Triplet> trip;
  trip.reserve(reg.interior.size() * (g.dim == 2 ? 24 : 4));
  CellFace faces[4];
  for (std::size_t r = 0; r < reg.interior.size(); ++r) {
    const std::size_t k = reg.interior[r];
    const int nf = cell_faces(g, g.col(k), g.row(k), faces);
    for (int q = 0; q < nf; ++q) {
      const FaceEval fe = eval_face(u, faces[q].axis, faces[q].i, faces[q].j);
      const int a = faces[q].axis;
      // ∂F_a/∂p_b = (δ_ab − F_a F_b)/W
      double A[2];
      for (int b = 0; b < 2; ++b) A[b] = ((a == b ? 1.0 : 0.0) - fe.F[a] * fe.F[b]) / fe.W;
      for (int m = 0; m < fe.ncells; ++m) {
        const std::size_t cell = fe.cells[static_cast<std::size_t>(m)];
        const int col = reg.local_index(g.col(cell), g.row(cell));
        if (col < 0) continue;
        double d = A[0] * fe.dp(0, m, h);
        if (g.dim == 2) d += A[1] * fe.dp(1, m, h);
        if (d != 0.0) trip.emplace_back(static_cast<int>(r), col, faces[q].sign * d / h);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(reg.interior.size());
  SpMat J(n, n);
  J.setFromTriplets(trip.begin(), trip.end());
  J.makeCompressed();
  return J;
}

void scatter(const Region& reg, const Vec& x, ScalarField& u) {
  for (std::size_t r = 0; r < reg.interior.size(); ++r) u.set(reg.interior[r], x[static_cast<Eigen::Index>(r)]);
}

Vec gather(const Region& reg, const ScalarField& u) {
  Vec x(static_cast<Eigen::Index>(reg.interior.size()));
  for (std::size_t r = 0; r < reg.interior.size(); ++r) x[static_cast<Eigen::Index>(r)] = u[reg.interior[r]];
  return x;
}

/// Nonsymmetric Newton systems: LU with a reused symbolic analysis, or
/// diagonally preconditioned BiCGSTAB above the size limit.
class NewtonLinearSolver {
 public:
  explicit NewtonLinearSolver(std::size_t direct_limit) : direct_limit_(direct_limit) {}

  /// `forcing` is the relative residual target of the iterative branch.
  bool solve(const SpMat& J, const Vec& rhs, Vec& x, double forcing) {
    if (static_cast<std::size_t>(J.rows()) <= direct_limit_) {
      if (!analysed_) {
        lu_.analyzePattern(J);
        analysed_ = true;
      }
      lu_.factorize(J);
      if (lu_.info() != Eigen::Success) return false;
      x = lu_.solve(rhs);
      return lu_.info() == Eigen::Success && x.allFinite();
    }
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(forcing);
    it.setMaxIterations(20000);
    it.compute(J);
    x = it.solve(rhs);
    return x.allFinite() && (it.info() == Eigen::Success || it.error() < 10.0 * forcing);
  }

 private:
  std::size_t direct_limit_;
  bool analysed_ = false;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace

void harmonic_extension(const Region& reg, ScalarField& u) {
  const Grid& g = reg.grid;
  check_layer(reg, u);
  const auto n = static_cast<Eigen::Index>(reg.interior.size());
  std::vector<Triplet> trip;
  Vec b = Vec::Zero(n);
  const int nb_count = g.dim == 2 ? 4 : 2;
  const int off[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (std::size_t r = 0; r < reg.interior.size(); ++r) {
    const std::size_t k = reg.interior[r];
    const int i = g.col(k), j = g.row(k);
    trip.emplace_back(static_cast<int>(r), static_cast<int>(r), static_cast<double>(nb_count));
    for (int q = 0; q < nb_count; ++q) {
      const int a = i + off[q][0], c = j + off[q][1];
      const int col = reg.local_index(a, c);
      if (col >= 0) {
        trip.emplace_back(static_cast<int>(r), col, -1.0);
      } else {
        const std::size_t m = g.index(a, c);
        if (!u.finite(m)) throw ContractError("harmonic_extension: neighbour outside the region data");
        b[static_cast<Eigen::Index>(r)] += u[m];
      }
    }
  }
  SpMat L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  Vec x;
  if (reg.interior.size() <= 400000) {
    Eigen::SimplicialLDLT<SpMat> ldlt(L);
    x = ldlt.solve(b);
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(L);
    cg.setTolerance(1e-10);
    x = cg.solve(b);
  }
  scatter(reg, x, u);
}

double region_residual(const Region& region, const ScalarField* f, const ScalarField& u) {
  const Vec R = residual_vector(region, f, u);
  return R.size() == 0 ? 0.0 : R.cwiseAbs().maxCoeff();
}

SolveOutcome solve_in_place(const Region& reg, const ScalarField* f, ScalarField& u, const SolveOptions& opts) {
  opts.validate();
  check_layer(reg, u);
  SolveOutcome out;

  switch (opts.init) {
    case InitPolicy::Harmonic: harmonic_extension(reg, u); break;
    case InitPolicy::Zero:
      for (std::size_t k : reg.interior) u.set(k, 0.0);
      break;
    case InitPolicy::Provided: {
      bool ok = true;
      for (std::size_t k : reg.interior) ok = ok && u.finite(k);
      if (!ok) harmonic_extension(reg, u);
      break;
    }
  }

  Vec x = gather(reg, u);
  Vec R = residual_vector(reg, f, u);
  double res = R.size() ? R.cwiseAbs().maxCoeff() : 0.0;
  NewtonLinearSolver lin(opts.direct_limit);
  int it = 0;
  for (; it < opts.max_iter && res > opts.tol; ++it) {
    const SpMat J = jacobian(reg, u);
    Vec d;
    // Eisenstat-Walker style forcing keeps the outer iteration superlinear.
    const double forcing = std::clamp(res, 1e-10, 1e-3);
    if (!lin.solve(J, -R, d, forcing)) {
      out.diagnosis = "linear solve failed";
      break;
    }
    const double r2 = R.norm();
    double alpha = 1.0;
    bool accepted = false;
    Vec xt, Rt;
    for (int bt = 0; bt <= opts.backtracks; ++bt, alpha *= 0.5) {
      xt = x + alpha * d;
      scatter(reg, xt, u);
      Rt = residual_vector(reg, f, u);
      if (Rt.allFinite() && Rt.norm() <= (1.0 - opts.armijo * alpha) * r2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      scatter(reg, x, u);
      out.diagnosis = "line search stalled";
      break;
    }
    x = xt;
    R = Rt;
    res = R.cwiseAbs().maxCoeff();
  }
  out.iterations = it;
  out.residual = res;
  out.converged = res <= opts.tol;
  if (out.converged) out.diagnosis = "converged";
  else if (out.diagnosis.empty()) out.diagnosis = "iteration limit";
  return out;
}

SolveOutcome solve_on_region(const Region& reg, const ScalarField* f, const ScalarField& data,
                             const SolveOptions& opts) {
  ScalarField u = data;
  u.set_provenance(Provenance::Solved);
  SolveOutcome out = solve_in_place(reg, f, u, opts);
  out.solution = std::move(u);
  return out;
}

SolveOutcome solve_dirichlet(const DomainMask& mask, const ScalarField* f, const ScalarField& phi,
                             const SolveOptions& opts) {
  if (!(phi.grid() == mask.grid)) throw ContractError("solve_dirichlet: phi grid differs from the mask grid");
  const Region reg = region_of(mask);
  ScalarField data(mask.grid, Provenance::Solved);
  for (std::size_t k = 0; k < mask.grid.size(); ++k) {
    if (mask.boundary(k)) {
      if (!phi.finite(k)) throw ContractError("solve_dirichlet: phi not finite on boundary cell");
      data.set(k, phi[k]);
    } else if (mask.interior(k) && phi.finite(k)) {
      data.set(k, phi[k]);
    }
  }
  return solve_on_region(reg, f, data, opts);
}

namespace {

// Linear element on a triangle of cell centres (a segment in 1D). p = Σ_m gm·u_m.
struct Element {
  std::array<std::size_t, 3> v{};
  std::array<std::array<double, 2>, 3> gm{};
  int nv = 0;
  double weight = 0.0;

  std::array<double, 2> gradient(const ScalarField& u) const {
    std::array<double, 2> p{0.0, 0.0};
    for (int m = 0; m < nv; ++m) {
      p[0] += gm[static_cast<std::size_t>(m)][0] * u[v[static_cast<std::size_t>(m)]];
      p[1] += gm[static_cast<std::size_t>(m)][1] * u[v[static_cast<std::size_t>(m)]];
    }
    return p;
  }
};

// Dual squares (segments in 1D) whose corners are all inside and touch an
// interior cell. Each square carries both diagonal splittings at weight h²/4,
// so affine functions are exact minimizers at every interior cell.
std::vector<Element> build_elements(const DomainMask& mask) {
  const Grid& g = mask.grid;
  const double h = g.h, r = 1.0 / h;
  std::vector<Element> out;
  if (g.dim == 1) {
    for (int i = 0; i + 1 < g.extent[0]; ++i) {
      const std::size_t a = g.index(i, 0), b = g.index(i + 1, 0);
      if (!mask.inside(a) || !mask.inside(b) || (!mask.interior(a) && !mask.interior(b))) continue;
      Element e;
      e.nv = 2;
      e.v = {a, b, 0};
      e.gm[0] = {-r, 0.0};
      e.gm[1] = {r, 0.0};
      e.weight = h;
      out.push_back(e);
    }
    return out;
  }
  for (int j = 0; j + 1 < g.extent[1]; ++j)
    for (int i = 0; i + 1 < g.extent[0]; ++i) {
      const std::size_t c00 = g.index(i, j), c10 = g.index(i + 1, j), c01 = g.index(i, j + 1),
                        c11 = g.index(i + 1, j + 1);
      const std::size_t c[4] = {c00, c10, c01, c11};
      bool all_inside = true, touches = false;
      for (std::size_t k : c) {
        all_inside = all_inside && mask.inside(k);
        touches = touches || mask.interior(k);
      }
      if (!all_inside || !touches) continue;
      auto tri = [&](std::array<std::size_t, 3> v, std::array<std::array<double, 2>, 3> gm) {
        Element e;
        e.nv = 3;
        e.v = v;
        e.gm = gm;
        e.weight = 0.25 * h * h;
        out.push_back(e);
      };
      tri({c00, c10, c11}, {{{-r, 0.0}, {r, -r}, {0.0, r}}});
      tri({c00, c11, c01}, {{{0.0, -r}, {r, 0.0}, {-r, r}}});
      tri({c00, c10, c01}, {{{-r, -r}, {r, 0.0}, {0.0, r}}});
      tri({c10, c11, c01}, {{{0.0, -r}, {r, r}, {-r, 0.0}}});
    }
  return out;
}

// ℓ_b = |Σ_T w_T ∇φ_b|_T|, the discrete outward normal length at a boundary
// cell. Any |F| < 1 plane then satisfies the trace subgradient condition.
std::vector<double> boundary_lengths(const DomainMask& mask, const std::vector<Element>& elems) {
  std::vector<std::array<double, 2>> m(mask.grid.size(), {0.0, 0.0});
  for (const auto& e : elems)
    for (int k = 0; k < e.nv; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      m[e.v[kk]][0] += e.weight * e.gm[kk][0];
      m[e.v[kk]][1] += e.weight * e.gm[kk][1];
    }
  std::vector<double> ell(mask.grid.size(), 0.0);
  for (std::size_t k = 0; k < ell.size(); ++k)
    if (mask.boundary(k)) ell[k] = std::hypot(m[k][0], m[k][1]);
  return ell;
}

struct MinimizerProblem {
  const DomainMask& mask;
  const ScalarField& g;
  const ScalarField& phi;
  std::vector<Element> elems;
  std::vector<double> ell;
  std::vector<int> local;  // per cell: unknown index or −1
  std::vector<std::size_t> unknowns;
  double kappa;
  double hn;

  // x holds u at interior unknowns and s = u − φ at boundary unknowns, so the
  // smoothed penalty keeps full precision as κ shrinks.
  double energy(const ScalarField& u, const Vec& x) const {
    long double e = 0.0L;
    for (const auto& el : elems) {
      const auto p = el.gradient(u);
      e += el.weight * std::sqrt(1.0 + p[0] * p[0] + p[1] * p[1]);
    }
    for (std::size_t r = 0; r < unknowns.size(); ++r) {
      const std::size_t k = unknowns[r];
      const double xr = x[static_cast<Eigen::Index>(r)];
      if (mask.interior(k)) e += static_cast<long double>(g.value(k)) * xr * hn;
      else {
        const double s = xr;
        e += ell[k] * (std::sqrt(s * s + kappa * kappa) - kappa);
      }
    }
    const auto r = static_cast<double>(e);
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  }

  void gradient_hessian(const ScalarField& u, const Vec& x, Vec& grad, SpMat* hess) const {
    const auto n = static_cast<Eigen::Index>(unknowns.size());
    grad = Vec::Zero(n);
    std::vector<Triplet> trip;
    for (const auto& el : elems) {
      const auto p = el.gradient(u);
      const double W = std::sqrt(1.0 + p[0] * p[0] + p[1] * p[1]);
      const double F[2] = {p[0] / W, p[1] / W};
      double A[2][2];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) A[a][b] = ((a == b ? 1.0 : 0.0) - F[a] * F[b]) / W;
      for (int m = 0; m < el.nv; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        const int lm = local[el.v[mm]];
        if (lm < 0) continue;
        grad[lm] += el.weight * (F[0] * el.gm[mm][0] + F[1] * el.gm[mm][1]);
        if (!hess) continue;
        for (int l = 0; l < el.nv; ++l) {
          const auto ll = static_cast<std::size_t>(l);
          const int lc = local[el.v[ll]];
          if (lc < 0) continue;
          double v = 0.0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) v += el.gm[mm][a] * A[a][b] * el.gm[ll][b];
          if (v != 0.0) trip.emplace_back(lm, lc, el.weight * v);
        }
      }
    }
    for (std::size_t r = 0; r < unknowns.size(); ++r) {
      const std::size_t k = unknowns[r];
      const auto ri = static_cast<Eigen::Index>(r);
      if (mask.interior(k)) {
        grad[ri] += g.value(k) * hn;
      } else {
        const double s = x[ri];
        const double q = std::sqrt(s * s + kappa * kappa);
        grad[ri] += ell[k] * s / q;
        if (hess) trip.emplace_back(static_cast<int>(r), static_cast<int>(r), ell[k] * kappa * kappa / (q * q * q));
      }
    }
    if (hess) {
      *hess = SpMat(n, n);
      hess->setFromTriplets(trip.begin(), trip.end());
    }
  }
};

}  // namespace

SolveOutcome minimize_prescribed_mc(const DomainMask& mask, const ScalarField& g, const ScalarField& phi,
                                    const SolveOptions& opts) {
  opts.validate();
  const Grid& grid = mask.grid;
  MinimizerProblem P{mask, g, phi, build_elements(mask), {}, {}, {}, opts.kappa.value_or(grid.h),
                     grid.cell_volume()};
  P.ell = boundary_lengths(mask, P.elems);
  P.local.assign(grid.size(), -1);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (mask.boundary(k) && !phi.finite(k)) throw ContractError("minimize_prescribed_mc: phi not finite on boundary");
    if (mask.interior(k) && !g.finite(k)) throw ContractError("minimize_prescribed_mc: g not finite on interior");
    if (mask.interior(k) || (mask.boundary(k) && P.ell[k] > 0.0)) {
      P.local[k] = static_cast<int>(P.unknowns.size());
      P.unknowns.push_back(k);
    }
  }

  SolveOutcome out;
  out.solution = ScalarField(grid, Provenance::Solved);
  ScalarField& u = out.solution;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (mask.boundary(k)) u.set(k, phi[k]);
  harmonic_extension(region_of(mask), u);

  double phi_max = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (mask.boundary(k)) phi_max = std::max(phi_max, std::abs(phi[k]));
  const double blowup = 1e6 * (1.0 + phi_max);

  auto gather_u = [&] {
    Vec x(static_cast<Eigen::Index>(P.unknowns.size()));
    for (std::size_t r = 0; r < P.unknowns.size(); ++r) {
      const std::size_t k = P.unknowns[r];
      x[static_cast<Eigen::Index>(r)] = mask.interior(k) ? u[k] : u[k] - phi[k];
    }
    return x;
  };
  auto scatter_u = [&](const Vec& x) {
    for (std::size_t r = 0; r < P.unknowns.size(); ++r) {
      const std::size_t k = P.unknowns[r];
      const double xr = x[static_cast<Eigen::Index>(r)];
      u.set(k, mask.interior(k) ? xr : phi[k] + xr);
    }
  };

  Vec x = gather_u();
  double E = 0.0;
  double stat = 0.0;
  int it = 0;
  Vec grad;
  SpMat H;
  // κ continuation: each stage starts from the previous minimizer.
  const double kappa_floor = std::min(opts.kappa_floor.value_or(1e-8 * P.kappa), P.kappa);
  for (bool last = false; !last;) {
    last = P.kappa <= kappa_floor * (1.0 + 1e-12);
    E = P.energy(u, x);
    P.gradient_hessian(u, x, grad, &H);
    stat = grad.size() ? grad.cwiseAbs().maxCoeff() / P.hn : 0.0;
    for (int stage_it = 0; stage_it < opts.max_iter && stat > opts.tol; ++it, ++stage_it) {
      Vec d;
      bool ok = false;
      if (P.unknowns.size() <= opts.direct_limit) {
        Eigen::SimplicialLDLT<SpMat> ldlt(H);
        if (ldlt.info() == Eigen::Success) {
          d = ldlt.solve(-grad);
          ok = ldlt.info() == Eigen::Success && d.allFinite();
        }
      } else {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(H);
        cg.setTolerance(1e-10);
        d = cg.solve(-grad);
        ok = d.allFinite();
      }
      if (!ok) {
        out.diagnosis = "linear solve failed";
        break;
      }
      const double slope = grad.dot(d);
      double alpha = 1.0;
      bool accepted = false;
      Vec xt;
      double Et = E;
      for (int bt = 0; bt <= opts.backtracks; ++bt, alpha *= 0.5) {
        xt = x + alpha * d;
        scatter_u(xt);
        Et = P.energy(u, xt);
        if (std::isfinite(Et) && Et <= E + opts.armijo * alpha * slope) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        scatter_u(x);
        out.diagnosis = "line search stalled";
        break;
      }
      x = xt;
      E = Et;
      if (x.cwiseAbs().maxCoeff() > blowup) {
        out.diagnosis = "unbounded descent: functional keeps decreasing along the witness direction";
        out.witness.assign(d.data(), d.data() + d.size());
        const double nrm = d.norm();
        if (nrm > 0.0)
          for (double& w : out.witness) w /= nrm;
        break;
      }
      P.gradient_hessian(u, x, grad, &H);
      stat = grad.cwiseAbs().maxCoeff() / P.hn;
    }
    if (!out.diagnosis.empty() || stat > opts.tol) break;
    if (last) break;
    // The detachment s scales with κ at fixed flux, so rescale it for the next stage.
    const double next = std::max(kappa_floor, 0.1 * P.kappa);
    for (std::size_t r = 0; r < P.unknowns.size(); ++r)
      if (!mask.interior(P.unknowns[r])) x[static_cast<Eigen::Index>(r)] *= next / P.kappa;
    P.kappa = next;
    scatter_u(x);
  }
  out.kappa = P.kappa;
  out.iterations = it;
  out.residual = stat;
  out.functional = E;
  out.converged = stat <= opts.tol && out.witness.empty();
  if (out.converged) out.diagnosis = "converged";
  else if (out.diagnosis.empty()) out.diagnosis = "iteration limit";
  return out;
}

}  // namespace mcm
