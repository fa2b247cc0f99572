#include "mcm/mollify.hpp"

#include <cmath>

namespace mcm {

Kernel make_kernel(const Grid& grid, double eps) {
  if (!(eps >= 2.0 * grid.h * (1.0 - 1e-12)))
    throw ContractError("mollify: eps = " + std::to_string(eps) + " is below 2h = " + std::to_string(2.0 * grid.h));
  Kernel k;
  k.eps = eps;
  const int reach = static_cast<int>(std::ceil(eps / grid.h));
  const int jr = grid.dim == 2 ? reach : 0;
  long double total = 0.0L;
  for (int dj = -jr; dj <= jr; ++dj) {
    for (int di = -reach; di <= reach; ++di) {
      const double s2 = (static_cast<double>(di * di + dj * dj) * grid.h * grid.h) / (eps * eps);
      if (s2 >= 1.0) continue;
      const double w = std::exp(1.0 / (s2 - 1.0));
      k.offsets.push_back({di, dj});
      k.weights.push_back(w);
      total += w;
      k.reach = std::max(k.reach, std::max(std::abs(di), std::abs(dj)));
    }
  }
  for (double& w : k.weights) w = static_cast<double>(w / total);
  return k;
}

namespace {

void mollify_cell(const ScalarField& u, const Kernel& ker, Extension ext, int i, int j, ScalarField& out) {
  const Grid& g = u.grid();
  long double acc = 0.0L, wsum = 0.0L;
  bool skipped = false;
  for (std::size_t m = 0; m < ker.offsets.size(); ++m) {
    const int a = i + ker.offsets[m][0], b = j + ker.offsets[m][1];
    if (!g.contains(a, b)) {
      if (ext == Extension::Zero) {
        wsum += ker.weights[m];
        continue;
      }
      return;
    }
    const std::size_t k = g.index(a, b);
    if (!u.defined(k)) {
      if (ext == Extension::Zero) {
        wsum += ker.weights[m];
        continue;
      }
      return;
    }
    if (u.is_neg_inf(k)) {
      skipped = true;
      continue;
    }
    acc += static_cast<long double>(ker.weights[m]) * u[k];
    wsum += ker.weights[m];
  }
  if (wsum <= 0.0L) return;
  out.set(g.index(i, j), static_cast<double>(skipped ? acc / wsum : acc));
}

ScalarField make_output(const ScalarField& u) {
  ScalarField out(u.grid(), Provenance::Mollified);
  out.set_extended(false);
  return out;
}

}  // namespace

ScalarField mollify_field(const ScalarField& u, double eps, Extension ext) {
  const Kernel ker = make_kernel(u.grid(), eps);
  ScalarField out = make_output(u);
  const Grid& g = u.grid();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.extent[1]; ++j)
    for (int i = 0; i < g.extent[0]; ++i) mollify_cell(u, ker, ext, i, j, out);
  return out;
}

ScalarField mollify_field_serial(const ScalarField& u, double eps, Extension ext) {
  const Kernel ker = make_kernel(u.grid(), eps);
  ScalarField out = make_output(u);
  const Grid& g = u.grid();
  for (int j = 0; j < g.extent[1]; ++j)
    for (int i = 0; i < g.extent[0]; ++i) mollify_cell(u, ker, ext, i, j, out);
  return out;
}

}  // namespace mcm
