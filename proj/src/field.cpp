#include "mcm/field.hpp"

#include <algorithm>
#include <sstream>

namespace mcm {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Sampled: return "sampled";
    case Provenance::Solved: return "solved";
    case Provenance::Lifted: return "lifted";
    case Provenance::Mollified: return "mollified";
  }
  return "sampled";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "sampled") return Provenance::Sampled;
  if (s == "solved") return Provenance::Solved;
  if (s == "lifted") return Provenance::Lifted;
  if (s == "mollified") return Provenance::Mollified;
  throw ContractError("unknown provenance tag '" + s + "'");
}

double ScalarField::value(std::size_t k) const {
  if (!defined(k)) throw ContractError("ScalarField: read of undefined cell " + std::to_string(k));
  if (std::isinf(values_[k])) throw ContractError("ScalarField: arithmetic on -inf cell " + std::to_string(k));
  return values_[k];
}

void ScalarField::set_neg_inf(std::size_t k) {
  if (!extended_) throw ContractError("ScalarField: -inf stored in a non-extended field");
  values_[k] = -std::numeric_limits<double>::infinity();
  defined_[k] = 1;
}

std::size_t ScalarField::defined_count() const {
  return static_cast<std::size_t>(std::count(defined_.begin(), defined_.end(), std::uint8_t{1}));
}

std::size_t ScalarField::neg_inf_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < values_.size(); ++k) n += is_neg_inf(k) ? 1 : 0;
  return n;
}

double ScalarField::neg_inf_fraction() const {
  const std::size_t d = defined_count();
  return d == 0 ? 0.0 : static_cast<double>(neg_inf_count()) / static_cast<double>(d);
}

double ScalarField::min_finite() const {
  double m = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (finite(k) && !(values_[k] >= m)) m = values_[k];
  return m;
}

double ScalarField::max_finite() const {
  double m = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (finite(k) && !(values_[k] <= m)) m = values_[k];
  return m;
}

namespace {

void store_sample(ScalarField& out, const FieldFunction& f, std::size_t k) {
  const Point x = out.grid().center(k);
  const double v = f(x);
  if (std::isnan(v) || (std::isinf(v) && v > 0)) {
    std::ostringstream os;
    os << "sample_function: '" << f.name << "' undefined at cell (" << out.grid().col(k) << ","
       << out.grid().row(k) << ") x=(" << x[0] << "," << x[1] << ")";
    throw ContractError(os.str());
  }
  if (std::isinf(v)) {
    if (!f.neg_inf_allowed)
      throw ContractError("sample_function: '" + f.name + "' returned -inf without declaring a null set");
    out.set_extended(true);
    out.set_neg_inf(k);
    return;
  }
  out.set(k, v);
}

}  // namespace

ScalarField sample_function(const FieldFunction& f, const DomainMask& mask) {
  ScalarField out(mask.grid, Provenance::Sampled);
  out.set_extended(f.neg_inf_allowed);
  for (std::size_t k = 0; k < mask.grid.size(); ++k)
    if (mask.inside(k)) store_sample(out, f, k);
  return out;
}

ScalarField sample_everywhere(const FieldFunction& f, const Grid& grid) {
  ScalarField out(grid, Provenance::Sampled);
  out.set_extended(f.neg_inf_allowed);
  for (std::size_t k = 0; k < grid.size(); ++k) store_sample(out, f, k);
  return out;
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw ContractError("sup_distance: grids differ");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.finite(k) && b.finite(k)) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw ContractError("l1_distance: grids differ");
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.finite(k) && b.finite(k)) s += std::abs(a[k] - b[k]);
  return static_cast<double>(s) * a.grid().cell_volume();
}

}  // namespace mcm
