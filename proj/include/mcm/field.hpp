#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mcm/grid.hpp"

namespace mcm {

enum class Provenance { Sampled, Solved, Lifted, Mollified };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Grid function on a masked domain. Cells are either undefined (outside the
/// evaluation region), finite, or the sentinel −∞ (only in extended fields).
/// The sentinel never enters arithmetic: every kernel tests `finite(k)`.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid, Provenance provenance = Provenance::Sampled)
      : grid_(grid), values_(grid.size(), 0.0), defined_(grid.size(), 0), provenance_(provenance) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  bool defined(std::size_t k) const { return defined_[k] != 0; }
  bool is_neg_inf(std::size_t k) const { return defined_[k] != 0 && std::isinf(values_[k]); }
  bool finite(std::size_t k) const { return defined_[k] != 0 && !std::isinf(values_[k]); }

  /// Raw value; meaningful only when finite(k).
  double operator[](std::size_t k) const { return values_[k]; }
  /// Checked access; throws on undefined or −∞ cells.
  double value(std::size_t k) const;

  void set(std::size_t k, double v) {
    values_[k] = v;
    defined_[k] = 1;
  }
  void set_neg_inf(std::size_t k);
  void undefine(std::size_t k) {
    defined_[k] = 0;
    values_[k] = 0.0;
  }

  bool extended() const { return extended_; }
  void set_extended(bool e) { extended_ = e; }
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }

  std::size_t defined_count() const;
  std::size_t neg_inf_count() const;
  double neg_inf_fraction() const;

  /// Min / max over finite cells (NaN when there are none).
  double min_finite() const;
  double max_finite() const;

  const std::vector<double>& raw_values() const { return values_; }

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<std::uint8_t> defined_;
  Provenance provenance_ = Provenance::Sampled;
  bool extended_ = false;
};

/// Closed-form function of position. `neg_inf_allowed` declares that −∞ may be
/// returned on a null set (u: Ω → [−∞, +∞)).
struct FieldFunction {
  std::string name;
  std::function<double(const Point&)> eval;
  bool neg_inf_allowed = false;

  double operator()(const Point& x) const { return eval(x); }
};

/// Exact evaluation at interior and boundary centres; exterior cells stay
/// undefined. A NaN at any centre is an error naming the cell.
ScalarField sample_function(const FieldFunction& f, const DomainMask& mask);

/// Evaluation at every grid centre.
ScalarField sample_everywhere(const FieldFunction& f, const Grid& grid);

/// max over finite cells of |a − b| on cells finite in both.
double sup_distance(const ScalarField& a, const ScalarField& b);
/// ∑ |a − b|·hⁿ over cells finite in both.
double l1_distance(const ScalarField& a, const ScalarField& b);

}  // namespace mcm
