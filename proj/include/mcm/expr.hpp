#pragma once

#include <memory>
#include <string>

#include "mcm/grid.hpp"

namespace mcm {

/// Arithmetic formula in the variables x, y (aliases x1, x2) and r = |(x, y)|.
/// Supports + − * / ^, parentheses, the constants pi and e, and the functions
/// sqrt exp log sin cos tan abs atan2 pow min max.
class Expression {
 public:
  static Expression parse(const std::string& source);

  double operator()(const Point& x) const;
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace mcm
