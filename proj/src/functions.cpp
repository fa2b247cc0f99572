#include "mcm/functions.hpp"

#include <cmath>
#include <limits>

#include "mcm/expr.hpp"

namespace mcm::functions {

FieldFunction constant(double c) {
  return {"constant", [c](const Point&) { return c; }};
}

FieldFunction affine(double c0, double a1, double a2) {
  return {"affine", [=](const Point& x) { return c0 + a1 * x[0] + a2 * x[1]; }};
}

FieldFunction cone(Point center, double slope) {
  return {"cone", [=](const Point& x) { return slope * distance(x, center); }};
}

FieldFunction paraboloid(double k, Point center) {
  return {"paraboloid", [=](const Point& x) {
            const double dx = x[0] - center[0], dy = x[1] - center[1];
            return k * (dx * dx + dy * dy);
          }};
}

FieldFunction hemisphere(double R, Point center) {
  return {"hemisphere", [=](const Point& x) {
            const double dx = x[0] - center[0], dy = x[1] - center[1];
            const double s = R * R - dx * dx - dy * dy;
            return s < 0.0 ? std::numeric_limits<double>::quiet_NaN() : -std::sqrt(s);
          }};
}

FieldFunction scherk() {
  return {"scherk", [](const Point& x) {
            const double c1 = std::cos(x[0]), c2 = std::cos(x[1]);
            if (c1 <= 0.0 || c2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
            return std::log(c1 / c2);
          }};
}

FieldFunction jump_profile(double a, double b, double delta, double sigma, double c) {
  return {"jump_profile", [=](const Point& x) {
            const double r = std::hypot(x[0], x[1]);
            if (r >= 1.0) return a * std::pow(r - 1.0, delta);
            return -b * std::pow(1.0 - r, sigma) - c;
          }};
}

FieldFunction log_pole(Point center) {
  FieldFunction f{"log_pole", [=](const Point& x) {
                    const double d = distance(x, center);
                    return d == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(d);
                  }};
  f.neg_inf_allowed = true;
  return f;
}

FieldFunction ridge(double M, double base, double power) {
  return {"ridge", [=](const Point& x) {
            const double s = std::max(0.0, x[0] - 0.25) / 0.75;
            return base + M * std::pow(s, power);
          }};
}

FieldFunction expression(const std::string& source) {
  Expression e = Expression::parse(source);
  return {"expr:" + source, [e](const Point& x) { return e(x); }};
}

}  // namespace mcm::functions
