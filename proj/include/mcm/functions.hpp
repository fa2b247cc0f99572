#pragma once

#include <string>

#include "mcm/field.hpp"

// Closed-form fields used by the experiments and tests.
namespace mcm::functions {

FieldFunction constant(double c);
/// c0 + a1·x1 + a2·x2
FieldFunction affine(double c0, double a1, double a2);
/// slope·|x − center|
FieldFunction cone(Point center = {0.0, 0.0}, double slope = 1.0);
/// k·|x − center|²
FieldFunction paraboloid(double k, Point center = {0.0, 0.0});
/// Lower hemisphere −√(R² − |x − c|²): H₁ = n/R.
FieldFunction hemisphere(double R, Point center = {0.0, 0.0});
/// Scherk's minimal graph log(cos x1 / cos x2), defined for |x1|, |x2| < π/2.
FieldFunction scherk();
/// Radial field with a jump of size c across |x| = 1:
///   a(r−1)^δ for r ≥ 1,  −b(1−r)^σ − c for r < 1.
FieldFunction jump_profile(double a, double b, double delta, double sigma, double c);
/// log|x − c|, equal to −∞ at c (an extended field).
FieldFunction log_pole(Point center = {0.0, 0.0});
/// base + M·((x1 − 1/4)₊ / (3/4))^p: convex in x1, small for x1 < 1/4,
/// steep near x1 = 1.
FieldFunction ridge(double M, double base = 0.1, double power = 4.0);
/// Formula string, see Expression.
FieldFunction expression(const std::string& source);

}  // namespace mcm::functions
