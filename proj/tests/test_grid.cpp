#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mcm/expr.hpp"
#include "mcm/functions.hpp"
#include "mcm/geometry.hpp"
#include "mcm/mollify.hpp"

using namespace mcm;
namespace fn = mcm::functions;
using std::numbers::pi;

TEST_CASE("unit disk interior count tracks the area") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const double h = m.grid.h;
  const double expected = pi / (h * h);
  CHECK(std::abs(static_cast<double>(m.count(CellKind::Interior)) - expected) <= 0.02 * expected);
  check_mask_invariants(m);
}

TEST_CASE("interval layout") {
  const DomainMask m = make_grid(Shape::interval(-1.0, 1.0), 100);
  CHECK(m.grid.dim == 1);
  CHECK(m.grid.extent[0] == 201);
  CHECK(m.count(CellKind::Boundary) == 2);
  CHECK(m.count(CellKind::Interior) == 199);
  CHECK(m.grid.center(100)[0] == doctest::Approx(0.0));
}

TEST_CASE("rectangle mask perimeter") {
  const DomainMask m = make_grid(Shape::rectangle({0, 0}, {1, 1}), 32);
  const SetGeometry g = set_geometry(domain_set(m));
  CHECK(std::abs(g.perimeter - 4.0) <= 2.0 * m.grid.h);
  CHECK(g.volume == doctest::Approx(1.0));
}

TEST_CASE("degenerate shapes are rejected") {
  CHECK_THROWS_AS(make_grid(Shape::disk({0, 0}, 0.2), 10), SizingError);
  CHECK_THROWS_AS(make_grid(Shape::disk({0, 0}, 1.0), 4), ContractError);
}

TEST_CASE("cell centres are exact") {
  const DomainMask m = make_grid(Shape::disk({0.25, -0.5}, 1.0), 16);
  const Grid& g = m.grid;
  for (int i = 0; i < g.extent[0]; ++i) CHECK(g.center(i, 0)[0] == g.origin[0] + i * g.h);
}

TEST_CASE("sampling") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 32);
  SUBCASE("zero") {
    const ScalarField u = sample_function(fn::constant(0.0), m);
    CHECK(u.min_finite() == 0.0);
    CHECK(u.max_finite() == 0.0);
    CHECK(u.provenance() == Provenance::Sampled);
  }
  SUBCASE("cone is exact at centres") {
    const ScalarField u = sample_function(fn::cone(), m);
    for (std::size_t k = 0; k < u.size(); ++k)
      if (u.finite(k)) CHECK(u[k] == std::hypot(m.grid.center(k)[0], m.grid.center(k)[1]));
  }
  SUBCASE("jump profile") {
    const DomainMask m2 = make_grid(Shape::disk({0, 0}, 2.0), 32);
    const ScalarField u = sample_function(fn::jump_profile(2, 2, 0.25, 0.25, 0.5), m2);
    double inner_max = -1e9, outer_min = 1e9;
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (!u.finite(k)) continue;
      const double r = std::hypot(m2.grid.center(k)[0], m2.grid.center(k)[1]);
      if (r < 1.0) inner_max = std::max(inner_max, u[k]);
      else outer_min = std::min(outer_min, u[k]);
    }
    CHECK(inner_max <= -0.5);
    CHECK(outer_min >= 0.0);
  }
  SUBCASE("NaN names the cell") {
    CHECK_THROWS_WITH_AS(sample_function(fn::hemisphere(0.5), m), doctest::Contains("cell"), ContractError);
  }
  SUBCASE("log pole is extended") {
    const ScalarField u = sample_function(fn::log_pole(), m);
    CHECK(u.extended());
    CHECK(u.neg_inf_count() == 1);
    CHECK(u.neg_inf_fraction() > 0.0);
    CHECK_THROWS_AS(u.value(m.grid.index(m.grid.extent[0] / 2, m.grid.extent[1] / 2)), ContractError);
  }
}

TEST_CASE("expressions") {
  const Expression e = Expression::parse("2*x^2 - sqrt(r) + max(y, 1) + pi");
  CHECK(e({1.0, 0.0}) == doctest::Approx(2.0 - 1.0 + 1.0 + pi));
  CHECK_THROWS_AS(Expression::parse("x +"), ContractError);
  CHECK_THROWS_AS(Expression::parse("foo(x)"), ContractError);
}

TEST_CASE("mollifier kernel") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const Kernel k = make_kernel(m.grid, 0.1);
  long double s = 0.0L;
  for (double w : k.weights) s += w;
  CHECK(std::abs(static_cast<double>(s) - 1.0) <= 1e-15);
  CHECK_THROWS_AS(make_kernel(m.grid, 1.5 * m.grid.h), ContractError);
}

TEST_CASE("mollify constants and sandwich") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const ScalarField c = sample_function(fn::constant(3.5), m);
  const ScalarField mc = mollify_field(c, 0.1);
  CHECK(mc.provenance() == Provenance::Mollified);
  std::size_t n = 0;
  for (std::size_t k = 0; k < mc.size(); ++k)
    if (mc.finite(k)) {
      ++n;
      CHECK(std::abs(mc[k] - 3.5) <= 1e-14);
    }
  CHECK(n > 0);
  CHECK(n < c.defined_count());  // region shrinks by ε

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ScalarField r(m.grid);
  for (std::size_t k = 0; k < r.size(); ++k)
    if (m.inside(k)) r.set(k, U(rng));
  const ScalarField mr = mollify_field(r, 0.05);
  for (std::size_t k = 0; k < mr.size(); ++k)
    if (mr.finite(k)) {
      CHECK(mr[k] >= r.min_finite() - 1e-14);
      CHECK(mr[k] <= r.max_finite() + 1e-14);
    }
}

TEST_CASE("mollified cone") {
  // Radial |x| in 1D: the kernel is symmetric, so the convolution is exact
  // wherever the support does not reach the kink.
  const DomainMask m = make_grid(Shape::interval(-1.0, 1.0), 200);
  const ScalarField u = sample_function(fn::cone(), m);
  const double eps = 0.1;
  const ScalarField mu = mollify_field(u, eps);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (!mu.finite(k)) continue;
    const double x = std::abs(m.grid.center(k)[0]);
    CHECK(mu[k] >= u[k] - eps);
    if (x > 2.0 * eps) CHECK(std::abs(mu[k] - x) <= 1e-12);
  }
  // In 2D the sandwich still holds.
  const DomainMask m2 = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const ScalarField u2 = sample_function(fn::cone(), m2);
  const ScalarField mu2 = mollify_field(u2, eps);
  for (std::size_t k = 0; k < mu2.size(); ++k)
    if (mu2.finite(k)) CHECK(mu2[k] >= u2[k] - eps);
}

TEST_CASE("mollify serial and parallel agree bitwise") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 48);
  ScalarField u = sample_function(fn::log_pole({0.1, 0.0}), m);
  const ScalarField a = mollify_field(u, 0.1);
  const ScalarField b = mollify_field_serial(u, 0.1);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.defined(k) == b.defined(k));
    if (a.finite(k)) CHECK(a[k] == b[k]);
  }
  // No −∞ survives mollification.
  CHECK(a.neg_inf_count() == 0);
}

TEST_CASE("superlevel sets") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 128);
  const ScalarField u = sample_function(fn::expression("1 - r"), m);
  const ClipBall b{{0, 0}, 1.0};
  SUBCASE("disk of radius one half") {
    const DiscreteSet s = superlevel_set(u, 0.5, b);
    CHECK(s.volume == doctest::Approx(pi / 4).epsilon(0.02));
    CHECK(s.volume == static_cast<double>(s.cells) * m.grid.h * m.grid.h);
    const SetGeometry g = set_geometry(s);
    CHECK(g.perimeter == doctest::Approx(pi).epsilon(0.02));
    CHECK(g.gamma_int == 0.0);
  }
  SUBCASE("empty above the max") {
    const DiscreteSet s = superlevel_set(u, 2.0, b);
    CHECK(s.cells == 0);
    CHECK(s.volume == 0.0);
  }
  SUBCASE("full clipped ball") {
    const ScalarField z = sample_function(fn::constant(0.0), m);
    const ClipBall half{{0, 0}, 0.5};
    const DiscreteSet s = superlevel_set(z, -1.0, half);
    const SetGeometry g = set_geometry(s);
    CHECK(g.gamma_bdy == 0.0);
    CHECK(g.gamma_int == doctest::Approx(pi).epsilon(0.02));
  }
  SUBCASE("nesting in r and t") {
    const DiscreteSet big = superlevel_set(u, 0.2, b);
    const DiscreteSet small = superlevel_set(u, 0.3, ClipBall{{0, 0}, 0.6});
    for (std::size_t k = 0; k < u.size(); ++k)
      if (small.contains(k)) CHECK(big.contains(k));
  }
  SUBCASE("isoperimetric floor") {
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const DiscreteSet s = superlevel_set(u, t, b);
      const SetGeometry g = set_geometry(s);
      CHECK(g.perimeter >= isoperimetric_constant(2) * std::sqrt(g.volume) * (1.0 - 0.02));
    }
  }
}

TEST_CASE("circle perimeter converges at first order") {
  double prev = 0.0;
  for (int res : {32, 64, 128}) {
    const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), res);
    const ScalarField u = sample_function(fn::expression("0.5 - r"), m);
    const SetGeometry g = set_geometry(superlevel_set(u, 0.0));
    const double err = std::abs(g.perimeter - pi);
    if (res == 128) CHECK(err <= 0.02 * pi);
    if (prev > 0.0 && prev > 1e-12) CHECK(err <= 0.5 * prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("unit square perimeter") {
  const int res = 64;
  const DomainMask m = make_grid(Shape::rectangle({-0.5, -0.5}, {1.5, 1.5}), res);
  const ScalarField u = sample_function(fn::expression("min(min(x, 1 - x), min(y, 1 - y))"), m);
  const SetGeometry g = set_geometry(superlevel_set(u, 0.0));
  CHECK(std::abs(g.perimeter - 4.0) <= 2.0 / res);
}

TEST_CASE("single cell reconstructs a diamond") {
  Grid g;
  g.dim = 2;
  g.h = 0.1;
  g.extent = {5, 5};
  std::vector<std::uint8_t> mem(g.size(), 0);
  mem[g.index(2, 2)] = 1;
  const SetGeometry geo = set_geometry(set_from_indicator(g, mem));
  CHECK(geo.perimeter == doctest::Approx(4.0 * std::sqrt(2.0) * 0.05));
}
