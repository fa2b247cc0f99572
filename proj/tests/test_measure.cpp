#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcm/functions.hpp"
#include "mcm/measure.hpp"
#include "mcm/mollify.hpp"

using namespace mcm;
namespace fn = mcm::functions;
using std::numbers::pi;

TEST_CASE("aitken on a geometric tail is exact") {
  const Extrapolation e = aitken_last_three({3.0, 1.0 + 0.5, 1.0 + 0.25, 1.0 + 0.125});
  CHECK(e.accelerated);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.band == doctest::Approx(0.375));
  // Oscillation that does not contract falls back to the last term.
  const Extrapolation f = aitken_last_three({0.0, 1.0, 0.0});
  CHECK_FALSE(f.accelerated);
  CHECK(f.value == 0.0);
}

TEST_CASE("ball families") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const double h = m.grid.h;
  CHECK_THROWS_AS(make_ball_family(m, {{{0, 0}, 4 * h}}, 4 * h), ContractError);
  CHECK_THROWS_AS(make_ball_family(m, {{{0.5, 0}, 0.45}}, 4 * h), ContractError);
  const BallFamily a = random_ball_family(m, 6, 0.15, 0.3, 4 * h, 42);
  const BallFamily b = random_ball_family(m, 6, 0.15, 0.3, 4 * h, 42);
  REQUIRE(a.balls.size() == 6);
  for (std::size_t i = 0; i < a.balls.size(); ++i) {
    CHECK(a.balls[i].center == b.balls[i].center);
    CHECK(a.balls[i].radius == b.balls[i].radius);
    CHECK(a.balls[i].radius >= 8 * h);
    CHECK(std::hypot(a.balls[i].center[0], a.balls[i].center[1]) + a.balls[i].radius + a.gap < 1.0);
  }
}

TEST_CASE("smooth tables") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const std::vector<TestBall> balls{{{0, 0}, 0.3}, {{0, 0}, 0.6}, {{0.2, -0.1}, 0.25}};
  SUBCASE("affine is all zero") {
    const BallMeasureTable t = ball_measure_table(sample_function(fn::affine(1.0, 0.3, -0.2), m), balls);
    for (const auto& r : t.rows) CHECK(std::abs(r.mu) <= 1e-12);
  }
  SUBCASE("convex field: additivity, positivity, monotonicity, total") {
    const BallMeasureTable t = ball_measure_table(sample_function(fn::paraboloid(2.0), m), balls);
    CHECK(t.method == MeasureMethod::DensityIntegral);
    for (const auto& r : t.rows) {
      CHECK(r.flux_gap <= 1e-12);
      CHECK(r.mu >= -1e-12);
    }
    CHECK(t.rows[0].mu <= t.rows[1].mu);
    CHECK(t.total <= 2.0 * pi + t.eps_neg);
  }
}

TEST_CASE("cone measure from a mollified sequence") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const ScalarField u = sample_function(fn::cone(), m);
  std::vector<ScalarField> seq;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) seq.push_back(mollify_field(u, eps));
  std::vector<const ScalarField*> ptr;
  for (const auto& f : seq) ptr.push_back(&f);
  const BallMeasureTable t = ball_measure_table(ptr, {{{0, 0}, 0.25}, {{0, 0}, 0.5}});
  CHECK(t.method == MeasureMethod::SequenceLimit);
  for (const auto& r : t.rows) {
    CHECK(r.terms.size() == 3);
    CHECK(r.mu == doctest::Approx(std::sqrt(2.0) * pi * r.ball.radius).epsilon(0.02));
  }
}

TEST_CASE("1D cone carries an atom at the origin") {
  const DomainMask m = make_grid(Shape::interval(-1.0, 1.0), 200);
  const ScalarField u = sample_function(fn::cone(), m);
  const InterfaceMass a = interface_singular_mass(u, Interface::points(0.0, 0.0), 2 * m.grid.h);
  REQUIRE(a.mass.has_value());
  CHECK(*a.mass == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
  const BallMeasureTable t = ball_measure_table(u, {{{0.5, 0}, 0.3}, {{-0.55, 0}, 0.2}});
  for (const auto& r : t.rows) CHECK(std::abs(r.mu) <= 1e-12);
}

TEST_CASE("smooth field has no interface mass") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 2.0), 64);
  const ScalarField u = sample_function(fn::paraboloid(0.5), m);
  const InterfaceMass a = interface_singular_mass(u, Interface::circle({0, 0}, 1.0), 2 * m.grid.h);
  REQUIRE(a.mass.has_value());
  CHECK(std::abs(*a.mass) <= std::max(a.band, 1e-3));
}

TEST_CASE("weak convergence check") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 64);
  const ScalarField u = sample_function(fn::cone(), m);
  std::vector<ScalarField> seq;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) seq.push_back(mollify_field(u, eps));
  std::vector<const ScalarField*> ptr;
  for (const auto& f : seq) ptr.push_back(&f);
  const BallFamily fam = make_ball_family(m, {{{0, 0}, 0.3}, {{0.1, 0.1}, 0.2}}, 4 * m.grid.h);
  SUBCASE("identical sequences pass") {
    const WeakConvergenceReport r = weak_convergence_check(ptr, ptr, fam, 0.03, 1e-3);
    CHECK_FALSE(r.refused);
    CHECK(r.pass);
    CHECK(r.pairs.size() == 4);
  }
  SUBCASE("sequences of different limits are refused") {
    const ScalarField other = sample_function(fn::paraboloid(1.0), m);
    const WeakConvergenceReport r = weak_convergence_check(ptr, {&other}, fam, 0.03, 1e-3);
    CHECK(r.refused);
    CHECK_FALSE(r.reason.empty());
  }
}
