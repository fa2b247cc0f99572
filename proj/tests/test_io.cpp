#include <doctest.h>

#include <cmath>
#include <limits>

#include "mcm/functions.hpp"
#include "mcm/io.hpp"

using namespace mcm;
namespace fn = mcm::functions;

TEST_CASE("fnv1a known vectors") {
  CHECK(io::hex64(io::fnv1a("")) == "cbf29ce484222325");
  CHECK(io::hex64(io::fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(io::hex64(io::fnv1a("foobar")) == "85944171f73967e8");
}

TEST_CASE("format_double round-trips") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-2.5) == "-2.5");
  CHECK(io::format_double(1e-300) == "1e-300");
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  const double x = 1.0 / 3.0;
  CHECK(std::stod(io::format_double(x)) == x);
}

TEST_CASE("csv layout") {
  io::CsvTable t{{"a", "b"}, {}};
  t.add({"1", "2.5"}).add({"x", "y"});
  CHECK(t.str() == "a,b\n1,2.5\nx,y\n");
  CHECK_THROWS_AS(t.add({"only one"}), ContractError);
}

TEST_CASE("shape json round trip") {
  for (const Shape& s : {Shape::interval(-1, 2), Shape::disk({0.5, -1}, 2), Shape::rectangle({0, 0}, {1, 3}),
                         Shape::annulus({0, 0}, 0.5, 1.0)}) {
    const Shape r = io::shape_from_json(io::shape_to_json(s));
    CHECK(io::shape_to_json(r) == io::shape_to_json(s));
  }
  CHECK_THROWS_AS(io::shape_from_json(io::json{{"type", "disk"}, {"radius", -1}}), ContractError);
  CHECK_THROWS_AS(io::shape_from_json(io::json{{"type", "hexagon"}}), ContractError);
}

TEST_CASE("field json round trip") {
  const DomainMask m = make_grid(Shape::disk({0, 0}, 1.0), 8);
  SUBCASE("sampled field with undefined exterior") {
    const ScalarField u = sample_function(fn::expression("x*y + 1/3"), m);
    const io::json j = io::field_to_json(u);
    const ScalarField v = io::field_from_json(io::json::parse(j.dump()));
    CHECK(v.grid().extent == u.grid().extent);
    for (std::size_t k = 0; k < u.size(); ++k) {
      CHECK(v.defined(k) == u.defined(k));
      if (u.defined(k)) CHECK(v[k] == u[k]);
    }
    CHECK(j.at("values").at(0).is_null());
  }
  SUBCASE("extended field keeps -inf") {
    const ScalarField u = sample_function(fn::log_pole(), m);
    REQUIRE(u.extended());
    const ScalarField v = io::field_from_json(io::field_to_json(u));
    std::size_t poles = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      CHECK(v.is_neg_inf(k) == u.is_neg_inf(k));
      poles += u.is_neg_inf(k) ? 1 : 0;
    }
    CHECK(poles >= 1);
  }
  SUBCASE("malformed") {
    io::json j = io::field_to_json(sample_function(fn::constant(1.0), m));
    j["values"].erase(0);
    CHECK_THROWS_AS(io::field_from_json(j), ContractError);
    j = io::field_to_json(sample_function(fn::constant(1.0), m));
    j["values"][10] = "-inf";
    CHECK_THROWS_AS(io::field_from_json(j), ContractError);
  }
}

TEST_CASE("field lookup") {
  const DomainMask m = make_grid(Shape::rectangle({0, 0}, {1, 1}), 16);
  const ScalarField u = sample_function(fn::affine(1.0, 2.0, -1.0), m);
  const FieldFunction f = io::field_lookup(u, "u");
  const Point x = m.grid.center(5, 7);
  CHECK(f(x) == u[m.grid.index(5, 7)]);
  CHECK(std::isnan(f({5.0, 5.0})));
}
