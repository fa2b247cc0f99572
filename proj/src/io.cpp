#include "mcm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mcm::io {

json grid_to_json(const Grid& g) {
  return json{{"dim", g.dim},
              {"h", g.h},
              {"extent", {g.extent[0], g.extent[1]}},
              {"origin", {g.origin[0], g.origin[1]}}};
}

Grid grid_from_json(const json& j) {
  Grid g;
  g.dim = j.at("dim").get<int>();
  g.h = j.at("h").get<double>();
  g.extent = {j.at("extent").at(0).get<int>(), j.at("extent").at(1).get<int>()};
  g.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
  if (g.dim != 1 && g.dim != 2) throw ContractError("grid: dim must be 1 or 2");
  if (!(g.h > 0.0)) throw ContractError("grid: h must be positive");
  if (g.extent[0] < 1 || g.extent[1] < 1 || (g.dim == 1 && g.extent[1] != 1))
    throw ContractError("grid: bad extent");
  return g;
}

json shape_to_json(const Shape& s) {
  switch (s.kind) {
    case ShapeKind::Interval: return json{{"type", "interval"}, {"lo", s.lo[0]}, {"hi", s.hi[0]}};
    case ShapeKind::Disk:
      return json{{"type", "disk"}, {"center", {s.center[0], s.center[1]}}, {"radius", s.radius}};
    case ShapeKind::Rectangle:
      return json{{"type", "rectangle"}, {"lo", {s.lo[0], s.lo[1]}}, {"hi", {s.hi[0], s.hi[1]}}};
    case ShapeKind::Annulus:
      return json{{"type", "annulus"},
                  {"center", {s.center[0], s.center[1]}},
                  {"inner", s.inner_radius},
                  {"outer", s.radius}};
  }
  return {};
}

namespace {

Point point_of(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ContractError("expected a point [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Shape shape_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  Shape s;
  if (type == "interval") {
    s = Shape::interval(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (!(s.lo[0] < s.hi[0])) throw ContractError("interval: lo must be below hi");
  } else if (type == "disk") {
    s = Shape::disk(point_of(j.value("center", json::array({0.0, 0.0}))), j.at("radius").get<double>());
    if (!(s.radius > 0.0)) throw ContractError("disk: radius must be positive");
  } else if (type == "rectangle") {
    s = Shape::rectangle(point_of(j.at("lo")), point_of(j.at("hi")));
    if (!(s.lo[0] < s.hi[0] && s.lo[1] < s.hi[1])) throw ContractError("rectangle: lo must be below hi");
  } else if (type == "annulus") {
    s = Shape::annulus(point_of(j.value("center", json::array({0.0, 0.0}))), j.at("inner").get<double>(),
                       j.at("outer").get<double>());
    if (!(s.inner_radius > 0.0 && s.inner_radius < s.radius)) throw ContractError("annulus: need 0 < inner < outer");
  } else {
    throw ContractError("unknown shape type '" + type + "'");
  }
  return s;
}

json field_to_json(const ScalarField& u) {
  json values = json::array();
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!u.defined(k)) values.push_back(nullptr);
    else if (u.is_neg_inf(k)) values.push_back("-inf");
    else values.push_back(u[k]);
  }
  return json{{"grid", grid_to_json(u.grid())},
              {"provenance", to_string(u.provenance())},
              {"extended", u.extended()},
              {"values", std::move(values)}};
}

ScalarField field_from_json(const json& j) {
  const Grid g = grid_from_json(j.at("grid"));
  ScalarField u(g, provenance_from_string(j.value("provenance", std::string("sampled"))));
  u.set_extended(j.value("extended", false));
  const json& v = j.at("values");
  if (!v.is_array() || v.size() != g.size())
    throw ContractError("field: expected " + std::to_string(g.size()) + " values");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (v[k].is_null()) continue;
    if (v[k].is_string()) {
      if (v[k].get<std::string>() != "-inf") throw ContractError("field: unknown value token at " + std::to_string(k));
      if (!u.extended()) throw ContractError("field: -inf in a field not marked extended");
      u.set_neg_inf(k);
    } else {
      u.set(k, v[k].get<double>());
    }
  }
  return u;
}

FieldFunction field_lookup(const ScalarField& u, std::string name) {
  FieldFunction f;
  f.name = std::move(name);
  f.neg_inf_allowed = u.extended();
  f.eval = [u](const Point& x) {
    const Grid& g = u.grid();
    const double fi = (x[0] - g.origin[0]) / g.h, fj = g.dim == 2 ? (x[1] - g.origin[1]) / g.h : 0.0;
    const int i = static_cast<int>(std::lround(fi)), j = static_cast<int>(std::lround(fj));
    if (!g.contains(i, j)) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t k = g.index(i, j);
    if (!u.defined(k)) return std::numeric_limits<double>::quiet_NaN();
    return u.is_neg_inf(k) ? -std::numeric_limits<double>::infinity() : u[k];
  };
  return f;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvTable& CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header.size())
    throw ContractError("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                        std::to_string(header.size()));
  rows.push_back(std::move(row));
  return *this;
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += r[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void write_text(const std::filesystem::path& p, std::string_view text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& p) { return json::parse(read_text(p)); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace mcm::io
