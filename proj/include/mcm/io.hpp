#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mcm/field.hpp"

namespace mcm::io {

using json = nlohmann::ordered_json;

json grid_to_json(const Grid& g);
Grid grid_from_json(const json& j);

json shape_to_json(const Shape& s);
Shape shape_from_json(const json& j);

/// {"grid": {...}, "provenance", "extended", "values": [...]} with row-major
/// values; undefined cells are null and −∞ is the string "-inf".
json field_to_json(const ScalarField& u);
ScalarField field_from_json(const json& j);

/// Nearest-cell lookup into a sampled field (exterior and undefined cells
/// evaluate to NaN).
FieldFunction field_lookup(const ScalarField& u, std::string name);

/// Shortest round-trip decimal ('.' separator, locale independent).
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  CsvTable& add(std::vector<std::string> row);
  std::string str() const;  // LF line endings, header first
};

void write_text(const std::filesystem::path& p, std::string_view text);
std::string read_text(const std::filesystem::path& p);
void write_json(const std::filesystem::path& p, const json& j);
json read_json(const std::filesystem::path& p);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace mcm::io
