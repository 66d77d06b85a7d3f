#pragma once

// Canonical serialization: keys in insertion order, two-space indentation,
// reals printed with 9 significant digits ("%.9g"), non-finite reals as
// null, trailing newline.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ares {

inline constexpr const char* kToolVersion = "ares 1.0.0";

std::string format_real(double v);
std::string canonical_json(const nlohmann::ordered_json& doc);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  // Cells are pre-formatted; use format_real for numbers.
  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_optional(const std::optional<double>& v);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace ares
