#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace sqleval::data {

struct Blob {
  std::vector<std::uint8_t> bytes;
  auto operator<=>(const Blob&) const = default;
};

// null | integer | real | text | blob
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

using Row = std::vector<Cell>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  bool ordered = false;    // producing query had a top-level ORDER BY
  bool truncated = false;  // row cap was hit

  bool operator==(const ResultTable&) const = default;
};

struct TimingStats {
  std::vector<double> samples;  // milliseconds
  double median_ms = 0.0;
  bool timeout = false;
};

double median(std::vector<double> samples);

bool is_null(const Cell& c);
bool is_numeric(const Cell& c);
double as_double(const Cell& c);  // integer or real
std::string cell_text(const Cell& c);  // for display and logs

nlohmann::json cell_to_json(const Cell& c);
Cell cell_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResultTable& t);
ResultTable result_from_json(const nlohmann::json& j);

}  // namespace sqleval::data
