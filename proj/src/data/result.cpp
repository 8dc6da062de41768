#include "sqleval/data/result.hpp"

#include <algorithm>
#include <cstdio>

namespace sqleval::data {

double median(std::vector<double> samples) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2.0;
}

bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

bool is_numeric(const Cell& c) {
  return std::holds_alternative<std::int64_t>(c) || std::holds_alternative<double>(c);
}

double as_double(const Cell& c) {
  if (auto i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (auto d = std::get_if<double>(&c)) return *d;
  return 0.0;
}

std::string cell_text(const Cell& c) {
  switch (c.index()) {
    case 0: return "NULL";
    case 1: return std::to_string(std::get<std::int64_t>(c));
    case 2: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(c));
      return buf;
    }
    case 3: return std::get<std::string>(c);
    default: return "<blob " + std::to_string(std::get<Blob>(c).bytes.size()) + " bytes>";
  }
}

nlohmann::json cell_to_json(const Cell& c) {
  switch (c.index()) {
    case 0: return nullptr;
    case 1: return std::get<std::int64_t>(c);
    case 2: return std::get<double>(c);
    case 3: return std::get<std::string>(c);
    default: return {{"blob", std::get<Blob>(c).bytes}};
  }
}

Cell cell_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  return Blob{j.at("blob").get<std::vector<std::uint8_t>>()};
}

nlohmann::json to_json(const ResultTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : r) row.push_back(cell_to_json(c));
    rows.push_back(std::move(row));
  }
  return {{"columns", t.columns}, {"rows", rows}, {"ordered", t.ordered}, {"truncated", t.truncated}};
}

ResultTable result_from_json(const nlohmann::json& j) {
  ResultTable t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    Row row;
    for (const auto& c : r) row.push_back(cell_from_json(c));
    t.rows.push_back(std::move(row));
  }
  t.ordered = j.value("ordered", false);
  t.truncated = j.value("truncated", false);
  return t;
}

}  // namespace sqleval::data
