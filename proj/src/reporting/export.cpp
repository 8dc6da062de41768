#include <set>

#include "sqleval/errors.hpp"
#include "sqleval/reporting/reporting.hpp"

namespace sqleval::reporting {

using nlohmann::json;

ExportFormat export_format_from_string(const std::string& s) {
  if (s == "json") return ExportFormat::json;
  if (s == "csv") return ExportFormat::csv;
  throw ConfigError("unknown export format '" + s + "' (json or csv)");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string row(const std::string& model, metrics::Metric m, const char* level, const std::string& group,
                const pipeline::Score& s) {
  // json's double formatting is the shortest text that round-trips
  return csv_field(model) + "," + metrics::to_string(m) + "," + level + "," + group + "," + json(s.score).dump() + "," +
         std::to_string(s.support) + "\n";
}

}  // namespace

std::string export_csv(const pipeline::RunReport& r) {
  std::string out = "model,metric,level,group,score,support\n";
  for (const auto& model : r.models) {
    for (const auto metric : r.metric_order) {
      const auto it = model.metrics.find(metric);
      if (it == model.metrics.end()) continue;
      const auto& ms = it->second;
      out += row(model.model_id, metric, "overall", "all", ms.overall);
      for (const auto& [c, s] : ms.categories) out += row(model.model_id, metric, "category", "c" + std::to_string(c), s);
      for (const auto& [l, s] : ms.subcategories) out += row(model.model_id, metric, "subcategory", l.subcategory_code(), s);
    }
  }
  return out;
}

std::size_t expected_csv_rows(const pipeline::RunReport& r) {
  std::set<int> categories;
  std::set<sql::TaxonomyLabel> subcategories;
  for (const auto& m : r.models)
    for (const auto& [metric, ms] : m.metrics) {
      for (const auto& [c, s] : ms.categories) categories.insert(c);
      for (const auto& [l, s] : ms.subcategories) subcategories.insert(l);
    }
  return r.models.size() * r.metric_order.size() * (1 + categories.size() + subcategories.size());
}

std::string export_report(const pipeline::RunReport& r, ExportFormat f) {
  return f == ExportFormat::csv ? export_csv(r) : pipeline::report_text(r);
}

}  // namespace sqleval::reporting
