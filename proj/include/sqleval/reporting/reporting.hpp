#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/metrics/metrics.hpp"
#include "sqleval/pipeline/report.hpp"

namespace sqleval::reporting {

enum class ExportFormat { json, csv };

ExportFormat export_format_from_string(const std::string& s);

// CSV columns: model,metric,level,group,score,support. Levels are overall,
// category and subcategory; only populated groups appear.
std::string export_csv(const pipeline::RunReport& r);
std::string export_report(const pipeline::RunReport& r, ExportFormat f);
std::size_t expected_csv_rows(const pipeline::RunReport& r);

enum class PlotKind { model_comparison, workload_versions, scaling };

const char* to_string(PlotKind k);
PlotKind plot_kind_from_string(const std::string& s);

struct Series {
  std::string label;
  std::vector<std::optional<double>> y;  // one per x position; empty is a gap
  bool operator==(const Series&) const = default;
};

struct PlotSpec {
  PlotKind kind = PlotKind::model_comparison;
  metrics::Metric metric = metrics::Metric::EA;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string x_scale;              // category, linear or log
  std::vector<double> x;            // numeric positions (empty for category)
  std::vector<std::string> x_ticks;  // tick text, one per position
  std::vector<Series> series;
  double y_max = 1.0;

  bool operator==(const PlotSpec&) const = default;
};

nlohmann::json to_json(const PlotSpec& p);
PlotSpec plot_spec_from_json(const nlohmann::json& j);

// Grouped bars: an "overall" group then one per populated subcategory; one
// bar per (report, model). Throws MissingMetric.
PlotSpec plot_model_comparison(const std::vector<pipeline::RunReport>& reports, metrics::Metric metric);

// Overall score per workload version, one line per model. Ticks run over
// every version between the first and last; missing versions are gaps.
PlotSpec plot_workload_versions(const std::map<int, pipeline::RunReport>& by_version, metrics::Metric metric);

// Overall score per scale factor, one line per model; log x-axis when the
// factors span two decades or more.
PlotSpec plot_scaling(const pipeline::RunReport& r, metrics::Metric metric);

std::string render_svg(const PlotSpec& p);

// Latest persisted report per version of a workload.
std::map<int, pipeline::RunReport> reports_by_version(const std::filesystem::path& runs_dir,
                                                      const std::string& workload_id);

// Writes <dir>/plots/<kind>_<metric>.{svg,json} for every metric of the
// report. The versions plot uses `versions` and is skipped when empty.
void write_plots(const std::filesystem::path& dir, const pipeline::RunReport& r,
                 const std::map<int, pipeline::RunReport>& versions = {});

// PlotSpec for one kind and metric of a stored run.
PlotSpec plot_for_run(const std::filesystem::path& runs_dir, const std::string& run_id, PlotKind kind,
                      metrics::Metric metric);

}  // namespace sqleval::reporting
