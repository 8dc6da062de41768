#include <doctest.h>

#include <set>
#include <sstream>

#include "sqleval/errors.hpp"
#include "sqleval/pipeline/pipeline.hpp"
#include "sqleval/reporting/reporting.hpp"
#include "sqleval/util/files.hpp"
#include "support/workdir.hpp"

using namespace sqleval;
using namespace sqleval::reporting;
using metrics::Metric;
using nlohmann::json;
using pipeline::RunReport;

namespace {

RunReport synthetic_report(const std::vector<std::string>& models, std::vector<int> factors, int version = 1,
                           std::vector<Metric> metric_set = {Metric::EA}) {
  RunReport r;
  r.run_id = "r" + std::to_string(version);
  r.workload_id = "w";
  r.workload_version = version;
  r.scale_factors = factors;
  r.metric_order = metric_set;
  for (std::size_t i = 0; i < models.size(); ++i) {
    pipeline::ModelReport m;
    m.model_id = models[i];
    for (const auto metric : metric_set) {
      pipeline::MetricScores ms;
      ms.overall = {0.5 + 0.1 * static_cast<double>(i), 10};
      ms.categories[1] = {0.5, 6};
      ms.categories[4] = {0.25, 4};
      ms.subcategories[{1, 3}] = {0.5, 6};
      ms.subcategories[{4, 2}] = {0.25, 4};
      for (const int f : factors) ms.scaling.emplace_back(f, pipeline::Score{0.5, 10});
      ms.iterations.emplace_back(0, ms.overall);
      m.metrics[metric] = ms;
    }
    r.models.push_back(m);
  }
  return r;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("csv export has one row per model, metric and populated group") {
  testing::TempDir dir("csv");
  pipeline::Workspace ws(dir.path(), testing::data_dir());
  const auto w = ws.store().load("demo_hard");
  std::set<int> cats;
  std::set<std::string> subs;
  for (const auto& dp : w.data_points) {
    cats.insert(dp.label.category);
    subs.insert(dp.label.subcategory_code());
  }
  auto cfg = pipeline::config_from_json(
      {{"workload", "demo_hard"},
       {"models", json::array({{{"model_id", "oracle"}, {"kind", "mock_oracle"}},
                               {{"model_id", "swap"}, {"kind", "mock_mutant"}, {"mutation", "column_swap"}}})},
       {"metrics", {"EA", "EM", "CC", "TU"}}});
  const auto r = pipeline::run_evaluation(cfg, ws);
  const auto csv = export_csv(r.report);
  const std::size_t expected = 2 * 4 * (1 + cats.size() + subs.size());
  CHECK(count_lines(csv) - 1 == expected);
  CHECK(expected_csv_rows(r.report) == expected);

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "model,metric,level,group,score,support");
  while (std::getline(in, line)) {
    if (line.rfind("oracle,", 0) != 0 || line.find(",TU,") != std::string::npos) continue;
    INFO(line);
    const auto score = line.substr(0, line.rfind(','));
    CHECK(score.substr(score.rfind(',') + 1) == "1.0");
  }
  CHECK(export_report(r.report, ExportFormat::json) == pipeline::report_text(r.report));
  CHECK(pipeline::report_from_json(json::parse(export_report(r.report, ExportFormat::json))) == r.report);
  CHECK_THROWS_AS(export_format_from_string("xml"), ConfigError);
}

TEST_CASE("model comparison groups bars by subcategory") {
  const auto two = synthetic_report({"a", "b"}, {1});
  const auto p = plot_model_comparison({two}, Metric::EA);
  CHECK(p.x_ticks == std::vector<std::string>{"overall", "1.3", "4.2"});
  REQUIRE(p.series.size() == 2);
  for (const auto& s : p.series) CHECK(s.y.size() == 3);
  const auto svg = render_svg(p);
  CHECK(count(svg, "<rect x=") == 2 * 3 + 2);  // bars plus legend swatches
  CHECK(svg == render_svg(p));
  CHECK(plot_spec_from_json(to_json(p)) == p);

  const auto single = plot_model_comparison({synthetic_report({"a"}, {1})}, Metric::EA);
  CHECK(single.series.size() == 1);
  const auto one_svg = render_svg(single);
  CHECK(one_svg.rfind("<svg", 0) == 0);
  CHECK(one_svg.find("</svg>") != std::string::npos);
  CHECK(count(one_svg, "<rect x=") == 3 + 1);

  CHECK_THROWS_AS(plot_model_comparison({two}, Metric::ETC), MissingMetric);
}

TEST_CASE("workload version plots keep one tick per version and preserve gaps") {
  std::map<int, RunReport> three;
  for (int v : {1, 2, 3}) three[v] = synthetic_report({"a"}, {1}, v);
  const auto p = plot_workload_versions(three, Metric::EA);
  CHECK(p.x_ticks == std::vector<std::string>{"v1", "v2", "v3"});

  std::map<int, RunReport> one = {{1, synthetic_report({"a"}, {1}, 1)}};
  const auto single = plot_workload_versions(one, Metric::EA);
  CHECK(single.x_ticks.size() == 1);
  CHECK(count(render_svg(single), "<circle") == 1);

  std::map<int, RunReport> gap = {{1, synthetic_report({"a"}, {1}, 1)}, {3, synthetic_report({"a"}, {1}, 3)}};
  const auto g = plot_workload_versions(gap, Metric::EA);
  REQUIRE(g.series.at(0).y.size() == 3);
  CHECK_FALSE(g.series[0].y[1].has_value());
  const auto svg = render_svg(g);
  CHECK(count(svg, "<circle") == 2);
  CHECK(svg.find(" L") == std::string::npos);  // no segment across the gap
  CHECK_THROWS_AS(plot_workload_versions(three, Metric::CC), MissingMetric);
}

TEST_CASE("scaling plots switch to a log axis over two decades") {
  const auto wide = plot_scaling(synthetic_report({"a", "b"}, {1, 10, 100}, 1, {Metric::ETC}), Metric::ETC);
  CHECK(wide.x_scale == "log");
  CHECK(wide.series.size() == 2);
  CHECK(wide.series[0].y.size() == 3);
  CHECK(plot_scaling(synthetic_report({"a"}, {1, 10}), Metric::EA).x_scale == "linear");
  const auto point = plot_scaling(synthetic_report({"a"}, {1}), Metric::EA);
  CHECK(point.series[0].y.size() == 1);
  CHECK(count(render_svg(point), "<circle") == 1);
  CHECK_THROWS_AS(plot_scaling(synthetic_report({"a"}, {1}), Metric::TU), MissingMetric);
}

TEST_CASE("plots are written next to a persisted run and reproducible from it") {
  testing::TempDir dir("plots");
  pipeline::Workspace ws(dir.path(), testing::data_dir());
  auto cfg = pipeline::config_from_json(
      {{"workload", "demo_easy"}, {"models", json::array({{{"model_id", "o"}, {"kind", "mock_oracle"}}})},
       {"metrics", {"EA", "TU"}}});
  pipeline::RunLog log;
  const auto r = pipeline::run_evaluation(cfg, ws);
  const auto path = pipeline::persist_run(r, log, ws.runs_dir(), [&](const auto& staging, const auto& report) {
    write_plots(staging, report, {{report.workload_version, report}});
  });
  for (const char* f : {"model_comparison_EA", "scaling_EA", "workload_versions_EA", "model_comparison_TU"}) {
    INFO(f);
    CHECK(std::filesystem::exists(path / "plots" / (std::string(f) + ".svg")));
    CHECK(std::filesystem::exists(path / "plots" / (std::string(f) + ".json")));
  }
  const auto spec = plot_for_run(ws.runs_dir(), r.config.run_id, PlotKind::model_comparison, Metric::EA);
  CHECK(util::read_file(path / "plots" / "model_comparison_EA.json") == to_json(spec).dump(2) + "\n");
  CHECK(util::read_file(path / "plots" / "model_comparison_EA.svg") == render_svg(spec));
  CHECK(reports_by_version(ws.runs_dir(), "demo_easy").size() == 1);
  CHECK_THROWS_AS(plot_kind_from_string("pie"), NotFound);
}
