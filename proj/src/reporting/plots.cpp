#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "sqleval/errors.hpp"
#include "sqleval/pipeline/pipeline.hpp"
#include "sqleval/reporting/reporting.hpp"
#include "sqleval/util/files.hpp"

namespace sqleval::reporting {

using metrics::Metric;
using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::model_comparison: return "model_comparison";
    case PlotKind::workload_versions: return "workload_versions";
    case PlotKind::scaling: return "scaling";
  }
  return "?";
}

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "model_comparison") return PlotKind::model_comparison;
  if (s == "workload_versions") return PlotKind::workload_versions;
  if (s == "scaling") return PlotKind::scaling;
  throw NotFound("unknown plot kind '" + s + "'");
}

json to_json(const PlotSpec& p) {
  json series = json::array();
  for (const auto& s : p.series) {
    json ys = json::array();
    for (const auto& y : s.y) ys.push_back(y ? json(*y) : json());
    series.push_back({{"label", s.label}, {"y", ys}});
  }
  return {{"kind", to_string(p.kind)}, {"metric", metrics::to_string(p.metric)},
          {"title", p.title},          {"x_label", p.x_label},
          {"y_label", p.y_label},      {"x_scale", p.x_scale},
          {"x", p.x},                  {"x_ticks", p.x_ticks},
          {"series", series},          {"y_max", p.y_max}};
}

PlotSpec plot_spec_from_json(const json& j) {
  PlotSpec p;
  p.kind = plot_kind_from_string(j.at("kind").get<std::string>());
  p.metric = metrics::metric_from_string(j.at("metric").get<std::string>());
  p.title = j.at("title").get<std::string>();
  p.x_label = j.at("x_label").get<std::string>();
  p.y_label = j.at("y_label").get<std::string>();
  p.x_scale = j.at("x_scale").get<std::string>();
  p.x = j.at("x").get<std::vector<double>>();
  p.x_ticks = j.at("x_ticks").get<std::vector<std::string>>();
  for (const auto& s : j.at("series")) {
    Series out;
    out.label = s.at("label").get<std::string>();
    for (const auto& y : s.at("y")) out.y.push_back(y.is_null() ? std::nullopt : std::optional<double>(y.get<double>()));
    p.series.push_back(std::move(out));
  }
  p.y_max = j.at("y_max").get<double>();
  return p;
}

namespace {

const pipeline::MetricScores& scores_of(const pipeline::ModelReport& m, Metric metric) {
  const auto it = m.metrics.find(metric);
  if (it == m.metrics.end())
    throw MissingMetric(std::string("metric ") + metrics::to_string(metric) + " not in report for " + m.model_id);
  return it->second;
}

std::string y_label_for(Metric m) {
  return metrics::is_rate(m) ? std::string(metrics::to_string(m)) + " score" : "mean tokens per query";
}

// Rates sit in [0, 1]; token counts get a rounded-up maximum.
double y_max_for(Metric m, const std::vector<Series>& series) {
  if (metrics::is_rate(m)) return 1.0;
  double top = 0.0;
  for (const auto& s : series)
    for (const auto& y : s.y)
      if (y) top = std::max(top, *y);
  if (top <= 0.0) return 1.0;
  const double step = std::pow(10.0, std::floor(std::log10(top)));
  return std::ceil(top / step) * step;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

}  // namespace

PlotSpec plot_model_comparison(const std::vector<pipeline::RunReport>& reports, Metric metric) {
  if (reports.empty()) throw ValidationError("model comparison needs at least one report", {});
  PlotSpec p;
  p.kind = PlotKind::model_comparison;
  p.metric = metric;
  p.x_scale = "category";
  p.x_label = "subcategory";
  p.y_label = y_label_for(metric);
  p.title = std::string(metrics::to_string(metric)) + " by subcategory";

  std::set<sql::TaxonomyLabel> groups;
  for (const auto& r : reports)
    for (const auto& m : r.models)
      for (const auto& [label, s] : scores_of(m, metric).subcategories)
        if (s.support > 0) groups.insert(label);
  p.x_ticks.push_back("overall");
  for (const auto& l : groups) p.x_ticks.push_back(l.subcategory_code());

  for (const auto& r : reports)
    for (const auto& m : r.models) {
      const auto& ms = scores_of(m, metric);
      Series s;
      s.label = reports.size() > 1 ? m.model_id + " (" + r.run_id + ")" : m.model_id;
      s.y.push_back(ms.overall.support ? std::optional<double>(ms.overall.score) : std::nullopt);
      for (const auto& l : groups) {
        const auto it = ms.subcategories.find(l);
        s.y.push_back(it != ms.subcategories.end() && it->second.support ? std::optional<double>(it->second.score)
                                                                        : std::nullopt);
      }
      p.series.push_back(std::move(s));
    }
  p.y_max = y_max_for(metric, p.series);
  return p;
}

PlotSpec plot_workload_versions(const std::map<int, pipeline::RunReport>& by_version, Metric metric) {
  if (by_version.empty()) throw ValidationError("versions plot needs at least one report", {});
  PlotSpec p;
  p.kind = PlotKind::workload_versions;
  p.metric = metric;
  p.x_scale = "linear";
  p.x_label = "workload version";
  p.y_label = y_label_for(metric);
  p.title = std::string(metrics::to_string(metric)) + " across versions of " + by_version.begin()->second.workload_id;
  const int first = by_version.begin()->first;
  const int last = by_version.rbegin()->first;
  for (int v = first; v <= last; ++v) {
    p.x.push_back(v);
    p.x_ticks.push_back("v" + std::to_string(v));
  }
  bool any = false;
  for (const auto& [v, r] : by_version)
    for (const auto& m : r.models) any = any || m.metrics.count(metric);
  if (!any) throw MissingMetric(std::string("no report has metric ") + metrics::to_string(metric));
  std::vector<std::string> models;
  for (const auto& [v, r] : by_version)
    for (const auto& m : r.models)
      if (std::find(models.begin(), models.end(), m.model_id) == models.end()) models.push_back(m.model_id);
  for (const auto& id : models) {
    Series s;
    s.label = id;
    for (int v = first; v <= last; ++v) {
      const auto it = by_version.find(v);
      const auto* m = it == by_version.end() ? nullptr : it->second.model(id);
      if (!m || !m->metrics.count(metric)) {
        s.y.push_back(std::nullopt);
        continue;
      }
      const auto& ms = m->metrics.at(metric);
      s.y.push_back(ms.overall.support ? std::optional<double>(ms.overall.score) : std::nullopt);
    }
    p.series.push_back(std::move(s));
  }
  p.y_max = y_max_for(metric, p.series);
  return p;
}

PlotSpec plot_scaling(const pipeline::RunReport& r, Metric metric) {
  PlotSpec p;
  p.kind = PlotKind::scaling;
  p.metric = metric;
  p.x_label = "scale factor";
  p.y_label = y_label_for(metric);
  p.title = std::string(metrics::to_string(metric)) + " by database scale factor";
  for (const int f : r.scale_factors) {
    p.x.push_back(f);
    p.x_ticks.push_back("x" + std::to_string(f));
  }
  const bool log_axis = r.scale_factors.size() > 1 &&
                        static_cast<double>(r.scale_factors.back()) / static_cast<double>(r.scale_factors.front()) >= 100.0;
  p.x_scale = log_axis ? "log" : "linear";
  for (const auto& m : r.models) {
    const auto& ms = scores_of(m, metric);
    Series s;
    s.label = m.model_id;
    for (const int f : r.scale_factors) {
      const auto it = std::find_if(ms.scaling.begin(), ms.scaling.end(), [&](const auto& e) { return e.first == f; });
      s.y.push_back(it != ms.scaling.end() && it->second.support ? std::optional<double>(it->second.score)
                                                                 : std::nullopt);
    }
    p.series.push_back(std::move(s));
  }
  p.y_max = y_max_for(metric, p.series);
  return p;
}

std::string render_svg(const PlotSpec& p) {
  constexpr double W = 760, H = 420, L = 64, R = 170, T = 44, B = 72;
  const double pw = W - L - R, ph = H - T - B;
  const std::size_t n = p.x_ticks.size();
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"420\" viewBox=\"0 0 760 420\" "
       "font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"760\" height=\"420\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"" + fmt(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + escape(p.title) + "</text>\n";

  const auto ypos = [&](double v) { return T + ph - (p.y_max > 0 ? v / p.y_max : 0.0) * ph; };
  for (int i = 0; i <= 5; ++i) {
    const double v = p.y_max * i / 5.0;
    const double y = ypos(v);
    s += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(L + pw) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"#e0e0e0\"/>\n";
    s += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + tick_text(v) + "</text>\n";
  }
  s += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(T + ph) + "\" x2=\"" + fmt(L + pw) + "\" y2=\"" + fmt(T + ph) +
       "\" stroke=\"#333333\"/>\n";
  s += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(T) + "\" x2=\"" + fmt(L) + "\" y2=\"" + fmt(T + ph) +
       "\" stroke=\"#333333\"/>\n";

  // x positions of the ticks
  std::vector<double> xs(n);
  if (p.x_scale == "category" || p.x.size() != n) {
    for (std::size_t i = 0; i < n; ++i) xs[i] = L + pw * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  } else {
    const auto tr = [&](double v) { return p.x_scale == "log" ? std::log10(v) : v; };
    const double lo = tr(p.x.front()), hi = tr(p.x.back());
    for (std::size_t i = 0; i < n; ++i)
      xs[i] = hi > lo ? L + 20 + (pw - 40) * (tr(p.x[i]) - lo) / (hi - lo) : L + pw / 2;
  }
  for (std::size_t i = 0; i < n; ++i) {
    s += "<line x1=\"" + fmt(xs[i]) + "\" y1=\"" + fmt(T + ph) + "\" x2=\"" + fmt(xs[i]) + "\" y2=\"" +
         fmt(T + ph + 4) + "\" stroke=\"#333333\"/>\n";
    s += "<text x=\"" + fmt(xs[i]) + "\" y=\"" + fmt(T + ph + 16) + "\" text-anchor=\"middle\">" +
         escape(p.x_ticks[i]) + "</text>\n";
  }
  s += "<text x=\"" + fmt(L + pw / 2) + "\" y=\"" + fmt(H - 24) + "\" text-anchor=\"middle\">" + escape(p.x_label) +
       "</text>\n";
  s += "<text x=\"16\" y=\"" + fmt(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fmt(T + ph / 2) + ")\">" + escape(p.y_label) + "</text>\n";

  const std::size_t k = p.series.size();
  for (std::size_t si = 0; si < k; ++si) {
    const auto& series = p.series[si];
    const std::string color = kPalette[si % std::size(kPalette)];
    if (p.kind == PlotKind::model_comparison) {
      const double group = pw / static_cast<double>(std::max<std::size_t>(n, 1));
      const double bw = group * 0.8 / static_cast<double>(k);
      for (std::size_t i = 0; i < n && i < series.y.size(); ++i) {
        if (!series.y[i]) continue;
        const double x = L + group * static_cast<double>(i) + group * 0.1 + bw * static_cast<double>(si);
        const double y = ypos(*series.y[i]);
        s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(bw) + "\" height=\"" +
             fmt(T + ph - y) + "\" fill=\"" + color + "\"><title>" + escape(series.label) + " " +
             escape(p.x_ticks[i]) + ": " + fmt(*series.y[i]) + "</title></rect>\n";
      }
    } else {
      std::string path;
      bool pen = false;
      for (std::size_t i = 0; i < n && i < series.y.size(); ++i) {
        if (!series.y[i]) {
          pen = false;
          continue;
        }
        path += (pen ? " L" : (path.empty() ? "M" : " M")) + fmt(xs[i]) + " " + fmt(ypos(*series.y[i]));
        pen = true;
      }
      if (!path.empty())
        s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
      for (std::size_t i = 0; i < n && i < series.y.size(); ++i)
        if (series.y[i])
          s += "<circle cx=\"" + fmt(xs[i]) + "\" cy=\"" + fmt(ypos(*series.y[i])) + "\" r=\"3.5\" fill=\"" + color +
               "\"><title>" + escape(series.label) + " " + escape(p.x_ticks[i]) + ": " + fmt(*series.y[i]) +
               "</title></circle>\n";
    }
    const double ly = T + 14 + 18 * static_cast<double>(si);
    s += "<rect x=\"" + fmt(L + pw + 16) + "\" y=\"" + fmt(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" + color +
         "\"/>\n";
    s += "<text x=\"" + fmt(L + pw + 32) + "\" y=\"" + fmt(ly) + "\">" + escape(series.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::map<int, pipeline::RunReport> reports_by_version(const fs::path& runs_dir, const std::string& workload_id) {
  std::map<int, pipeline::RunReport> out;
  for (const auto& id : pipeline::list_runs(runs_dir)) {
    auto r = pipeline::report_from_json(json::parse(util::read_file(runs_dir / id / "report.json")));
    if (r.workload_id != workload_id) continue;
    out[r.workload_version] = std::move(r);  // runs are listed in id order; later ids win
  }
  return out;
}

void write_plots(const fs::path& dir, const pipeline::RunReport& r, const std::map<int, pipeline::RunReport>& versions) {
  const auto plots = dir / "plots";
  const auto write = [&](const PlotSpec& p) {
    const std::string stem = std::string(to_string(p.kind)) + "_" + metrics::to_string(p.metric);
    util::atomic_write(plots / (stem + ".json"), to_json(p).dump(2) + "\n");
    util::atomic_write(plots / (stem + ".svg"), render_svg(p));
  };
  for (const auto metric : r.metric_order) {
    write(plot_model_comparison({r}, metric));
    write(plot_scaling(r, metric));
    if (!versions.empty()) write(plot_workload_versions(versions, metric));
  }
}

PlotSpec plot_for_run(const fs::path& runs_dir, const std::string& run_id, PlotKind kind, Metric metric) {
  const auto stored = pipeline::load_run(runs_dir, run_id);
  switch (kind) {
    case PlotKind::model_comparison: return plot_model_comparison({stored.report}, metric);
    case PlotKind::scaling: return plot_scaling(stored.report, metric);
    case PlotKind::workload_versions: {
      auto versions = reports_by_version(runs_dir, stored.report.workload_id);
      versions[stored.report.workload_version] = stored.report;
      return plot_workload_versions(versions, metric);
    }
  }
  throw NotFound("unknown plot kind");
}

}  // namespace sqleval::reporting
