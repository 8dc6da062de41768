#include "sqleval/pipeline/report.hpp"

#include <algorithm>

#include "sqleval/errors.hpp"

namespace sqleval::pipeline {

using metrics::Metric;
using nlohmann::json;
using sql::TaxonomyLabel;

const metrics::MetricOutcome* DataPointRecord::outcome(Metric m) const {
  for (const auto& o : outcomes)
    if (o.metric == m) return &o;
  return nullptr;
}

json to_json(const DataPointRecord& r) {
  auto gen = gateway::to_json(r.generation, false);
  gen.erase("cached");
  json outcomes = json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(metrics::to_json(o));
  json repairs = json::array();
  for (const auto& s : r.repairs) repairs.push_back(repair::to_json(s));
  return {{"dp_id", r.dp_id},
          {"model_id", r.model_id},
          {"iteration", r.iteration},
          {"scale_factor", r.scale_factor},
          {"gt_label", r.gt_label.subcategory_code()},
          {"gen_label", r.gen_label ? json(r.gen_label->subcategory_code()) : json()},
          {"generation", gen},
          {"outcomes", outcomes},
          {"repairs", repairs},
          {"error", r.error ? json(*r.error) : json()}};
}

DataPointRecord record_from_json(const json& j) {
  DataPointRecord r;
  r.dp_id = j.at("dp_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.iteration = j.at("iteration").get<int>();
  r.scale_factor = j.at("scale_factor").get<int>();
  r.gt_label = TaxonomyLabel::parse(j.at("gt_label").get<std::string>());
  if (!j.at("gen_label").is_null()) r.gen_label = TaxonomyLabel::parse(j["gen_label"].get<std::string>());
  r.generation = gateway::generation_from_json(j.at("generation"));
  for (const auto& o : j.at("outcomes")) r.outcomes.push_back(metrics::outcome_from_json(o));
  for (const auto& s : j.at("repairs")) r.repairs.push_back(repair::suggestion_from_json(s));
  if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
  return r;
}

json to_json(const RecordTiming& t) {
  return {{"dp_id", t.dp_id},
          {"model_id", t.model_id},
          {"iteration", t.iteration},
          {"scale_factor", t.scale_factor},
          {"gen_latency_ms", t.gen_latency_ms},
          {"cached", t.cached},
          {"etc", t.etc}};
}

const ModelReport* RunReport::model(const std::string& id) const {
  for (const auto& m : models)
    if (m.model_id == id) return &m;
  return nullptr;
}

namespace {

json to_json(const Score& s) { return {{"score", s.score}, {"support", s.support}}; }

Score score_from_json(const json& j) { return {j.at("score").get<double>(), j.at("support").get<std::size_t>()}; }

json to_json(const MetricScores& m) {
  json cats = json::object();
  for (const auto& [c, s] : m.categories) cats["c" + std::to_string(c)] = to_json(s);
  json subs = json::object();
  for (const auto& [l, s] : m.subcategories) subs[l.subcategory_code()] = to_json(s);
  json iters = json::array();
  for (const auto& [i, s] : m.iterations) {
    auto e = to_json(s);
    e["iteration"] = i;
    iters.push_back(e);
  }
  json scaling = json::array();
  for (const auto& [f, s] : m.scaling) {
    auto e = to_json(s);
    e["factor"] = f;
    scaling.push_back(e);
  }
  return {{"overall", to_json(m.overall)},
          {"categories", cats},
          {"subcategories", subs},
          {"iterations", iters},
          {"scaling", scaling}};
}

MetricScores metric_scores_from_json(const json& j) {
  MetricScores m;
  m.overall = score_from_json(j.at("overall"));
  for (const auto& [k, v] : j.at("categories").items()) m.categories[std::stoi(k.substr(1))] = score_from_json(v);
  for (const auto& [k, v] : j.at("subcategories").items()) m.subcategories[TaxonomyLabel::parse(k)] = score_from_json(v);
  for (const auto& e : j.at("iterations")) m.iterations.emplace_back(e.at("iteration").get<int>(), score_from_json(e));
  for (const auto& e : j.at("scaling")) m.scaling.emplace_back(e.at("factor").get<int>(), score_from_json(e));
  return m;
}

// Successes and support for one group within one iteration.
struct Tally {
  double successes = 0.0;
  std::size_t support = 0;

  void add(const metrics::MetricOutcome& o) {
    if (o.absent()) return;
    ++support;
    if (o.metric == Metric::TU) successes += static_cast<double>(o.count());
    else if (o.passed()) successes += 1.0;
  }
  Score score() const { return {support ? successes / static_cast<double>(support) : 0.0, support}; }
};

// Mean over iterations with support; largest support.
Score combine(const std::map<int, Tally>& per_iteration) {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t support = 0;
  for (const auto& [i, t] : per_iteration) {
    if (t.support == 0) continue;
    sum += t.score().score;
    ++n;
    support = std::max(support, t.support);
  }
  return {n ? sum / static_cast<double>(n) : 0.0, support};
}

}  // namespace

json to_json(const RunReport& r) {
  json models = json::array();
  for (const auto& m : r.models) {
    json ms = json::object();
    for (const auto& [metric, scores] : m.metrics) ms[metrics::to_string(metric)] = to_json(scores);
    models.push_back({{"model_id", m.model_id},
                      {"metrics", ms},
                      {"records", m.records},
                      {"generation_errors", m.generation_errors},
                      {"generation_error_rate", m.generation_error_rate},
                      {"repairs", m.repairs}});
  }
  json metric_names = json::array();
  for (auto m : r.metric_order) metric_names.push_back(metrics::to_string(m));
  return {{"run_id", r.run_id},
          {"config", r.config},
          {"workload", {{"id", r.workload_id}, {"version", r.workload_version}}},
          {"scale_factors", r.scale_factors},
          {"iterations", r.iterations},
          {"metrics", metric_names},
          {"models", models}};
}

RunReport report_from_json(const json& j) {
  try {
    RunReport r;
    r.run_id = j.at("run_id").get<std::string>();
    r.config = j.at("config");
    r.workload_id = j.at("workload").at("id").get<std::string>();
    r.workload_version = j.at("workload").at("version").get<int>();
    r.scale_factors = j.at("scale_factors").get<std::vector<int>>();
    r.iterations = j.at("iterations").get<int>();
    for (const auto& m : j.at("metrics")) r.metric_order.push_back(metrics::metric_from_string(m.get<std::string>()));
    for (const auto& mj : j.at("models")) {
      ModelReport m;
      m.model_id = mj.at("model_id").get<std::string>();
      for (const auto& [k, v] : mj.at("metrics").items())
        m.metrics[metrics::metric_from_string(k)] = metric_scores_from_json(v);
      m.records = mj.at("records").get<std::size_t>();
      m.generation_errors = mj.at("generation_errors").get<std::size_t>();
      m.generation_error_rate = mj.at("generation_error_rate").get<double>();
      m.repairs = mj.at("repairs").get<std::size_t>();
      r.models.push_back(std::move(m));
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what(), {});
  }
}

std::string report_text(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

RunReport aggregate(const RunConfig& cfg, const WorkloadRef& workload, const std::vector<DataPointRecord>& records) {
  RunReport report;
  report.run_id = cfg.run_id;
  report.config = to_json(cfg);
  report.workload_id = workload.id;
  report.workload_version = workload.version;
  report.scale_factors = cfg.scale_factors;
  report.iterations = cfg.iterations;
  report.metric_order = cfg.metrics;
  const int base = cfg.scale_factors.front();

  for (const auto& model : cfg.models) {
    ModelReport mr;
    mr.model_id = model.model_id;
    std::size_t generations = 0;
    for (const auto& r : records) {
      if (r.model_id != model.model_id) continue;
      ++mr.records;
      mr.repairs += r.repairs.size();
      if (r.scale_factor == base) {
        ++generations;
        if (r.generation.failed()) ++mr.generation_errors;
      }
    }
    mr.generation_error_rate =
        generations ? static_cast<double>(mr.generation_errors) / static_cast<double>(generations) : 0.0;

    for (const auto metric : cfg.metrics) {
      std::map<int, Tally> overall;                                    // iteration
      std::map<int, std::map<int, Tally>> categories;                  // category -> iteration
      std::map<TaxonomyLabel, std::map<int, Tally>> subcategories;     // label -> iteration
      std::map<int, std::map<int, Tally>> scaling;                     // factor -> iteration
      for (const auto& r : records) {
        if (r.model_id != model.model_id) continue;
        const auto* o = r.outcome(metric);
        if (!o) continue;
        scaling[r.scale_factor][r.iteration].add(*o);
        if (r.scale_factor != base) continue;
        overall[r.iteration].add(*o);
        categories[r.gt_label.category][r.iteration].add(*o);
        subcategories[r.gt_label][r.iteration].add(*o);
      }
      MetricScores ms;
      ms.overall = combine(overall);
      for (const auto& [c, t] : categories) ms.categories[c] = combine(t);
      for (const auto& [l, t] : subcategories) ms.subcategories[l] = combine(t);
      for (const auto& [i, t] : overall) ms.iterations.emplace_back(i, t.score());
      for (const auto f : cfg.scale_factors)
        if (auto it = scaling.find(f); it != scaling.end()) ms.scaling.emplace_back(f, combine(it->second));
      mr.metrics[metric] = std::move(ms);
    }
    report.models.push_back(std::move(mr));
  }
  return report;
}

void canonicalize(std::vector<DataPointRecord>& records, const RunConfig& cfg,
                  const std::vector<std::string>& dp_order) {
  std::map<std::string, std::size_t> model_rank;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) model_rank[cfg.models[i].model_id] = i;
  std::map<std::string, std::size_t> dp_rank;
  for (std::size_t i = 0; i < dp_order.size(); ++i) dp_rank[dp_order[i]] = i;
  const auto rank = [](const auto& m, const std::string& k) {
    const auto it = m.find(k);
    return it == m.end() ? m.size() : it->second;
  };
  std::stable_sort(records.begin(), records.end(), [&](const DataPointRecord& a, const DataPointRecord& b) {
    return std::make_tuple(rank(model_rank, a.model_id), a.iteration, a.scale_factor, rank(dp_rank, a.dp_id), a.dp_id) <
           std::make_tuple(rank(model_rank, b.model_id), b.iteration, b.scale_factor, rank(dp_rank, b.dp_id), b.dp_id);
  });
}

std::map<TaxonomyLabel, workload::SubcategoryScore> subcategory_scores(const ModelReport& m, Metric metric) {
  const auto it = m.metrics.find(metric);
  if (it == m.metrics.end())
    throw MissingMetric(std::string("metric ") + metrics::to_string(metric) + " was not computed for " + m.model_id);
  std::map<TaxonomyLabel, workload::SubcategoryScore> out;
  for (const auto& [label, s] : it->second.subcategories) out[label] = {s.score, s.support};
  return out;
}

std::set<TaxonomyLabel> weak_subcategories(const RunReport& r, double theta, Metric metric,
                                           const std::optional<std::string>& model, std::size_t min_support) {
  std::set<TaxonomyLabel> out;
  bool found = false;
  for (const auto& m : r.models) {
    if (model && m.model_id != *model) continue;
    found = true;
    const auto weak = workload::select_weak_subcategories(subcategory_scores(m, metric), theta, min_support);
    out.insert(weak.begin(), weak.end());
  }
  if (model && !found) throw NotFound("run has no model '" + *model + "'");
  return out;
}

}  // namespace sqleval::pipeline
