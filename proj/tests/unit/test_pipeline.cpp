#include <doctest.h>

#include <fstream>
#include <regex>
#include <thread>

#include "sqleval/errors.hpp"
#include "sqleval/pipeline/pipeline.hpp"
#include "sqleval/repair/repair.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/util/files.hpp"
#include "support/workdir.hpp"

using namespace sqleval;
using namespace sqleval::pipeline;
using metrics::Metric;
using nlohmann::json;
using sql::TaxonomyLabel;

namespace {

RunConfig make_config(const std::string& workload, json models, json extra = json::object()) {
  json j = {{"workload", workload}, {"models", std::move(models)}, {"seed", 11}, {"concurrency", 2}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  return config_from_json(j);
}

json oracle() { return json::array({{{"model_id", "oracle"}, {"kind", "mock_oracle"}}}); }

json mutant(const std::string& mutation) {
  return json::array({{{"model_id", "mutant"}, {"kind", "mock_mutant"}, {"mutation", mutation}}});
}

metrics::MetricOutcome outcome(Metric m, bool v) {
  metrics::MetricOutcome o;
  o.metric = m;
  o.value = v;
  return o;
}

DataPointRecord record(const std::string& id, TaxonomyLabel label, bool ea, int iteration = 0, int factor = 1,
                       const std::string& model = "m") {
  DataPointRecord r;
  r.dp_id = id;
  r.model_id = model;
  r.iteration = iteration;
  r.scale_factor = factor;
  r.gt_label = label;
  r.generation.dp_id = id;
  r.generation.model_id = model;
  r.outcomes.push_back(outcome(Metric::EA, ea));
  return r;
}

RunConfig ea_only(std::vector<int> factors = {1}, int iterations = 1) {
  RunConfig cfg;
  cfg.workload_id = "w";
  cfg.models.push_back(gateway::AdapterSettings{});
  cfg.models.back().model_id = "m";
  cfg.metrics = {Metric::EA};
  cfg.scale_factors = std::move(factors);
  cfg.iterations = iterations;
  return cfg;
}

// Fails every call.
class DownAdapter final : public gateway::ModelAdapter {
 public:
  explicit DownAdapter(gateway::AdapterSettings s) : ModelAdapter(std::move(s)) {}
  gateway::Completion complete(const gateway::Prompt&) override { throw GatewayError("503 from provider"); }
};

// Answers with text that is not SQL at all.
class RamblingAdapter final : public gateway::ModelAdapter {
 public:
  explicit RamblingAdapter(gateway::AdapterSettings s) : ModelAdapter(std::move(s)) {}
  gateway::Completion complete(const gateway::Prompt&) override { return {"I am not sure about that one.", 12, 7}; }
};

// ORDER BY outside any parentheses (window specs and subqueries don't count).
bool has_order_by(const std::string& sql) {
  std::string top;
  int depth = 0;
  for (char c : sql) {
    if (c == '(') ++depth;
    if (depth == 0) top += c;
    if (c == ')') --depth;
  }
  return std::regex_search(top, std::regex("order\\s+by", std::regex::icase));
}

}  // namespace

TEST_CASE("run configs load from JSON and YAML alike") {
  testing::TempDir dir("cfg");
  {
    std::ofstream(dir.path() / "a.json") << R"({"workload": "demo_easy", "models": [{"model_id": "o", "kind": "mock_oracle"}],
      "metrics": ["EA", "ETC"], "iterations": 2, "scale_factors": [1, 10], "tau": 0.5, "seed": 3, "llm_id": "x", "temperature": 0.7})";
    std::ofstream(dir.path() / "a.yaml") << "workload: demo_easy\n"
                                            "models:\n"
                                            "  - model_id: o\n"
                                            "    kind: mock_oracle\n"
                                            "metrics: [EA, ETC]\n"
                                            "iterations: 2\n"
                                            "scale_factors: [1, 10]\n"
                                            "tau: 0.5\n"
                                            "seed: 3\n"
                                            "llm_id: \"x\"\n"
                                            "temperature: 0.7\n";
  }
  const auto a = load_config(dir.path() / "a.json");
  const auto b = load_config(dir.path() / "a.yaml");
  CHECK(to_json(a) == to_json(b));
  CHECK(a.models[0].llm_id == "x");
  CHECK(a.models[0].temperature == 0.7);
  CHECK(a.metrics == std::vector<Metric>{Metric::EA, Metric::ETC});
  CHECK(to_json(config_from_json(to_json(a))) == to_json(a));

  const json base = {{"workload", "w"}, {"models", oracle()}};
  auto with = [&](const char* key, json v) {
    auto j = base;
    j[key] = std::move(v);
    return j;
  };
  CHECK_THROWS_AS(config_from_json(with("metrics", json::array())), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("scale_factors", {10, 1})), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("scale_factors", {0})), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("iterations", 0)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("temperature", -1)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("bogus", 1)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("metrics", {"EA", "XX"})), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("models", json::array())), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("iterations", "two")), ConfigError);
  CHECK_THROWS_AS(load_config(dir.path() / "nope.json"), NotFound);
  CHECK(config_from_json(base).metrics == metrics::all_metrics());
}

TEST_CASE("aggregation follows the ratio, mean and weighting rules") {
  std::vector<DataPointRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(record("a" + std::to_string(i), {4, 2}, i < 4));
  for (int i = 0; i < 5; ++i) recs.push_back(record("b" + std::to_string(i), {4, 5}, true));
  for (int i = 0; i < 5; ++i) recs.push_back(record("c" + std::to_string(i), {1, 3}, i < 1));
  const auto r = aggregate(ea_only(), {"w", 1}, recs);
  const auto& ms = r.models.at(0).metrics.at(Metric::EA);
  CHECK(ms.subcategories.at({4, 2}).score == doctest::Approx(0.4));
  CHECK(ms.subcategories.at({4, 2}).support == 10);
  CHECK(ms.categories.at(4).score == doctest::Approx(9.0 / 15.0));
  CHECK(ms.categories.at(1).score == doctest::Approx(0.2));
  // overall = support-weighted mean of the category scores
  const double weighted = (ms.categories.at(4).score * 15 + ms.categories.at(1).score * 5) / 20;
  CHECK(ms.overall.score == doctest::Approx(weighted));
  CHECK(ms.overall.score == doctest::Approx(10.0 / 20.0));
  REQUIRE(ms.iterations.size() == 1);
  CHECK(ms.iterations[0].second.score == ms.overall.score);
  CHECK(ms.categories.count(2) == 0);

  // two iterations average; two factors give two scaling points
  std::vector<DataPointRecord> multi;
  for (int it = 0; it < 2; ++it)
    for (int f : {1, 10})
      for (int i = 0; i < 4; ++i) multi.push_back(record("d" + std::to_string(i), {2, 1}, i < (it == 0 ? 1 : 3), it, f));
  const auto m = aggregate(ea_only({1, 10}, 2), {"w", 1}, multi).models.at(0).metrics.at(Metric::EA);
  CHECK(m.overall.score == doctest::Approx((0.25 + 0.75) / 2));
  CHECK(m.overall.support == 4);
  REQUIRE(m.iterations.size() == 2);
  CHECK(m.iterations[0].second.score == doctest::Approx(0.25));
  CHECK(m.iterations[1].second.score == doctest::Approx(0.75));
  REQUIRE(m.scaling.size() == 2);
  CHECK(m.scaling[0].first == 1);
  CHECK(m.scaling[1].first == 10);

  // absent outcomes drop out of the support
  auto absent = recs;
  absent[0].outcomes[0].value = std::monostate{};
  const auto a = aggregate(ea_only(), {"w", 1}, absent).models.at(0).metrics.at(Metric::EA);
  CHECK(a.subcategories.at({4, 2}).support == 9);
  CHECK(a.subcategories.at({4, 2}).score == doctest::Approx(3.0 / 9.0));
}

TEST_CASE("records and reports round-trip through their JSON forms") {
  auto r = record("x", {3, 4}, false);
  r.gen_label = TaxonomyLabel{2, 2};
  r.generation.sql_text = "SELECT 1";
  r.generation.input_tokens = 10;
  r.error = "boom";
  repair::Transform unordered;
  unordered.kind = repair::TransformKind::ignore_order;
  r.repairs.push_back({"x", "m", {unordered}, "drop ORDER BY"});
  CHECK(record_from_json(to_json(r)) == r);
  const auto rep = aggregate(ea_only(), {"w", 2}, {r, record("y", {1, 1}, true)});
  CHECK(report_from_json(to_json(rep)) == rep);
  CHECK(report_text(report_from_json(json::parse(report_text(rep)))) == report_text(rep));
}

TEST_CASE("log cursors return disjoint contiguous batches") {
  RunLog log;
  for (int i = 0; i < 5; ++i) log.info("e", "event " + std::to_string(i));
  const auto first = log.after(0);
  REQUIRE(first.size() == 5);
  CHECK(log.after(first.back().seq).empty());
  for (int i = 5; i < 8; ++i) log.info("e", "event " + std::to_string(i));
  const auto second = log.after(first.back().seq);
  REQUIRE(second.size() == 3);
  CHECK(second.front().seq == first.back().seq + 1);
  std::string joined;
  for (const auto& batch : {first, second})
    for (const auto& e : batch) joined += to_json(e).dump() + "\n";
  CHECK(joined == log.ndjson());
  CHECK(parse_ndjson_log(log.ndjson()).size() == 8);

  // a waiting reader wakes on the next event
  std::jthread writer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    log.info("late", "late event");
  });
  const auto late = log.after(8, std::chrono::milliseconds(5000));
  REQUIRE(late.size() == 1);
  CHECK(late[0].event == "late");
}

TEST_CASE("oracle run scores perfectly and persists a recomputable run") {
  testing::TempDir dir("run");
  Workspace ws(dir.path(), testing::data_dir());
  RunLog log;
  RunControl ctl;
  ctl.log = &log;
  auto cfg = make_config("demo_easy", oracle());
  const auto r = run_evaluation(cfg, ws, ctl);
  REQUIRE(r.records.size() == 20);
  const auto& m = r.report.models.at(0);
  for (const auto metric : {Metric::EA, Metric::EM, Metric::CC, Metric::ETC}) {
    INFO(metrics::to_string(metric));
    CHECK(m.metrics.at(metric).overall.score == 1.0);
    CHECK(m.metrics.at(metric).overall.support == 20);
  }
  CHECK(m.repairs == 0);
  CHECK(r.stats.gt_executions == 20);
  CHECK(r.stats.gateway_calls == 20);

  const auto dirpath = persist_run(r, log, ws.runs_dir());
  for (const char* f : {"config.json", "records.jsonl", "report.json", "logs.ndjson", "run.json", "timings.jsonl"})
    CHECK(std::filesystem::exists(dirpath / f));
  const auto stored = load_run(ws.runs_dir(), r.config.run_id);
  CHECK(stored.records == r.records);
  CHECK(report_text(aggregate(stored.config, stored.workload, stored.records)) == stored.report_text);
  CHECK(stored.report == r.report);
  CHECK(util::read_file(dirpath / "logs.ndjson") == log.ndjson());
  CHECK_THROWS_AS(load_run(ws.runs_dir(), "missing"), NotFound);
  CHECK(list_runs(ws.runs_dir()) == std::vector<std::string>{r.config.run_id});

  // the same run id cannot be reused
  auto again = cfg;
  again.run_id = r.config.run_id;
  CHECK_THROWS_AS(run_evaluation(again, ws), ConfigError);
}

TEST_CASE("column-swap mutant fails every multi-column point with one column_reorder repair") {
  testing::TempDir dir("swap");
  Workspace ws(dir.path(), testing::data_dir());
  const auto& catalog = ws.catalog();
  for (const std::string wid : {"demo_easy", "demo_medium", "demo_hard"}) {
    const auto w = ws.store().load(wid);
    std::map<std::string, data::ResultTable> gt;
    for (const auto& dp : w.data_points) gt[dp.id] = data::execute_query(catalog.get(dp.db_id), dp.gt_sql);
    const auto r = run_evaluation(make_config(wid, mutant("column_swap"), {{"metrics", {"EA"}}}), ws);
    for (const auto& rec : r.records) {
      INFO(wid << " " << rec.dp_id);
      const bool multi = gt.at(rec.dp_id).columns.size() > 1;
      CHECK(rec.outcome(Metric::EA)->passed() == !multi);
      if (!multi) {
        CHECK(rec.repairs.empty());
        continue;
      }
      REQUIRE(rec.repairs.size() == 1);
      REQUIRE(rec.repairs[0].transforms.size() == 1);
      CHECK(rec.repairs[0].transforms[0].kind == repair::TransformKind::column_reorder);
      const auto gen = data::execute_query(catalog.get(w.find(rec.dp_id)->db_id), rec.generation.sql_text);
      CHECK(repair::verify_suggestion(gen, gt.at(rec.dp_id), rec.repairs[0]));
    }
  }
}

TEST_CASE("drop-ORDER-BY mutant flips EA exactly on ordered ground truths") {
  testing::TempDir dir("order");
  Workspace ws(dir.path(), testing::data_dir());
  std::size_t ordered = 0;
  for (const std::string wid : {"demo_easy", "demo_medium", "demo_hard"}) {
    const auto w = ws.store().load(wid);
    const auto r = run_evaluation(make_config(wid, mutant("drop_order_by"), {{"metrics", {"EA"}}}), ws);
    for (const auto& rec : r.records) {
      INFO(wid << " " << rec.dp_id);
      const bool is_ordered = has_order_by(w.find(rec.dp_id)->gt_sql);
      ordered += is_ordered;
      CHECK(rec.outcome(Metric::EA)->passed() == !is_ordered);
    }
  }
  CHECK(ordered > 0);
}

TEST_CASE("runs are deterministic, cached and independent of the worker count") {
  testing::TempDir dir("det");
  Workspace ws(dir.path(), testing::data_dir());
  json models = json::array({{{"model_id", "oracle"}, {"kind", "mock_oracle"}},
                             {{"model_id", "swap"}, {"kind", "mock_mutant"}, {"mutation", "column_swap"}}});
  auto c1 = make_config("demo_medium", models, {{"concurrency", 1}});
  auto c8 = make_config("demo_medium", models, {{"concurrency", 8}});
  const auto first = run_evaluation(c1, ws);
  CHECK(first.stats.gateway_calls == 40);
  CHECK(first.stats.gt_executions == 20);
  const auto second = run_evaluation(c8, ws);
  CHECK(second.stats.gateway_calls == 0);
  CHECK(second.stats.cache_hits == 40);
  CHECK(records_text(first.records) == records_text(second.records));
  auto a = first.report;
  auto b = second.report;
  a.run_id = b.run_id = "";
  a.config = b.config = nullptr;
  CHECK(a == b);

  // without the cache the adapters are called again and the records match
  auto nocache = make_config("demo_medium", models, {{"cache", false}});
  const auto third = run_evaluation(nocache, ws);
  CHECK(third.stats.gateway_calls == 40);
  CHECK(records_text(third.records) == records_text(first.records));
}

TEST_CASE("ground truth runs once per data point and factor regardless of model count") {
  testing::TempDir dir("gt");
  Workspace ws(dir.path(), testing::data_dir());
  json models = json::array({{{"model_id", "a"}, {"kind", "mock_oracle"}},
                             {{"model_id", "b"}, {"kind", "mock_oracle"}},
                             {{"model_id", "c"}, {"kind", "mock_mutant"}, {"mutation", "drop_order_by"}}});
  const auto r = run_evaluation(
      make_config("demo_easy", models, {{"scale_factors", {1, 2}}, {"iterations", 2}, {"metrics", {"EA", "ETC"}}}), ws);
  CHECK(r.stats.gt_executions == 40);
  CHECK(r.records.size() == 3 * 2 * 2 * 20);
  const auto& ea = r.report.models.at(0).metrics.at(Metric::EA);
  REQUIRE(ea.scaling.size() == 2);
  CHECK(ea.scaling[1].first == 2);
  CHECK(ea.scaling[1].second.score == 1.0);
  CHECK(ea.iterations.size() == 2);
  // canonical order: model, iteration, factor, data point
  CHECK(r.records[0].model_id == "a");
  CHECK(r.records[20].scale_factor == 2);
  CHECK(r.records[40].iteration == 1);
  CHECK(r.records[80].model_id == "b");
}

TEST_CASE("per-record failures are recorded without aborting the run") {
  testing::TempDir dir("fail");
  Workspace ws(dir.path(), testing::data_dir());
  RunControl ctl;
  ctl.gateway.backoff_base = std::chrono::milliseconds(1);
  ctl.adapter_factory = [](const gateway::AdapterSettings& s) -> std::unique_ptr<gateway::ModelAdapter> {
    if (s.model_id == "down") return std::make_unique<DownAdapter>(s);
    if (s.model_id == "rambling") return std::make_unique<RamblingAdapter>(s);
    return nullptr;
  };
  json models = json::array({{{"model_id", "down"}, {"kind", "external_http"}},
                             {{"model_id", "rambling"}, {"kind", "external_http"}}});
  const auto r = run_evaluation(make_config("demo_easy", models), ws, ctl);
  REQUIRE(r.records.size() == 40);
  const auto* down = r.report.model("down");
  CHECK(down->generation_error_rate == 1.0);
  CHECK(down->metrics.at(Metric::EA).overall.score == 0.0);
  CHECK(down->metrics.at(Metric::EA).overall.support == 20);
  CHECK(r.stats.gateway_calls == 20 * 3 + 20);
  const auto* rambling = r.report.model("rambling");
  CHECK(rambling->generation_error_rate == 0.0);
  for (const auto& rec : r.records) {
    if (rec.model_id != "rambling") continue;
    CHECK_FALSE(rec.gen_label.has_value());
    CHECK_FALSE(rec.outcome(Metric::EM)->passed());
    CHECK_FALSE(rec.outcome(Metric::CC)->passed());
    CHECK_FALSE(rec.outcome(Metric::EA)->passed());
    CHECK(rec.outcome(Metric::TU)->count() == 19);
  }
}

TEST_CASE("evaluate_datapoint honours the metric subset") {
  const auto& catalog = testing::demo_catalog();
  const auto& db = catalog.get("school");
  auto conn = data::open_connection(db);
  workload::DataPoint dp;
  dp.id = "p";
  dp.gt_sql = "SELECT name FROM students WHERE age > 20";
  dp.db_id = "school";
  dp.label = sql::classify(sql::parse_sql(dp.gt_sql));
  GroundTruth gt;
  gt.result = data::execute_query(db, dp.gt_sql);
  TimingMemo memo;
  gateway::GenerationRecord gen;
  gen.dp_id = "p";
  gen.model_id = "m";
  gen.sql_text = dp.gt_sql;
  auto s = eval_settings(ea_only(), 1);
  const auto rec = evaluate_datapoint(dp, gen, gt, *conn, db, s, memo);
  REQUIRE(rec.outcomes.size() == 1);
  CHECK(rec.outcomes[0].metric == Metric::EA);
  CHECK(rec.outcomes[0].passed());

  s.metrics = metrics::all_metrics();
  gen.sql_text = "SELEC name FROM students";
  const auto bad = evaluate_datapoint(dp, gen, gt, *conn, db, s, memo);
  CHECK(bad.outcomes.size() == 5);
  CHECK_FALSE(bad.outcome(Metric::EM)->passed());
  CHECK_FALSE(bad.outcome(Metric::CC)->passed());
  CHECK_FALSE(bad.outcome(Metric::EA)->passed());
  CHECK(bad.outcome(Metric::ETC)->absent());  // no ground-truth timing given
  CHECK_FALSE(bad.gen_label.has_value());
}

TEST_CASE("cancellation keeps the completed records") {
  testing::TempDir dir("cancel");
  Workspace ws(dir.path(), testing::data_dir());
  std::atomic<bool> cancel{false};
  RunControl ctl;
  ctl.cancel = &cancel;
  ctl.progress = [&](std::size_t done, std::size_t) {
    if (done >= 25) cancel = true;
  };
  const auto r = run_evaluation(make_config("demo_easy", oracle(), {{"concurrency", 1}}), ws, ctl);
  CHECK(r.stats.interrupted);
  CHECK(r.records.size() == 5);
  CHECK(r.report.models.at(0).metrics.at(Metric::EA).overall.support == 5);
}

TEST_CASE("alignment inside a run evaluates the aligned workload") {
  testing::TempDir dir("alignrun");
  Workspace ws(dir.path(), testing::data_dir());
  // demo_medium: c3 has 10 eval points, c4 has 10
  const auto r = run_evaluation(
      make_config("demo_medium", oracle(), {{"alignment_target", {{"c3", 0.5}, {"c4", 0.5}}}, {"metrics", {"EA"}}}),
      ws);
  REQUIRE(r.alignment.has_value());
  CHECK(r.alignment->n == 20);
  CHECK(r.workload.id.rfind("demo_medium_aligned_", 0) == 0);
  CHECK(ws.store().load(r.workload.id).data_points.size() == 20);
  const auto skew = run_evaluation(
      make_config("demo_medium", oracle(), {{"alignment_target", {{"c3", 0.8}, {"c4", 0.2}}}, {"metrics", {"EA"}}}),
      ws);
  CHECK(skew.alignment->n == 13);
  CHECK(skew.records.size() == 13);
  CHECK_THROWS_AS(run_evaluation(make_config("demo_medium", oracle(), {{"alignment_target", {{"c1", 1.0}}}}), ws),
                  InfeasibleAlignment);
}

TEST_CASE("augmenting from a run publishes the next workload version") {
  testing::TempDir dir("augrun");
  Workspace ws(dir.path(), testing::data_dir());
  RunLog log;
  const auto r = run_evaluation(make_config("demo_easy", mutant("drop_order_by"), {{"metrics", {"EA"}}}), ws);
  persist_run(r, log, ws.runs_dir());

  AugmentRequest req;
  req.run_id = r.config.run_id;
  req.threshold = 0.0;
  CHECK_THROWS_AS(augment_from_run(ws, req), ValidationError);

  req.threshold = 0.5;
  req.per_subcategory = 3;
  const auto out = augment_from_run(ws, req, &log);
  CHECK(out.weak == std::set<TaxonomyLabel>{{1, 6}, {2, 3}});
  CHECK(out.result.workload.version == 2);
  CHECK(out.result.added_ids.size() == 6);
  const auto v2 = ws.store().load("demo_easy");
  CHECK(v2.version == 2);
  CHECK(v2.data_points.size() == 26);
  for (const auto& id : out.result.added_ids) CHECK(out.weak.count(v2.find(id)->label) == 1);
  // the run's version is no longer the latest
  CHECK_THROWS_AS(augment_from_run(ws, req), ValidationError);
  req.run_id = "nope";
  CHECK_THROWS_AS(augment_from_run(ws, req), NotFound);
}

TEST_CASE("alignment targets resolve by path or bundled name") {
  const auto named = config_from_json({{"workload", "demo_easy"}, {"models", {"mock_oracle"}},
                                       {"alignment_target", "sqlshare_illustrative"}});
  REQUIRE(named.alignment_target);
  CHECK(named.alignment_target->weights.at(1) == 0.30);
  CHECK(named.alignment_target->weights.size() == 6);
  const auto path = (testing::data_dir() / "targets" / "sqlshare_illustrative.json").string();
  const auto by_path =
      config_from_json({{"workload", "demo_easy"}, {"models", {"mock_oracle"}}, {"alignment_target", path}});
  CHECK(by_path.alignment_target->weights == named.alignment_target->weights);
  CHECK_THROWS_AS(config_from_json({{"workload", "demo_easy"}, {"models", {"mock_oracle"}},
                                    {"alignment_target", "no_such_target"}}),
                  ConfigError);
}
