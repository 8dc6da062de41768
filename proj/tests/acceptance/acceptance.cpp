// Prints one PASS/FAIL line per acceptance criterion and exits non-zero when
// any criterion fails. Expected values come from the oracles below, not from
// the code under test.

#include <sqlite3.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "sqleval/data/scaling.hpp"
#include "sqleval/pipeline/pipeline.hpp"
#include "sqleval/reporting/reporting.hpp"
#include "sqleval/sql/exact_match.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/sql/taxonomy.hpp"
#include "sqleval/util/files.hpp"
#include "support/corpus.hpp"
#include "support/perturb.hpp"
#include "support/workdir.hpp"

using namespace sqleval;
using metrics::Metric;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kOracleRuntimeLimitS = 60.0;
constexpr double kScalingRuntimeLimitS = 120.0;
constexpr double kNullRateDrift = 0.05;
constexpr double kTvdLimit = 0.1;
constexpr std::size_t kTvdMaxDistinct = 20;
constexpr int kScaleFactor = 10;
constexpr std::size_t kCorpusSize = 72;
constexpr std::size_t kAugmentPerSubcategory = 3;

const std::vector<std::string> kWorkloads = {"demo_easy", "demo_medium", "demo_hard"};

struct Verdict {
  bool ok = true;
  std::vector<std::string> problems;
  std::string summary;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (problems.size() < 8) problems.push_back(what);
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

pipeline::RunConfig config(const std::string& workload, json models, json extra = json::object()) {
  json j = {{"workload", workload}, {"models", std::move(models)}, {"seed", 2024}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  return pipeline::config_from_json(j);
}

json model(const std::string& id, const std::string& kind, const std::string& mutation = {}) {
  json m = {{"model_id", id}, {"kind", kind}};
  if (!mutation.empty()) m["mutation"] = mutation;
  return json::array({m});
}

// ORDER BY outside every parenthesis, found by scanning characters.
bool has_top_level_order_by(const std::string& sql) {
  std::string top;
  int depth = 0;
  for (char c : sql) {
    if (c == '(') ++depth;
    if (depth == 0) top += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (c == ')') --depth;
  }
  std::string squeezed;
  for (char c : top) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (space && (squeezed.empty() || squeezed.back() == ' ')) continue;
    squeezed += space ? ' ' : c;
  }
  return squeezed.find("ORDER BY") != std::string::npos;
}

// ---- raw SQLite access for the scaling oracle ----

class Db {
 public:
  explicit Db(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK)
      throw std::runtime_error("cannot open " + path);
  }
  ~Db() { sqlite3_close(db_); }
  Db(const Db&) = delete;
  Db& operator=(const Db&) = delete;

  // Rows as text, NULL rendered as "\x01NULL".
  std::vector<std::vector<std::string>> rows(const std::string& sql) const {
    sqlite3_stmt* st = nullptr;
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &st, nullptr) != SQLITE_OK)
      throw std::runtime_error(std::string("prepare failed: ") + sqlite3_errmsg(db_) + " in " + sql);
    std::vector<std::vector<std::string>> out;
    while (sqlite3_step(st) == SQLITE_ROW) {
      std::vector<std::string> row;
      for (int i = 0; i < sqlite3_column_count(st); ++i) {
        if (sqlite3_column_type(st, i) == SQLITE_NULL) row.emplace_back("\x01NULL");
        else row.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(st, i)));
      }
      out.push_back(std::move(row));
    }
    sqlite3_finalize(st);
    return out;
  }
  long long scalar(const std::string& sql) const { return std::stoll(rows(sql).at(0).at(0)); }

 private:
  sqlite3* db_ = nullptr;
};

std::vector<std::string> table_names(const Db& db) {
  std::vector<std::string> out;
  for (const auto& r : db.rows("SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%' ORDER BY name"))
    out.push_back(r[0]);
  return out;
}

std::vector<std::string> column_names(const Db& db, const std::string& table) {
  std::vector<std::string> out;
  for (const auto& r : db.rows("PRAGMA table_info(\"" + table + "\")")) out.push_back(r[1]);
  return out;
}

std::map<std::string, double> frequencies(const Db& db, const std::string& table, const std::string& col) {
  std::map<std::string, double> f;
  const auto total = static_cast<double>(db.scalar("SELECT COUNT(*) FROM \"" + table + "\" WHERE \"" + col + "\" IS NOT NULL"));
  if (total == 0) return f;
  for (const auto& r : db.rows("SELECT CAST(\"" + col + "\" AS TEXT), COUNT(*) FROM \"" + table + "\" WHERE \"" + col +
                               "\" IS NOT NULL GROUP BY 1"))
    f[r[0]] = std::stod(r[1]) / total;
  return f;
}

double tvd(const std::map<std::string, double>& p, const std::map<std::string, double>& q) {
  std::set<std::string> keys;
  for (const auto& [k, v] : p) keys.insert(k);
  for (const auto& [k, v] : q) keys.insert(k);
  double sum = 0;
  for (const auto& k : keys) {
    const double a = p.count(k) ? p.at(k) : 0.0;
    const double b = q.count(k) ? q.at(k) : 0.0;
    sum += std::abs(a - b);
  }
  return sum / 2;
}

// ---- criteria ----

Verdict oracle_end_to_end(const pipeline::Workspace& ws) {
  Verdict v;
  double slowest = 0;
  for (const auto& wid : kWorkloads) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = pipeline::run_evaluation(
        config(wid, model("oracle", "mock_oracle"),
               {{"concurrency", 1}, {"em_mode", "strict"}, {"tau", 1.0}, {"metrics", {"EA", "EM", "CC", "ETC"}}}),
        ws);
    const double elapsed = seconds_since(t0);
    slowest = std::max(slowest, elapsed);
    const auto& m = r.report.models.at(0);
    for (const auto metric : {Metric::EA, Metric::EM, Metric::CC, Metric::ETC}) {
      const auto& s = m.metrics.at(metric).overall;
      v.expect(s.score == 1.0 && s.support == 20,
               wid + " " + metrics::to_string(metric) + "=" + std::to_string(s.score) + " over " +
                   std::to_string(s.support));
    }
    std::size_t repairs = 0;
    for (const auto& rec : r.records) repairs += rec.repairs.size();
    v.expect(repairs == 0, wid + " emitted " + std::to_string(repairs) + " repair suggestions");
    v.expect(elapsed < kOracleRuntimeLimitS, wid + " took " + std::to_string(elapsed) + " s");
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "3 workloads x 20 points at 100%% EA/EM(strict)/CC/ETC, 0 repairs, slowest %.2f s", slowest);
  v.summary = buf;
  return v;
}

Verdict mutant_diagnostics(const pipeline::Workspace& ws) {
  Verdict v;
  const auto& catalog = ws.catalog();
  std::size_t multi_total = 0, ordered_total = 0;
  for (const auto& wid : kWorkloads) {
    const auto w = ws.store().load(wid);
    std::map<std::string, data::ResultTable> gt;
    for (const auto& dp : w.data_points) gt[dp.id] = data::execute_query(catalog.get(dp.db_id), dp.gt_sql);

    const auto swap = pipeline::run_evaluation(
        config(wid, model("swap", "mock_mutant", "column_swap"), {{"metrics", {"EA"}}}), ws);
    for (const auto& rec : swap.records) {
      const bool multi = gt.at(rec.dp_id).columns.size() > 1;
      const bool ea = rec.outcome(Metric::EA)->passed();
      if (!multi) {
        v.expect(ea, rec.dp_id + " single-column point failed EA under column swap");
        continue;
      }
      ++multi_total;
      v.expect(!ea, rec.dp_id + " multi-column point passed EA under column swap");
      const bool single_reorder = rec.repairs.size() == 1 && rec.repairs[0].transforms.size() == 1 &&
                                  rec.repairs[0].transforms[0].kind == repair::TransformKind::column_reorder;
      v.expect(single_reorder, rec.dp_id + " did not get exactly one column_reorder suggestion");
      if (single_reorder) {
        const auto generated = data::execute_query(catalog.get(w.find(rec.dp_id)->db_id), rec.generation.sql_text);
        v.expect(repair::verify_suggestion(generated, gt.at(rec.dp_id), rec.repairs[0]),
                 rec.dp_id + " suggestion does not re-verify");
      }
    }

    const auto drop = pipeline::run_evaluation(
        config(wid, model("drop", "mock_mutant", "drop_order_by"), {{"metrics", {"EA"}}}), ws);
    for (const auto& rec : drop.records) {
      const bool ordered = has_top_level_order_by(w.find(rec.dp_id)->gt_sql);
      ordered_total += ordered;
      v.expect(rec.outcome(Metric::EA)->passed() == !ordered,
               rec.dp_id + (ordered ? " ordered point kept EA" : " unordered point lost EA") + " under drop-ORDER-BY");
    }
  }
  v.expect(multi_total > 0 && ordered_total > 0, "no multi-column or ordered points to test");
  v.summary = std::to_string(multi_total) + " multi-column points fail with one verified column_reorder each; EA flips on " +
              std::to_string(ordered_total) + " ordered points only";
  return v;
}

Verdict classifier_corpus() {
  Verdict v;
  const auto corpus = testing::load_corpus(std::string(SQLEVAL_TEST_DATA) + "/classifier_corpus.tsv");
  v.expect(corpus.size() == kCorpusSize, "corpus has " + std::to_string(corpus.size()) + " entries");
  std::map<sql::TaxonomyLabel, int> per_label;
  std::size_t agree = 0;
  for (const auto& e : corpus) {
    const auto expected = sql::TaxonomyLabel::parse(e.label);
    ++per_label[expected];
    try {
      const auto got = sql::classify(sql::parse_sql(e.sql));
      agree += got == expected;
      v.expect(got == expected, e.sql + " -> " + got.subcategory_code() + ", labelled " + e.label);
    } catch (const std::exception& ex) {
      v.expect(false, e.sql + " did not parse: " + ex.what());
    }
  }
  bool two_each = per_label.size() == 36;
  for (const auto& [l, n] : per_label) two_each &= n == 2;
  v.expect(two_each, "corpus does not hold exactly 2 queries per subcategory");
  const auto& table = sql::taxonomy();
  std::set<sql::TaxonomyLabel> labels;
  for (const auto& s : table) labels.insert(s.label);
  bool grid = labels.size() == 36;
  for (int c = 1; c <= 6; ++c)
    for (int s = 1; s <= 6; ++s) grid &= labels.count({c, s}) == 1;
  v.expect(grid, "taxonomy is not the 6x6 grid");
  v.summary = std::to_string(agree) + "/" + std::to_string(corpus.size()) + " labels agree; taxonomy has " +
              std::to_string(labels.size()) + " subcategories";
  return v;
}

Verdict em_robustness() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::size_t variants = 0, value_checked = 0;
  for (const auto& e : testing::load_corpus(std::string(SQLEVAL_TEST_DATA) + "/classifier_corpus.tsv")) {
    const auto& schema = testing::demo_schema(e.db_id);
    const auto gt = sql::parse_sql(e.sql);
    const auto aliased = testing::perturb_aliases(e.sql);
    for (const auto& variant : {testing::perturb_layout(e.sql, rng), aliased, testing::perturb_layout(aliased, rng)}) {
      ++variants;
      for (const auto mode : {sql::MatchMode::strict, sql::MatchMode::spider_compatible})
        v.expect(sql::exact_match(sql::parse_sql(variant), gt, mode, &schema).match,
                 std::string(sql::to_string(mode)) + " rejects " + variant);
    }
    const auto [shifted, changed] = testing::perturb_values(e.sql);
    if (changed == 0) continue;
    ++value_checked;
    const auto s = sql::parse_sql(shifted);
    v.expect(sql::exact_match(s, gt, sql::MatchMode::spider_compatible, &schema).match,
             "spider_compatible rejects " + shifted);
    v.expect(!sql::exact_match(s, gt, sql::MatchMode::strict, &schema).match, "strict accepts " + shifted);
  }
  v.summary = std::to_string(variants) + " layout/case/alias variants match; " + std::to_string(value_checked) +
              " value-shifted variants split spider_compatible from strict";
  return v;
}

// Largest n whose Hamilton apportionment over integer weights fits `available`.
std::pair<std::size_t, std::vector<std::size_t>> brute_force_alignment(const std::vector<std::size_t>& weights,
                                                                       const std::vector<std::size_t>& available) {
  std::size_t total_w = 0, total_a = 0;
  for (auto w : weights) total_w += w;
  for (auto a : available) total_a += a;
  for (std::size_t n = total_a; n > 0; --n) {
    std::vector<std::size_t> q(weights.size());
    std::vector<std::pair<std::size_t, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      q[i] = weights[i] * n / total_w;
      assigned += q[i];
      rem.emplace_back(weights[i] * n % total_w, i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) q[rem[k].second]++;
    bool fits = true;
    for (std::size_t i = 0; i < q.size(); ++i) fits &= q[i] <= available[i];
    if (fits) return {n, q};
  }
  return {0, {}};
}

Verdict alignment_oracle() {
  Verdict v;
  workload::Workload w;
  w.workload_id = "acceptance";
  for (int c = 1; c <= 3; ++c)
    for (int i = 0; i < 10; ++i) {
      workload::DataPoint dp;
      dp.id = "c" + std::to_string(c) + "-" + std::to_string(i);
      dp.question = "q";
      dp.gt_sql = "SELECT 1";
      dp.db_id = "school";
      dp.label = {c, 1};
      w.data_points.push_back(dp);
    }
  const auto target = workload::TargetDistribution::from_json({{"c1", 0.5}, {"c2", 0.3}, {"c3", 0.2}});
  const auto [best_n, best_q] = brute_force_alignment({5, 3, 2}, {10, 10, 10});
  const auto r = workload::align_workload(w, target, 17);
  const auto counts = r.workload.category_counts();
  const std::vector<std::size_t> got = {counts[1], counts[2], counts[3]};
  v.expect(best_n == 20 && best_q == std::vector<std::size_t>{10, 6, 4}, "brute force disagrees with (20; 10,6,4)");
  v.expect(r.n == best_n && r.workload.data_points.size() == best_n, "aligned size " + std::to_string(r.n));
  v.expect(got == best_q, "category counts differ from the brute-force quotas");
  v.expect(r.quotas.at(1) == 10 && r.quotas.at(2) == 6 && r.quotas.at(3) == 4, "reported quotas differ");
  const auto again = workload::align_workload(w, target, 17);
  v.expect(again.workload.data_points == r.workload.data_points && again.workload.workload_id == r.workload.workload_id,
           "alignment is not deterministic under a fixed seed");
  v.summary = "n=" + std::to_string(r.n) + " quotas (" + std::to_string(got[0]) + "," + std::to_string(got[1]) + "," +
              std::to_string(got[2]) + ") equal the brute-force maximum; repeatable under seed 17";
  return v;
}

Verdict scaling_fidelity(const pipeline::Workspace& ws) {
  Verdict v;
  const auto& catalog = ws.catalog();
  double worst_null = 0, worst_tvd = 0, slowest = 0;
  std::size_t tvd_columns = 0;
  for (const auto& id : catalog.ids()) {
    const auto& db = catalog.get(id);
    Db src(db.location);

    const auto identity = data::scale_database(db, 1, 5, ws.workdir() / "identity");
    Db one(identity.db.location);
    for (const auto& t : table_names(src))
      v.expect(src.rows("SELECT * FROM \"" + t + "\" ORDER BY rowid") == one.rows("SELECT * FROM \"" + t + "\" ORDER BY rowid"),
               id + "." + t + " differs at factor 1");

    const auto t0 = std::chrono::steady_clock::now();
    const auto scaled = data::scale_database(db, kScaleFactor, 5, ws.workdir() / "x10");
    const double elapsed = seconds_since(t0);
    slowest = std::max(slowest, elapsed);
    v.expect(elapsed < kScalingRuntimeLimitS, id + " scaling took " + std::to_string(elapsed) + " s");
    Db big(scaled.db.location);
    v.expect(table_names(src) == table_names(big), id + " table set changed");
    v.expect(big.rows("PRAGMA foreign_key_check").empty(), id + " has foreign key orphans");
    for (const auto& t : table_names(src)) {
      const auto n = src.scalar("SELECT COUNT(*) FROM \"" + t + "\"");
      const auto m = big.scalar("SELECT COUNT(*) FROM \"" + t + "\"");
      v.expect(m == kScaleFactor * n, id + "." + t + " has " + std::to_string(m) + " rows for " + std::to_string(n));
      if (n == 0) continue;
      std::set<std::string> references;
      for (const auto& fk : src.rows("PRAGMA foreign_key_list(\"" + t + "\")")) references.insert(fk.at(3));
      for (const auto& c : column_names(src, t)) {
        const std::string q = "SELECT AVG(\"" + c + "\" IS NULL) FROM \"" + t + "\"";
        const double drift = std::abs(std::stod(src.rows(q)[0][0]) - std::stod(big.rows(q)[0][0]));
        worst_null = std::max(worst_null, drift);
        v.expect(drift <= kNullRateDrift, id + "." + t + "." + c + " null-rate drift " + std::to_string(drift));
        const auto distinct = src.scalar("SELECT COUNT(DISTINCT \"" + c + "\") FROM \"" + t + "\"");
        if (distinct == 0 || static_cast<std::size_t>(distinct) > kTvdMaxDistinct) continue;
        // key and reference columns are regenerated, not resampled
        const auto uniq = src.scalar("SELECT COUNT(*) = COUNT(DISTINCT \"" + c + "\") FROM \"" + t + "\"");
        if (uniq || references.count(c)) continue;
        ++tvd_columns;
        const double d = tvd(frequencies(src, t, c), frequencies(big, t, c));
        worst_tvd = std::max(worst_tvd, d);
        v.expect(d <= kTvdLimit, id + "." + t + "." + c + " TVD " + std::to_string(d));
      }
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "x%d row counts exact, 0 orphans, max null drift %.4f, max TVD %.4f over %zu columns, factor 1 identical, slowest %.2f s",
                kScaleFactor, worst_null, worst_tvd, tvd_columns, slowest);
  v.summary = buf;
  return v;
}

json report_without_run_identity(const pipeline::RunReport& r) {
  auto j = pipeline::to_json(r);
  j.erase("run_id");
  j.erase("config");
  return j;
}

Verdict determinism_and_cache() {
  Verdict v;
  // own workspace so no earlier criterion has warmed the cache
  testing::TempDir dir("determinism");
  pipeline::Workspace ws(dir.path(), testing::data_dir());
  json models = json::array({{{"model_id", "oracle"}, {"kind", "mock_oracle"}},
                             {{"model_id", "swap"}, {"kind", "mock_mutant"}, {"mutation", "column_swap"}},
                             {{"model_id", "drop"}, {"kind", "mock_mutant"}, {"mutation", "drop_order_by"}}});
  pipeline::RunLog log_a, log_b;
  const auto a = pipeline::run_evaluation(config("demo_hard", models, {{"concurrency", 1}, {"run_id", "det-a"}}), ws);
  const auto b = pipeline::run_evaluation(config("demo_hard", models, {{"concurrency", 8}, {"run_id", "det-b"}}), ws);
  const auto dir_a = pipeline::persist_run(a, log_a, ws.runs_dir());
  const auto dir_b = pipeline::persist_run(b, log_b, ws.runs_dir());
  const auto rec_a = util::read_file(dir_a / "records.jsonl");
  v.expect(rec_a == util::read_file(dir_b / "records.jsonl"), "records.jsonl differs between identical runs");
  v.expect(a.stats.gateway_calls == 60, "first run made " + std::to_string(a.stats.gateway_calls) + " calls, expected 60");
  v.expect(b.stats.gateway_calls == 0, "cached re-run made " + std::to_string(b.stats.gateway_calls) + " calls");
  v.expect(report_without_run_identity(a.report) == report_without_run_identity(b.report),
           "reports differ between 1 and 8 workers");
  v.summary = "records.jsonl byte-identical (" + std::to_string(rec_a.size()) + " bytes); cached re-run made " +
              std::to_string(b.stats.gateway_calls) + " gateway calls; 1 and 8 workers give the same report";
  return v;
}

Verdict augmentation_loop(const pipeline::Workspace& ws) {
  Verdict v;
  const auto base = pipeline::run_evaluation(
      config("demo_easy", model("drop", "mock_mutant", "drop_order_by"), {{"metrics", {"EA"}}, {"run_id", "aug-v1"}}), ws);
  pipeline::RunLog log;
  pipeline::persist_run(base, log, ws.runs_dir());
  const auto before = reporting::plot_workload_versions(reporting::reports_by_version(ws.runs_dir(), "demo_easy"), Metric::EA);

  const auto v1 = ws.store().load("demo_easy");
  // weak set computed here from the records
  std::map<sql::TaxonomyLabel, std::pair<int, int>> tally;
  for (const auto& rec : base.records) {
    auto& t = tally[rec.gt_label];
    t.first += rec.outcome(Metric::EA)->passed();
    t.second += 1;
  }
  std::set<sql::TaxonomyLabel> weak;
  for (const auto& [l, t] : tally)
    if (t.second >= 3 && static_cast<double>(t.first) / t.second < 0.5) weak.insert(l);
  v.expect(weak.size() == 2, "expected 2 weak subcategories, found " + std::to_string(weak.size()));

  pipeline::AugmentRequest req;
  req.run_id = "aug-v1";
  req.threshold = 0.5;
  req.per_subcategory = kAugmentPerSubcategory;
  req.generator = "mock_template";
  const auto out = pipeline::augment_from_run(ws, req);
  v.expect(out.weak == weak, "augmentation targeted a different weak set");
  const auto v2 = ws.store().load("demo_easy");
  v.expect(v2.version == v1.version + 1, "new version is v" + std::to_string(v2.version));
  v.expect(v2.data_points.size() == v1.data_points.size() + 2 * kAugmentPerSubcategory,
           "v2 has " + std::to_string(v2.data_points.size()) + " points");
  std::set<std::string> old_ids;
  for (const auto& dp : v1.data_points) old_ids.insert(dp.id);
  std::size_t fresh = 0;
  std::map<sql::TaxonomyLabel, std::size_t> per_weak;
  for (const auto& dp : v2.data_points) {
    if (old_ids.count(dp.id)) continue;
    ++fresh;
    const auto label = sql::classify(sql::parse_sql(dp.gt_sql));
    ++per_weak[label];
    v.expect(weak.count(label) == 1, dp.id + " classifies to " + label.subcategory_code());
    v.expect(label == dp.label, dp.id + " stored label differs from its classification");
    try {
      data::execute_query(ws.catalog().get(dp.db_id), dp.gt_sql);
    } catch (const std::exception& e) {
      v.expect(false, dp.id + " does not execute: " + e.what());
    }
  }
  v.expect(fresh == 2 * kAugmentPerSubcategory, std::to_string(fresh) + " new points");
  for (const auto& l : weak) v.expect(per_weak[l] == kAugmentPerSubcategory, l.subcategory_code() + " did not get 3 points");

  const auto next = pipeline::run_evaluation(
      config("demo_easy", model("drop", "mock_mutant", "drop_order_by"), {{"metrics", {"EA"}}, {"run_id", "aug-v2"}}), ws);
  pipeline::persist_run(next, log, ws.runs_dir());
  const auto after = reporting::plot_workload_versions(reporting::reports_by_version(ws.runs_dir(), "demo_easy"), Metric::EA);
  v.expect(after.x_ticks.size() == before.x_ticks.size() + 1, "version plot went from " +
                                                                  std::to_string(before.x_ticks.size()) + " to " +
                                                                  std::to_string(after.x_ticks.size()) + " ticks");
  std::string codes;
  for (const auto& l : weak) codes += (codes.empty() ? "" : ",") + l.subcategory_code();
  v.summary = "weak {" + codes + "} -> v" + std::to_string(v2.version) + " with " + std::to_string(fresh) +
              " new validated points; version plot " + std::to_string(before.x_ticks.size()) + " -> " +
              std::to_string(after.x_ticks.size()) + " ticks";
  return v;
}

Verdict persistence(const pipeline::Workspace& ws) {
  Verdict v;
  json models = json::array({{{"model_id", "oracle"}, {"kind", "mock_oracle"}},
                             {{"model_id", "swap"}, {"kind", "mock_mutant"}, {"mutation", "column_swap"}}});
  const auto r = pipeline::run_evaluation(
      config("demo_medium", models, {{"run_id", "persist"}, {"scale_factors", {1, 2}}, {"iterations", 2}}), ws);
  pipeline::RunLog log;
  const auto dir = pipeline::persist_run(r, log, ws.runs_dir());
  const auto cfg = pipeline::config_from_json(json::parse(util::read_file(dir / "config.json")));
  const auto run = json::parse(util::read_file(dir / "run.json"));
  const pipeline::WorkloadRef ref{run.at("workload").at("id").get<std::string>(),
                                  run.at("workload").at("version").get<int>()};
  const auto records = pipeline::parse_records(util::read_file(dir / "records.jsonl"));
  const auto recomputed = pipeline::report_text(pipeline::aggregate(cfg, ref, records));
  v.expect(recomputed == util::read_file(dir / "report.json"), "recomputed report differs from report.json");

  // rows = models x metrics x (1 + populated categories + populated subcategories)
  const auto w = ws.store().load("demo_medium");
  std::set<int> cats;
  std::set<sql::TaxonomyLabel> subs;
  for (const auto& dp : w.data_points) {
    cats.insert(dp.label.category);
    subs.insert(dp.label);
  }
  const std::size_t expected = 2 * 5 * (1 + cats.size() + subs.size());
  const auto csv = reporting::export_csv(r.report);
  const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  v.expect(lines == expected + 1, "CSV has " + std::to_string(lines - 1) + " rows, expected " + std::to_string(expected));
  v.summary = "report.json recomputed bit-identically (" + std::to_string(recomputed.size()) + " bytes); CSV rows " +
              std::to_string(lines - 1) + " = 2x5x(1+" + std::to_string(cats.size()) + "+" + std::to_string(subs.size()) + ")";
  return v;
}

}  // namespace

int main() {
  testing::TempDir dir("acceptance");
  pipeline::Workspace ws(dir.path(), testing::data_dir());
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"oracle end-to-end", [&] { return oracle_end_to_end(ws); }},
      {"mutant diagnostics", [&] { return mutant_diagnostics(ws); }},
      {"classifier corpus", [] { return classifier_corpus(); }},
      {"exact-match robustness", [] { return em_robustness(); }},
      {"alignment oracle", [] { return alignment_oracle(); }},
      {"scaling fidelity", [&] { return scaling_fidelity(ws); }},
      {"determinism and caching", [] { return determinism_and_cache(); }},
      {"augmentation loop", [&] { return augmentation_loop(ws); }},
      {"persistence", [&] { return persistence(ws); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.ok = false;
      v.problems.push_back(std::string("exception: ") + e.what());
    }
    failures += !v.ok;
    std::cout << (v.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first;
    if (!v.summary.empty()) std::cout << ": " << v.summary;
    std::cout << "\n";
    for (const auto& p : v.problems) std::cout << "    " << p << "\n";
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
