#include "sqleval/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "sqleval/data/scaling.hpp"
#include "sqleval/errors.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/util/files.hpp"
#include "sqleval/util/rng.hpp"

#ifndef SQLEVAL_DEFAULT_DATA_DIR
#define SQLEVAL_DEFAULT_DATA_DIR "data"
#endif

namespace sqleval::pipeline {

using metrics::Metric;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

fs::path default_data_dir() {
  if (const char* env = std::getenv("SQLEVAL_DATA_DIR"); env && *env) return env;
  return SQLEVAL_DEFAULT_DATA_DIR;
}

fs::path default_workdir() {
  if (const char* env = std::getenv("SQLEVAL_WORKDIR"); env && *env) return env;
  return fs::current_path() / "sqleval-work";
}

Workspace::Workspace(fs::path workdir, fs::path data_dir) : workdir_(std::move(workdir)), data_dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(workdir_, ec);
  if (ec) throw IoError("cannot create workdir " + workdir_.string() + ": " + ec.message());
}

const data::Catalog& Workspace::catalog(const std::string& file) const {
  fs::path path = file;
  if (path.empty()) path = fs::exists(workdir_ / "catalog.json") ? workdir_ / "catalog.json" : data_dir_ / "catalog.json";
  std::lock_guard lock(mu_);
  auto& slot = catalogs_[path.string()];
  if (!slot) {
    if (!fs::exists(path)) throw NotFound("catalog " + path.string() + " not found");
    slot = std::make_unique<data::Catalog>(data::Catalog::load(path, workdir_));
  }
  return *slot;
}

workload::WorkloadStore Workspace::store(const data::Catalog& catalog) const {
  return workload::WorkloadStore(workdir_ / "workloads", catalog, data_dir_ / "workloads");
}

workload::TargetDistribution Workspace::target(const std::string& name_or_path) const {
  if (fs::exists(name_or_path)) return workload::TargetDistribution::load(name_or_path);
  const auto bundled = data_dir_ / "targets" / (name_or_path + ".json");
  if (fs::exists(bundled)) return workload::TargetDistribution::load(bundled);
  throw NotFound("target distribution '" + name_or_path + "' not found");
}

json RunStats::to_json() const {
  return {{"gt_executions", gt_executions}, {"gateway_calls", gateway_calls}, {"cache_hits", cache_hits},
          {"tasks_total", tasks_total},     {"tasks_done", tasks_done},       {"failed_records", failed_records},
          {"wall_ms", wall_ms},             {"stage_ms", stage_ms},           {"interrupted", interrupted},
          {"started_at", started_at},       {"finished_at", finished_at}};
}

std::optional<data::TimingStats> TimingMemo::find(const Key& k) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(k);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

data::TimingStats TimingMemo::insert(const Key& k, data::TimingStats t) {
  std::lock_guard lock(mu_);
  return entries_.emplace(k, std::move(t)).first->second;
}

EvalSettings eval_settings(const RunConfig& cfg, int scale_factor) {
  EvalSettings s;
  s.metrics = cfg.metrics;
  s.policy = cfg.policy;
  s.em_mode = cfg.em_mode;
  s.tau = cfg.tau;
  s.etc_floor_ms = cfg.etc_floor_ms;
  s.timing_repetitions = cfg.timing_repetitions;
  s.timeout_ms = cfg.timeout_ms;
  s.repair_depth = cfg.repair_depth;
  s.scale_factor = scale_factor;
  return s;
}

namespace {

metrics::MetricOutcome failed_outcome(Metric m, const std::string& why) {
  metrics::MetricOutcome o;
  o.metric = m;
  o.value = false;
  o.detail = why;
  return o;
}

metrics::MetricOutcome absent_outcome(Metric m, const std::string& why) {
  metrics::MetricOutcome o;
  o.metric = m;
  o.detail = why;
  return o;
}

}  // namespace

DataPointRecord evaluate_datapoint(const workload::DataPoint& dp, const gateway::GenerationRecord& gen,
                                   const GroundTruth& gt, data::Connection& conn, const data::DatabaseRef& db,
                                   const EvalSettings& s, TimingMemo& memo, RecordTiming* timing) {
  DataPointRecord rec;
  rec.dp_id = dp.id;
  rec.model_id = gen.model_id;
  rec.iteration = gen.iteration;
  rec.scale_factor = s.scale_factor;
  rec.gt_label = dp.label;
  rec.generation = gen;
  rec.generation.latency_ms = 0.0;
  rec.generation.cached = false;
  if (timing) {
    timing->dp_id = dp.id;
    timing->model_id = gen.model_id;
    timing->iteration = gen.iteration;
    timing->scale_factor = s.scale_factor;
    timing->gen_latency_ms = gen.latency_ms;
    timing->cached = gen.cached;
  }

  if (!gen.failed()) {
    try {
      rec.gen_label = sql::classify(sql::parse_sql(gen.sql_text));
    } catch (const Error&) {
    }
  }

  metrics::ExecOutcome ex;
  if (gen.failed()) {
    ex.error = "generation failed: " + *gen.error;
  } else {
    try {
      ex.table = data::execute_query(conn, gen.sql_text, s.timeout_ms);
    } catch (const Timeout& e) {
      ex.timeout = true;
      ex.error = e.what();
    } catch (const Error& e) {
      ex.error = e.what();
    }
  }

  const auto schema = db.schema.info();
  std::optional<bool> ea;
  for (const auto m : s.metrics) {
    switch (m) {
      case Metric::EA:
        if (!gt.result) {
          rec.outcomes.push_back(absent_outcome(m, "ground truth failed: " + gt.error));
        } else {
          rec.outcomes.push_back(metrics::execution_accuracy(ex, *gt.result, s.policy));
          ea = rec.outcomes.back().passed();
        }
        break;
      case Metric::EM:
        if (gen.failed()) rec.outcomes.push_back(failed_outcome(m, "generation failed"));
        else rec.outcomes.push_back(metrics::exact_match_outcome(gen.sql_text, dp.gt_sql, s.em_mode, &schema));
        break;
      case Metric::CC:
        rec.outcomes.push_back(metrics::complexity_consistency(rec.gen_label, dp.label));
        break;
      case Metric::ETC: {
        if (!gt.timing || gt.timing->timeout) {
          rec.outcomes.push_back(absent_outcome(m, "ground truth could not be timed"));
          break;
        }
        if (!ex.ok()) {
          rec.outcomes.push_back(failed_outcome(m, ex.timeout ? "execution timed out" : "execution failed"));
          break;
        }
        const TimingMemo::Key key{db.db_id, s.scale_factor, gen.sql_text};
        auto t = memo.find(key);
        if (!t) t = memo.insert(key, data::measure_time(conn, gen.sql_text, s.timing_repetitions, s.timeout_ms));
        auto o = metrics::execution_time_consistency(*t, *gt.timing, s.tau, s.etc_floor_ms);
        if (timing) timing->etc = o.detail;
        o.detail = nullptr;
        rec.outcomes.push_back(std::move(o));
        break;
      }
      case Metric::TU:
        rec.outcomes.push_back(metrics::token_usage(gen));
        break;
    }
  }

  if (ea && !*ea && ex.ok() && gt.result && s.repair_depth > 0) {
    rec.repairs = repair::suggest_repairs(*ex.table, *gt.result, s.policy, s.repair_depth);
    for (auto& r : rec.repairs) {
      r.dp_id = dp.id;
      r.model_id = gen.model_id;
    }
  }
  return rec;
}

namespace {

// Fixed-size pool over an index range; stops early when cancelled.
template <typename Fn>
void parallel_for(std::size_t n, int workers, const std::atomic<bool>* cancel, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto body = [&](int worker) {
    for (std::size_t i = next++; i < n; i = next++) {
      if (cancel && cancel->load()) return;
      fn(i, worker);
    }
  };
  const int count = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));
  std::vector<std::jthread> threads;
  for (int w = 1; w < count; ++w) threads.emplace_back(body, w);
  body(0);
}

// Connections are confined to the worker that opened them.
class WorkerConnections {
 public:
  data::Connection& get(const data::DatabaseRef& db, int factor) {
    auto& c = conns_[{db.db_id, factor}];
    if (!c) c = data::open_connection(db, true);
    return *c;
  }

 private:
  std::map<std::pair<std::string, int>, std::unique_ptr<data::Connection>> conns_;
};

std::vector<gateway::Exemplar> pick_exemplars(const workload::Workload& w, const std::string& db_id, std::size_t k) {
  std::vector<gateway::Exemplar> out;
  if (k == 0) return out;
  for (int pass = 0; pass < 2 && out.size() < k; ++pass)
    for (const auto& dp : w.data_points) {
      if (out.size() >= k) break;
      if (dp.split != workload::Split::train || (dp.db_id == db_id) != (pass == 0)) continue;
      out.push_back({dp.question, dp.gt_sql});
    }
  return out;
}

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::string new_run_id() {
  std::random_device rd;
  char suffix[8];
  std::snprintf(suffix, sizeof suffix, "%06x", static_cast<unsigned>(rd() & 0xffffff));
  auto ts = workload::utc_timestamp();  // 2026-01-02T03:04:05Z
  ts.erase(std::remove_if(ts.begin(), ts.end(), [](char c) { return c == '-' || c == ':' || c == 'Z'; }), ts.end());
  return "run-" + ts + "-" + suffix;
}

RunResult run_evaluation(RunConfig cfg, const Workspace& ws, const RunControl& ctl) {
  RunLog fallback_log;
  RunLog& log = ctl.log ? *ctl.log : fallback_log;
  const auto run_start = Clock::now();

  cfg.validate();
  if (cfg.run_id.empty()) cfg.run_id = new_run_id();
  if (fs::exists(ws.runs_dir() / cfg.run_id)) throw ConfigError("run '" + cfg.run_id + "' already exists");

  RunResult result;
  result.stats.started_at = workload::utc_timestamp();
  const auto& catalog = ws.catalog(cfg.catalog);
  auto store = ws.store(catalog);
  auto w = store.load(cfg.workload_id, cfg.workload_version);
  cfg.workload_version = w.version;
  log.info("run_started", "run " + cfg.run_id + " on " + w.workload_id + " v" + std::to_string(w.version),
           {{"run_id", cfg.run_id}, {"workload", w.workload_id}, {"version", w.version}});

  // (1) scaling
  auto stage = Clock::now();
  std::set<std::string> db_ids;
  for (const auto* dp : w.eval_points()) db_ids.insert(dp->db_id);
  std::map<std::pair<std::string, int>, data::DatabaseRef> dbs;
  for (const auto& id : db_ids) {
    const auto& base = catalog.get(id);
    for (const int f : cfg.scale_factors) {
      if (f == 1) {
        dbs[{id, f}] = base;
        continue;
      }
      log.info("scaling", "scaling " + id + " x" + std::to_string(f), {{"db_id", id}, {"factor", f}});
      dbs[{id, f}] = data::scale_database(base, f, util::derive_seed(cfg.seed, "scale:" + id), ws.workdir()).db;
    }
  }
  result.stats.stage_ms["scaling"] = ms_since(stage);

  // (2) alignment
  stage = Clock::now();
  if (cfg.alignment_target) {
    auto aligned = workload::align_workload(w, *cfg.alignment_target, cfg.seed);
    const auto ids = store.ids();
    if (std::find(ids.begin(), ids.end(), aligned.workload.workload_id) == ids.end())
      store.publish(aligned.workload, {{"source", "align"}, {"from", w.workload_id}, {"from_version", w.version}});
    json quotas = json::object();
    for (const auto& [c, q] : aligned.quotas) quotas["c" + std::to_string(c)] = q;
    log.info("aligned", "aligned to " + std::to_string(aligned.n) + " eval points",
             {{"workload", aligned.workload.workload_id}, {"n", aligned.n}, {"quotas", quotas}});
    w = aligned.workload;
    result.alignment = std::move(aligned);
  }
  result.workload = {w.workload_id, w.version};
  result.stats.stage_ms["alignment"] = ms_since(stage);

  const auto points = w.eval_points();
  const auto n_points = points.size();
  const auto n_factors = cfg.scale_factors.size();
  bool want_timing = std::find(cfg.metrics.begin(), cfg.metrics.end(), Metric::ETC) != cfg.metrics.end();

  // Gateway and adapters
  auto answers = std::make_shared<gateway::AnswerKey>();
  for (const auto* dp : points) (*answers)[dp->id] = dp->gt_sql;
  auto gopts = ctl.gateway;
  gopts.cache_enabled = cfg.cache;
  gopts.cache_dir = cfg.cache ? ws.cache_dir() : fs::path();
  gateway::Gateway gw(gopts);
  for (const auto& m : cfg.models) {
    std::unique_ptr<gateway::ModelAdapter> a;
    if (ctl.adapter_factory) a = ctl.adapter_factory(m);
    if (!a) a = gateway::make_adapter(m, answers);
    gw.add_adapter(std::move(a));
  }

  const std::size_t gt_tasks = n_points * n_factors;
  const std::size_t model_tasks = cfg.models.size() * static_cast<std::size_t>(cfg.iterations) * n_points;
  result.stats.tasks_total = gt_tasks + model_tasks;
  std::atomic<std::size_t> done{0};
  const auto tick = [&] {
    const auto d = ++done;
    if (ctl.progress) ctl.progress(d, result.stats.tasks_total);
  };

  // (3a) ground truth, once per (data point, factor)
  stage = Clock::now();
  TimingMemo memo;
  std::vector<GroundTruth> gts(gt_tasks);
  std::atomic<std::size_t> gt_count{0};
  std::vector<WorkerConnections> conns(static_cast<std::size_t>(cfg.concurrency));
  log.info("stage", "executing ground truth", {{"stage", "ground_truth"}, {"tasks", gt_tasks}});
  parallel_for(gt_tasks, cfg.concurrency, ctl.cancel, [&](std::size_t i, int worker) {
    const auto* dp = points[i % n_points];
    const int f = cfg.scale_factors[i / n_points];
    const auto& db = dbs.at({dp->db_id, f});
    auto& g = gts[i];
    ++gt_count;
    try {
      auto& conn = conns[static_cast<std::size_t>(worker)].get(db, f);
      g.result = data::execute_query(conn, dp->gt_sql, cfg.timeout_ms);
      if (want_timing)
        g.timing = memo.insert({db.db_id, f, dp->gt_sql},
                               data::measure_time(conn, dp->gt_sql, cfg.timing_repetitions, cfg.timeout_ms));
    } catch (const std::exception& e) {
      g.error = e.what();
      log.warn("gt_failed", "ground truth of " + dp->id + " failed: " + g.error, {{"dp_id", dp->id}, {"factor", f}});
    }
    tick();
  });
  result.stats.gt_executions = gt_count;
  result.stats.stage_ms["ground_truth"] = ms_since(stage);

  // (3b) generation and evaluation per (model, iteration, data point)
  stage = Clock::now();
  std::map<std::string, std::string> schema_text;
  for (const auto& id : db_ids) schema_text[id] = catalog.get(id).schema.text();
  std::vector<EvalSettings> settings;
  for (const int f : cfg.scale_factors) settings.push_back(eval_settings(cfg, f));
  const auto iters = static_cast<std::size_t>(cfg.iterations);
  std::vector<std::optional<DataPointRecord>> slots(model_tasks * n_factors);
  std::vector<RecordTiming> timing_slots(slots.size());
  std::atomic<std::size_t> cache_hits{0};
  log.info("stage", "generating and evaluating", {{"stage", "evaluation"}, {"tasks", model_tasks}});
  parallel_for(model_tasks, cfg.concurrency, ctl.cancel, [&](std::size_t t, int worker) {
    const std::size_t mi = t / (iters * n_points);
    const std::size_t it = (t / n_points) % iters;
    const std::size_t di = t % n_points;
    const auto& model = cfg.models[mi];
    const auto* dp = points[di];
    gateway::Prompt prompt{gateway::SqlTask{dp->id, dp->db_id, dp->question, schema_text.at(dp->db_id),
                                            pick_exemplars(w, dp->db_id, static_cast<std::size_t>(model.icl_exemplars))},
                           static_cast<int>(it)};
    const auto gen = gw.generate_sql(model.model_id, prompt);
    if (gen.cached) ++cache_hits;
    if (gen.failed())
      log.warn("generation_failed", model.model_id + " failed on " + dp->id + ": " + *gen.error,
               {{"dp_id", dp->id}, {"model_id", model.model_id}, {"iteration", it}});
    for (std::size_t fi = 0; fi < n_factors; ++fi) {
      const int f = cfg.scale_factors[fi];
      const auto& db = dbs.at({dp->db_id, f});
      // canonical slot: model, iteration, factor, data point
      const std::size_t slot = ((mi * iters + it) * n_factors + fi) * n_points + di;
      try {
        auto& conn = conns[static_cast<std::size_t>(worker)].get(db, f);
        slots[slot] = evaluate_datapoint(*dp, gen, gts[fi * n_points + di], conn, db, settings[fi], memo,
                                         &timing_slots[slot]);
      } catch (const std::exception& e) {
        DataPointRecord rec;
        rec.dp_id = dp->id;
        rec.model_id = model.model_id;
        rec.iteration = static_cast<int>(it);
        rec.scale_factor = f;
        rec.gt_label = dp->label;
        rec.generation = gen;
        rec.generation.latency_ms = 0.0;
        rec.generation.cached = false;
        rec.error = e.what();
        for (const auto m : cfg.metrics)
          rec.outcomes.push_back(m == Metric::TU ? metrics::token_usage(gen) : failed_outcome(m, "evaluation crashed"));
        timing_slots[slot] = {dp->id, model.model_id, static_cast<int>(it), f, gen.latency_ms, gen.cached, nullptr};
        slots[slot] = std::move(rec);
        log.warn("evaluation_failed", "evaluation of " + dp->id + " crashed: " + e.what(),
                 {{"dp_id", dp->id}, {"model_id", model.model_id}, {"iteration", it}, {"factor", f}});
      }
    }
    tick();
    const auto d = done.load();
    if (d % 10 == 0 || d == result.stats.tasks_total)
      log.info("progress", std::to_string(d) + "/" + std::to_string(result.stats.tasks_total) + " tasks",
               {{"done", d}, {"total", result.stats.tasks_total}});
  });
  result.stats.stage_ms["evaluation"] = ms_since(stage);

  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) continue;
    if (slots[i]->error) ++result.stats.failed_records;
    result.records.push_back(std::move(*slots[i]));
    result.timings.push_back(std::move(timing_slots[i]));
  }
  result.stats.tasks_done = done;
  result.stats.interrupted = ctl.cancel && ctl.cancel->load() && done < result.stats.tasks_total;
  result.stats.gateway_calls = gw.calls();
  result.stats.cache_hits = cache_hits;

  // (4) aggregation
  stage = Clock::now();
  result.report = aggregate(cfg, result.workload, result.records);
  result.stats.stage_ms["aggregation"] = ms_since(stage);
  result.stats.wall_ms = ms_since(run_start);
  result.stats.finished_at = workload::utc_timestamp();
  result.config = std::move(cfg);
  log.info("run_finished",
           std::string(result.stats.interrupted ? "interrupted" : "finished") + " after " +
               std::to_string(result.records.size()) + " records",
           {{"records", result.records.size()},
            {"gateway_calls", result.stats.gateway_calls},
            {"interrupted", result.stats.interrupted}});
  return result;
}

std::string records_text(const std::vector<DataPointRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<DataPointRecord> parse_records(const std::string& jsonl) {
  std::vector<DataPointRecord> out;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError("records line " + std::to_string(n) + ": " + e.what(), {});
    }
  }
  return out;
}

fs::path persist_run(const RunResult& r, const RunLog& log, const fs::path& runs_dir, const ArtifactHook& hook) {
  const auto target = runs_dir / r.config.run_id;
  const auto staging = runs_dir / (".staging-" + r.config.run_id + "-" + std::to_string(::getpid()));
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging, ec);
  if (ec) throw IoError("cannot create " + staging.string() + ": " + ec.message());
  try {
    util::atomic_write(staging / "config.json", to_json(r.config).dump(2) + "\n");
    util::atomic_write(staging / "records.jsonl", records_text(r.records));
    std::string timings;
    for (const auto& t : r.timings) timings += to_json(t).dump() + "\n";
    util::atomic_write(staging / "timings.jsonl", timings);
    util::atomic_write(staging / "report.json", report_text(r.report));
    json run = {{"run_id", r.config.run_id},
                {"status", r.stats.interrupted ? "interrupted" : "completed"},
                {"workload", {{"id", r.workload.id}, {"version", r.workload.version}}},
                {"stats", r.stats.to_json()}};
    if (r.alignment) {
      json quotas = json::object();
      for (const auto& [c, q] : r.alignment->quotas) quotas["c" + std::to_string(c)] = q;
      run["alignment"] = {{"n", r.alignment->n}, {"quotas", quotas}};
    }
    util::atomic_write(staging / "run.json", run.dump(2) + "\n");
    if (hook) hook(staging, r.report);
    util::atomic_write(staging / "logs.ndjson", log.ndjson());
    util::publish_directory(staging, target);
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  return target;
}

StoredRun load_run(const fs::path& runs_dir, const std::string& run_id) {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id.front() == '.')
    throw NotFound("invalid run id '" + run_id + "'");
  const auto dir = runs_dir / run_id;
  if (!fs::exists(dir / "report.json")) throw NotFound("run '" + run_id + "' not found");
  StoredRun s;
  s.dir = dir;
  s.config = config_from_json(json::parse(util::read_file(dir / "config.json")));
  s.run = json::parse(util::read_file(dir / "run.json"));
  s.workload = {s.run.at("workload").at("id").get<std::string>(), s.run.at("workload").at("version").get<int>()};
  s.records = parse_records(util::read_file(dir / "records.jsonl"));
  s.report_text = util::read_file(dir / "report.json");
  s.report = report_from_json(json::parse(s.report_text));
  return s;
}

std::vector<std::string> list_runs(const fs::path& runs_dir) {
  std::vector<std::string> out;
  if (!fs::exists(runs_dir)) return out;
  for (const auto& e : fs::directory_iterator(runs_dir)) {
    const auto name = e.path().filename().string();
    if (e.is_directory() && name.front() != '.' && fs::exists(e.path() / "report.json")) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

AugmentOutcome augment_from_run(const Workspace& ws, const AugmentRequest& req, RunLog* log, const RunControl& ctl) {
  const auto stored = load_run(ws.runs_dir(), req.run_id);
  if (!(req.threshold >= 0.0 && req.threshold <= 1.0)) throw ValidationError("threshold must be within [0, 1]", {});
  if (req.per_subcategory == 0) throw ValidationError("per-subcategory count must be positive", {});
  AugmentOutcome out;
  out.weak = weak_subcategories(stored.report, req.threshold, req.metric, req.model);
  if (out.weak.empty()) throw ValidationError("no weak subcategories", {});

  const auto& catalog = ws.catalog(stored.config.catalog);
  auto store = ws.store(catalog);
  const auto versions = store.versions(stored.workload.id);
  if (versions.back() != stored.workload.version)
    throw ValidationError("run " + req.run_id + " evaluated " + stored.workload.id + " v" +
                              std::to_string(stored.workload.version) + " but v" + std::to_string(versions.back()) +
                              " is the latest",
                          {});
  const auto w = store.load(stored.workload.id, stored.workload.version);

  const auto generator = req.generator.value_or(stored.config.augment_generator);
  gateway::AdapterSettings settings;
  bool found = false;
  for (const auto& m : stored.config.models)
    if (m.model_id == generator) {
      settings = m;
      found = true;
    }
  if (!found) {
    try {
      settings.kind = gateway::adapter_kind_from_string(generator);
    } catch (const ConfigError&) {
      throw ValidationError("unknown generator '" + generator + "'", {});
    }
    settings.model_id = generator;
  }
  auto gopts = ctl.gateway;
  gopts.cache_enabled = stored.config.cache;
  gopts.cache_dir = stored.config.cache ? ws.cache_dir() : fs::path();
  gateway::Gateway gw(gopts);
  std::unique_ptr<gateway::ModelAdapter> adapter;
  if (ctl.adapter_factory) adapter = ctl.adapter_factory(settings);
  if (!adapter) adapter = gateway::make_adapter(settings);
  gw.add_adapter(std::move(adapter));

  workload::AugmentOptions opts;
  opts.per_subcategory = req.per_subcategory;
  opts.generator = generator;
  opts.run_id = req.run_id;
  opts.seed = stored.config.seed;
  json weak = json::array();
  for (const auto& l : out.weak) weak.push_back(l.subcategory_code());
  if (log) log->info("augment_started", "augmenting " + std::to_string(out.weak.size()) + " subcategories",
                     {{"workload", w.workload_id}, {"version", w.version}, {"weak", weak}});
  out.result = workload::augment_workload(w, out.weak, opts, gw, catalog);
  json fills = json::array();
  for (const auto& f : out.result.fills) fills.push_back(f.to_json());
  store.publish(out.result.workload, {{"source", "augment"}, {"run_id", req.run_id}, {"threshold", req.threshold},
                                      {"weak", weak}, {"fills", fills}});
  if (log) log->info("augment_finished", "published v" + std::to_string(out.result.workload.version),
                     {{"added", out.result.added_ids.size()}, {"version", out.result.workload.version}});
  return out;
}

}  // namespace sqleval::pipeline
