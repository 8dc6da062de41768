#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sqleval/data/catalog.hpp"
#include "sqleval/gateway/gateway.hpp"
#include "sqleval/pipeline/config.hpp"
#include "sqleval/pipeline/log.hpp"
#include "sqleval/pipeline/report.hpp"
#include "sqleval/workload/workload.hpp"

namespace sqleval::pipeline {

// Bundled data directory: $SQLEVAL_DATA_DIR, else the one compiled in.
std::filesystem::path default_data_dir();
// $SQLEVAL_WORKDIR, else ./sqleval-work.
std::filesystem::path default_workdir();

// Working directory layout:
//   runs/<run_id>/   persisted runs
//   workloads/<id>/  versioned workload store
//   cache/           gateway response cache
//   dbs/, scaled/    materialized and scaled databases
class Workspace {
 public:
  Workspace(std::filesystem::path workdir, std::filesystem::path data_dir);

  const std::filesystem::path& workdir() const { return workdir_; }
  const std::filesystem::path& data_dir() const { return data_dir_; }
  std::filesystem::path runs_dir() const { return workdir_ / "runs"; }
  std::filesystem::path cache_dir() const { return workdir_ / "cache"; }

  // Empty file: <workdir>/catalog.json when present, else the bundled one.
  // Catalogs are loaded once and stay valid for the workspace's lifetime.
  const data::Catalog& catalog(const std::string& file = {}) const;
  workload::WorkloadStore store(const data::Catalog& catalog) const;
  workload::WorkloadStore store() const { return store(catalog()); }

  // A path, or the name of a bundled target under <data_dir>/targets.
  workload::TargetDistribution target(const std::string& name_or_path) const;

 private:
  std::filesystem::path workdir_;
  std::filesystem::path data_dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::unique_ptr<data::Catalog>> catalogs_;
};

struct RunStats {
  std::size_t gt_executions = 0;  // one per (data point, scale factor)
  std::size_t gateway_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t tasks_total = 0;
  std::size_t tasks_done = 0;
  std::size_t failed_records = 0;
  double wall_ms = 0.0;
  std::map<std::string, double> stage_ms;
  bool interrupted = false;
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
};

struct RunControl {
  RunLog* log = nullptr;
  const std::atomic<bool>* cancel = nullptr;  // stops taking new tasks when set
  std::function<void(std::size_t done, std::size_t total)> progress;
  // Returns an adapter for a model entry, or null to use make_adapter.
  std::function<std::unique_ptr<gateway::ModelAdapter>(const gateway::AdapterSettings&)> adapter_factory;
  gateway::GatewayOptions gateway;  // cache_enabled and cache_dir come from the config and workspace
};

struct RunResult {
  RunConfig config;  // run_id filled in
  WorkloadRef workload;  // evaluated workload (the aligned one when a target is set)
  std::vector<DataPointRecord> records;  // canonical order
  std::vector<RecordTiming> timings;
  RunReport report;
  RunStats stats;
  std::optional<workload::AlignmentResult> alignment;
};

// Throws ConfigError, NotFound or ValidationError before any model call.
// Per-record failures are recorded and never abort the run.
RunResult run_evaluation(RunConfig cfg, const Workspace& ws, const RunControl& ctl = {});

struct GroundTruth {
  std::optional<data::ResultTable> result;
  std::optional<data::TimingStats> timing;
  std::string error;
};

// (db_id, scale factor, SQL text) -> timing. Identical text on the same
// database is timed once per run.
class TimingMemo {
 public:
  using Key = std::tuple<std::string, int, std::string>;
  std::optional<data::TimingStats> find(const Key& k) const;
  // Keeps the first value stored for a key and returns it.
  data::TimingStats insert(const Key& k, data::TimingStats t);

 private:
  mutable std::mutex mu_;
  std::map<Key, data::TimingStats> entries_;
};

struct EvalSettings {
  std::vector<metrics::Metric> metrics;
  metrics::ComparisonPolicy policy;
  sql::MatchMode em_mode = sql::MatchMode::spider_compatible;
  double tau = metrics::kDefaultTau;
  double etc_floor_ms = metrics::kDefaultFloorMs;
  int timing_repetitions = data::kDefaultRepetitions;
  int timeout_ms = data::kDefaultTimeoutMs;
  int repair_depth = 2;
  int scale_factor = 1;
};

EvalSettings eval_settings(const RunConfig& cfg, int scale_factor);

// Runs the generated query on `conn`, scores every configured metric and
// searches for repairs when EA fails with both results present. ETC timing
// figures go to `timing` rather than the record.
DataPointRecord evaluate_datapoint(const workload::DataPoint& dp, const gateway::GenerationRecord& gen,
                                   const GroundTruth& gt, data::Connection& conn, const data::DatabaseRef& db,
                                   const EvalSettings& s, TimingMemo& memo, RecordTiming* timing = nullptr);

// Extra files written into the staging directory before it is published.
using ArtifactHook = std::function<void(const std::filesystem::path& dir, const RunReport& report)>;

// Writes runs/<run_id>/ through a staging directory renamed into place.
std::filesystem::path persist_run(const RunResult& r, const RunLog& log, const std::filesystem::path& runs_dir,
                                  const ArtifactHook& hook = {});

struct StoredRun {
  std::filesystem::path dir;
  RunConfig config;
  WorkloadRef workload;
  std::vector<DataPointRecord> records;
  std::string report_text;  // report.json as stored
  RunReport report;
  nlohmann::json run;  // run.json
};

// Throws NotFound.
StoredRun load_run(const std::filesystem::path& runs_dir, const std::string& run_id);
std::vector<std::string> list_runs(const std::filesystem::path& runs_dir);
std::vector<DataPointRecord> parse_records(const std::string& jsonl);
std::string records_text(const std::vector<DataPointRecord>& records);

struct AugmentRequest {
  std::string run_id;
  double threshold = 0.5;
  std::size_t per_subcategory = 3;
  std::optional<std::string> model;      // weak set over all models when empty
  std::optional<std::string> generator;  // config's augment_generator when empty
  metrics::Metric metric = metrics::Metric::EA;
};

struct AugmentOutcome {
  std::set<sql::TaxonomyLabel> weak;
  workload::AugmentResult result;
};

// Selects weak subcategories from the stored run, augments the run's
// workload and publishes version + 1. Throws ValidationError when nothing is
// weak or the run's workload version is no longer the latest.
AugmentOutcome augment_from_run(const Workspace& ws, const AugmentRequest& req, RunLog* log = nullptr,
                                const RunControl& ctl = {});

std::string new_run_id();

}  // namespace sqleval::pipeline
