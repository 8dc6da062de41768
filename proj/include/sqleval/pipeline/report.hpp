#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/gateway/record.hpp"
#include "sqleval/metrics/metrics.hpp"
#include "sqleval/pipeline/config.hpp"
#include "sqleval/repair/repair.hpp"
#include "sqleval/sql/taxonomy.hpp"

namespace sqleval::pipeline {

struct DataPointRecord {
  std::string dp_id;
  std::string model_id;
  int iteration = 0;
  int scale_factor = 1;
  sql::TaxonomyLabel gt_label;  // grouping key
  gateway::GenerationRecord generation;
  std::optional<sql::TaxonomyLabel> gen_label;  // empty: unparsable
  std::vector<metrics::MetricOutcome> outcomes;  // configured metrics, in config order
  std::vector<repair::RepairSuggestion> repairs;
  std::optional<std::string> error;  // evaluation crashed; scored as failure

  const metrics::MetricOutcome* outcome(metrics::Metric m) const;
  bool operator==(const DataPointRecord&) const = default;
};

// Latency, cache flags and timing figures are left out so the serialized
// record depends only on the configuration; see RecordTiming.
nlohmann::json to_json(const DataPointRecord& r);
DataPointRecord record_from_json(const nlohmann::json& j);

// Wall-clock side data for one record, persisted to timings.jsonl.
struct RecordTiming {
  std::string dp_id;
  std::string model_id;
  int iteration = 0;
  int scale_factor = 1;
  double gen_latency_ms = 0.0;
  bool cached = false;
  nlohmann::json etc;  // ETC detail: gen_ms, gt_ms, bound_ms
};

nlohmann::json to_json(const RecordTiming& t);

struct Score {
  double score = 0.0;
  std::size_t support = 0;
  bool operator==(const Score&) const = default;
};

struct MetricScores {
  Score overall;
  std::map<int, Score> categories;
  std::map<sql::TaxonomyLabel, Score> subcategories;
  std::vector<std::pair<int, Score>> iterations;  // iteration -> overall at the base factor
  std::vector<std::pair<int, Score>> scaling;     // factor -> overall, mean over iterations
  bool operator==(const MetricScores&) const = default;
};

struct ModelReport {
  std::string model_id;
  std::map<metrics::Metric, MetricScores> metrics;
  std::size_t records = 0;
  std::size_t generation_errors = 0;
  double generation_error_rate = 0.0;
  std::size_t repairs = 0;
  bool operator==(const ModelReport&) const = default;
};

struct RunReport {
  std::string run_id;
  nlohmann::json config;  // snapshot
  std::string workload_id;
  int workload_version = 1;
  std::vector<int> scale_factors;
  int iterations = 1;
  std::vector<metrics::Metric> metric_order;
  std::vector<ModelReport> models;  // config order

  const ModelReport* model(const std::string& id) const;
  bool operator==(const RunReport&) const = default;
};

nlohmann::json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);

// Deterministic text of report.json.
std::string report_text(const RunReport& r);

struct WorkloadRef {
  std::string id;
  int version = 1;
};

// Group scores are successes / support over records with a present outcome,
// grouped by the ground-truth label at the smallest scale factor. With
// several iterations a group's score is the mean of its per-iteration scores
// and its support the largest per-iteration support. TU scores are mean
// token counts.
RunReport aggregate(const RunConfig& cfg, const WorkloadRef& workload, const std::vector<DataPointRecord>& records);

// Records in canonical order: model (config order), iteration, scale factor,
// then data point order.
void canonicalize(std::vector<DataPointRecord>& records, const RunConfig& cfg,
                  const std::vector<std::string>& dp_order);

std::map<sql::TaxonomyLabel, workload::SubcategoryScore> subcategory_scores(const ModelReport& m,
                                                                           metrics::Metric metric);

// Union over models (or the named model) of subcategories below theta.
std::set<sql::TaxonomyLabel> weak_subcategories(const RunReport& r, double theta, metrics::Metric metric,
                                                const std::optional<std::string>& model = std::nullopt,
                                                std::size_t min_support = workload::kDefaultMinSupport);

}  // namespace sqleval::pipeline
