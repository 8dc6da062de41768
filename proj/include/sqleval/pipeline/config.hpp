#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/data/driver.hpp"
#include "sqleval/gateway/gateway.hpp"
#include "sqleval/metrics/metrics.hpp"
#include "sqleval/sql/exact_match.hpp"
#include "sqleval/workload/workload.hpp"

namespace sqleval::pipeline {

struct RunConfig {
  std::string run_id;  // generated when empty
  std::string workload_id;
  std::optional<int> workload_version;  // latest when empty
  std::string catalog;                  // catalog file; workspace default when empty
  std::vector<gateway::AdapterSettings> models;
  std::vector<metrics::Metric> metrics;
  int iterations = 1;
  std::string llm_id;
  double temperature = 0.0;
  double tau = metrics::kDefaultTau;
  double etc_floor_ms = metrics::kDefaultFloorMs;
  double theta = 0.5;
  std::vector<int> scale_factors{1};
  std::optional<workload::TargetDistribution> alignment_target;
  std::uint64_t seed = 0;
  int concurrency = 4;
  bool cache = true;
  sql::MatchMode em_mode = sql::MatchMode::spider_compatible;
  metrics::ComparisonPolicy policy;
  int timing_repetitions = data::kDefaultRepetitions;
  int timeout_ms = data::kDefaultTimeoutMs;
  int repair_depth = 2;
  std::string augment_generator = "mock_template";
  std::optional<std::string> notes;

  // Throws ConfigError naming the first violated rule.
  void validate() const;
};

// Unknown keys are rejected. Models inherit llm_id and temperature from the
// run unless they set their own.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

// JSON or YAML, chosen by extension (.yaml/.yml) or, failing that, content.
RunConfig load_config(const std::filesystem::path& file);
nlohmann::json parse_config_text(const std::string& text, bool yaml);

}  // namespace sqleval::pipeline
