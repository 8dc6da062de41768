#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sqleval/data/result.hpp"
#include "sqleval/gateway/record.hpp"
#include "sqleval/sql/exact_match.hpp"
#include "sqleval/sql/taxonomy.hpp"

namespace sqleval::metrics {

enum class Metric { EA, EM, CC, ETC, TU };

const char* to_string(Metric m);
Metric metric_from_string(const std::string& s);
const std::vector<Metric>& all_metrics();
inline bool is_rate(Metric m) { return m != Metric::TU; }

// Value is absent (monostate) when an upstream prerequisite failed, e.g. ETC
// when the ground truth could not be timed.
struct MetricOutcome {
  Metric metric = Metric::EA;
  std::variant<std::monostate, bool, std::int64_t> value;
  nlohmann::json detail;

  bool absent() const { return std::holds_alternative<std::monostate>(value); }
  bool passed() const { return std::holds_alternative<bool>(value) && std::get<bool>(value); }
  std::int64_t count() const { return std::holds_alternative<std::int64_t>(value) ? std::get<std::int64_t>(value) : 0; }

  bool operator==(const MetricOutcome&) const = default;
};

nlohmann::json to_json(const MetricOutcome& o);
MetricOutcome outcome_from_json(const nlohmann::json& j);

struct ComparisonPolicy {
  bool order_sensitive_iff_gt_ordered = true;
  double float_rel_tol = 1e-6;
  double float_abs_tol = 1e-9;
  bool null_equals_null = true;
  bool column_order_sensitive = true;
};

nlohmann::json to_json(const ComparisonPolicy& p);
ComparisonPolicy policy_from_json(const nlohmann::json& j);

bool cells_equal(const data::Cell& a, const data::Cell& b, const ComparisonPolicy& policy);

// Canonical total order on cells: NULL < numbers (by value) < text < blob.
bool cell_less(const data::Cell& a, const data::Cell& b);

// `b` is the reference (ground truth): its ordered flag decides whether row
// order matters.
bool compare_result_tables(const data::ResultTable& a, const data::ResultTable& b,
                           const ComparisonPolicy& policy = {});

// Column permutations p of `a` such that column p[i] of `a` holds the same
// value multiset as column i of `b`. Exhaustive up to 8 columns, greedy above.
std::vector<std::vector<std::size_t>> matching_column_orders(const data::ResultTable& a, const data::ResultTable& b,
                                                             const ComparisonPolicy& policy, std::size_t limit = 64);

data::ResultTable permute_columns(const data::ResultTable& t, const std::vector<std::size_t>& order);

// Result of running a generated query: a table or an execution error.
struct ExecOutcome {
  std::optional<data::ResultTable> table;
  std::string error;
  bool timeout = false;

  bool ok() const { return table.has_value(); }
};

MetricOutcome execution_accuracy(const ExecOutcome& gen, const data::ResultTable& gt,
                                 const ComparisonPolicy& policy = {});

MetricOutcome exact_match_outcome(const std::string& gen_sql, const std::string& gt_sql, sql::MatchMode mode,
                                  const sql::SchemaInfo* schema = nullptr);

// gen_label empty means the generated query did not parse.
MetricOutcome complexity_consistency(const std::optional<sql::TaxonomyLabel>& gen_label,
                                     const sql::TaxonomyLabel& gt_label);

inline constexpr double kDefaultTau = 1.0;
inline constexpr double kDefaultFloorMs = 1.0;

MetricOutcome execution_time_consistency(const data::TimingStats& gen, const data::TimingStats& gt,
                                         double tau = kDefaultTau, double floor_ms = kDefaultFloorMs);

MetricOutcome token_usage(const gateway::GenerationRecord& rec);

}  // namespace sqleval::metrics
