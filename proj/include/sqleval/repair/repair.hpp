#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/data/result.hpp"
#include "sqleval/metrics/metrics.hpp"

namespace sqleval::repair {

enum class TransformKind { column_reorder, column_project, row_dedup, ignore_order, round_values, limit_truncate };

struct Transform {
  TransformKind kind = TransformKind::column_reorder;
  int digits = 0;                    // round_values only
  std::vector<std::size_t> columns;  // chosen column order, filled in when applied

  std::string name() const;  // "round_values(2)"
  std::string fix_text() const;
  bool same_step(const Transform& o) const { return kind == o.kind && digits == o.digits; }
  bool operator==(const Transform&) const = default;
};

// Frozen search order.
const std::vector<Transform>& transform_catalog();

nlohmann::json to_json(const Transform& t);
Transform transform_from_json(const nlohmann::json& j);

// The pair being reconciled. Some transforms touch the reference too:
// ignore_order clears its ordered flag, round_values rounds both sides.
struct RepairState {
  data::ResultTable gen;
  data::ResultTable gt;
};

// Throws NotApplicable when the transform would be a no-op or its
// precondition fails. The returned transform records the columns chosen.
RepairState apply_transform(const RepairState& s, Transform& t);

// Convenience form: the transformed generated table only.
data::ResultTable apply_transform(const data::ResultTable& r, Transform t, const data::ResultTable& gt);

struct RepairSuggestion {
  std::string dp_id;
  std::string model_id;
  std::vector<Transform> transforms;
  std::string fix_text;

  bool operator==(const RepairSuggestion&) const = default;
};

nlohmann::json to_json(const RepairSuggestion& s);
RepairSuggestion suggestion_from_json(const nlohmann::json& j);

inline constexpr int kDefaultMaxDepth = 2;

// Breadth-first search over catalog sequences up to max_depth; returns every
// successful sequence of the shortest successful length. Empty when the pair
// already compares equal or nothing reconciles it.
std::vector<RepairSuggestion> suggest_repairs(const data::ResultTable& gen, const data::ResultTable& gt,
                                              const metrics::ComparisonPolicy& policy = {},
                                              int max_depth = kDefaultMaxDepth);

// Re-applies a suggestion from scratch and compares.
bool verify_suggestion(const data::ResultTable& gen, const data::ResultTable& gt, const RepairSuggestion& s,
                       const metrics::ComparisonPolicy& policy = {});

}  // namespace sqleval::repair
