#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/sql/ast.hpp"
#include "sqleval/sql/normalize.hpp"

namespace sqleval::sql {

enum class MatchMode { spider_compatible, strict };

const char* to_string(MatchMode m);
MatchMode match_mode_from_string(const std::string& s);  // "spider" | "spider_compatible" | "strict"

// Names of clause components that differ, e.g. "select-items" or
// "left.where-conjuncts" for the left operand of a set operator.
struct ComponentDiff {
  std::vector<std::string> components;

  bool empty() const { return components.empty(); }
  nlohmann::json to_json() const { return components; }
  bool operator==(const ComponentDiff&) const = default;
};

struct MatchResult {
  bool match = false;
  ComponentDiff diff;
};

// Compares the clause components of two queries after normalization. In
// spider_compatible mode literal values (including LIMIT counts) are
// replaced by a placeholder first.
MatchResult exact_match(const QueryAst& gen, const QueryAst& gt, MatchMode mode, const SchemaInfo* schema = nullptr);
MatchResult exact_match(const NormalizedAst& gen, const NormalizedAst& gt, MatchMode mode,
                        const SchemaInfo* schema = nullptr);

// Replaces every non-NULL literal with a placeholder.
Query strip_values(Query q);

// 64-bit FNV-1a over the canonical rendering; stable across runs and builds.
std::uint64_t ast_fingerprint(const NormalizedAst& n);
std::string fingerprint_hex(std::uint64_t fp);

}  // namespace sqleval::sql
