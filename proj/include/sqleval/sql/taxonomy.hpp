#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "sqleval/sql/ast.hpp"

namespace sqleval::sql {

// Structural constructs found anywhere in a query, including subqueries and
// CTE bodies.
struct FeatureSet {
  bool star_select = false;
  bool column_projection = false;
  bool comparison = false;
  bool logical_connectives = false;
  bool like = false;
  bool between = false;
  bool in_list = false;
  bool is_null = false;
  bool order_by = false;
  bool limit = false;

  bool aggregate = false;
  bool distinct = false;
  bool group_by = false;
  bool multi_key_group_by = false;
  bool having = false;
  bool arithmetic_expr = false;  // arithmetic or scalar function in a select list

  bool inner_join = false;
  bool outer_join = false;
  bool self_join = false;
  bool non_equi_join = false;
  bool cross_join = false;

  bool scalar_subquery = false;
  bool in_subquery = false;
  bool exists = false;
  bool any_all = false;
  bool derived_table = false;
  bool select_subquery = false;

  bool union_ = false;
  bool intersect = false;
  bool except = false;
  bool case_expr = false;
  bool cte = false;
  bool multi_cte = false;

  bool window_rank = false;
  bool window_agg = false;
  bool partition_by = false;
  bool window_frame = false;
  bool recursive_cte = false;

  int join_table_count = 0;  // most tables in any single FROM clause
  int nesting_depth = 0;     // deepest nested query (CTE bodies count)
  int cte_count = 0;

  bool set_ops() const { return union_ || intersect || except; }
  bool any_window() const { return window_rank || window_agg; }
  bool any_join() const { return inner_join || outer_join || cross_join || join_table_count >= 2; }
  bool nesting() const {
    return scalar_subquery || in_subquery || exists || any_all || derived_table || select_subquery;
  }

  bool operator==(const FeatureSet&) const = default;
};

FeatureSet extract_features(const QueryAst& q);
FeatureSet extract_features(const Query& q);

// Category c1..c6 and subcategory index 1..6; ordered lexicographically,
// which is the complexity order.
struct TaxonomyLabel {
  int category = 1;
  int subcategory = 1;

  auto operator<=>(const TaxonomyLabel&) const = default;

  std::string subcategory_code() const;  // "4.2"
  std::string category_code() const;     // "c4"
  std::string to_string() const;         // "c4 4.2"

  static TaxonomyLabel parse(std::string_view text);  // accepts "4.2" or "c4 4.2"
};

inline constexpr int kCategories = 6;
inline constexpr int kSubcategoriesPerCategory = 6;

struct SubcategoryInfo {
  TaxonomyLabel label;
  std::string_view name;
  std::string_view trigger;
};

// The fixed 36-entry trigger table, in complexity order.
const std::array<SubcategoryInfo, kCategories * kSubcategoriesPerCategory>& taxonomy();
std::string_view category_name(int category);
const SubcategoryInfo& subcategory_info(TaxonomyLabel label);

// Per-subcategory trigger flags for a feature set; entry [c-1][s-1].
std::array<std::array<bool, 6>, 6> triggers(const FeatureSet& f);

TaxonomyLabel classify(const FeatureSet& f);
TaxonomyLabel classify(const QueryAst& q);

}  // namespace sqleval::sql
