#include "sqleval/sql/taxonomy.hpp"

#include <algorithm>
#include <set>

#include "sqleval/errors.hpp"

namespace sqleval::sql {
namespace {

bool is_aggregate_name(const std::string& name) {
  static const std::set<std::string> names = {
      "count", "sum", "avg", "min", "max", "total", "group_concat", "string_agg", "json_group_array",
      "json_group_object", "stddev", "stddev_pop", "stddev_samp", "variance", "var_pop", "var_samp",
      "bit_and", "bit_or", "bit_xor", "array_agg", "median"};
  return names.count(name) > 0;
}

bool is_ranking_name(const std::string& name) {
  static const std::set<std::string> names = {"row_number", "rank",      "dense_rank",  "ntile",
                                              "percent_rank", "cume_dist", "lag",         "lead",
                                              "first_value",  "last_value", "nth_value"};
  return names.count(name) > 0;
}

bool is_aggregate_call(const Expr& e) {
  if (e.kind != ExprKind::function || e.over) return false;
  if (!is_aggregate_name(e.op)) return false;
  // SQLite's multi-argument min/max are scalar.
  if ((e.op == "min" || e.op == "max") && e.args.size() > 1) return false;
  return true;
}

bool is_comparison(const Expr& e) {
  if (e.kind != ExprKind::binary) return false;
  return e.op == "=" || e.op == "<>" || e.op == "<" || e.op == "<=" || e.op == ">" || e.op == ">=" ||
         e.op == "is" || e.op == "is not";
}

bool is_arithmetic(const Expr& e) {
  return e.kind == ExprKind::binary &&
         (e.op == "+" || e.op == "-" || e.op == "*" || e.op == "/" || e.op == "%" || e.op == "||");
}

void count_tables(const TableRef& t, std::vector<std::string>& names, bool& inner, bool& outer, bool& cross,
                  bool& non_equi, bool& derived) {
  switch (t.kind) {
    case TableRef::Kind::table: {
      std::string n = t.name;
      for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      names.push_back(n);
      break;
    }
    case TableRef::Kind::derived:
      names.push_back("(derived)");
      derived = true;
      break;
    case TableRef::Kind::join:
      count_tables(*t.left, names, inner, outer, cross, non_equi, derived);
      count_tables(*t.right, names, inner, outer, cross, non_equi, derived);
      switch (t.join) {
        case JoinKind::inner:
          if (!t.on && t.using_columns.empty() && !t.natural) cross = true;
          else inner = true;
          break;
        case JoinKind::left:
        case JoinKind::right:
        case JoinKind::full:
          outer = true;
          break;
        case JoinKind::cross:
          cross = true;
          break;
      }
      if (t.on) {
        walk_expr(*t.on, [&](const Expr& e) {
          if (e.kind == ExprKind::between) non_equi = true;
          if (e.kind == ExprKind::binary &&
              (e.op == "<" || e.op == "<=" || e.op == ">" || e.op == ">=" || e.op == "<>"))
            non_equi = true;
        });
      }
      break;
  }
}

bool references_table(const Query& q, const std::string& name) {
  bool found = false;
  walk_cores(q, [&](const SelectCore& core, int) {
    std::function<void(const TableRef&)> visit = [&](const TableRef& t) {
      if (t.kind == TableRef::Kind::table) {
        std::string n = t.name;
        for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (n == name) found = true;
      } else if (t.kind == TableRef::Kind::join) {
        visit(*t.left);
        visit(*t.right);
      }
    };
    for (const auto& t : core.from) visit(t);
  });
  return found;
}

class Extractor {
 public:
  FeatureSet f;

  void run(const Query& root) {
    walk_queries(root, [&](const Query& q, int depth, QueryRole) {
      f.nesting_depth = std::max(f.nesting_depth, depth);
      visit_query(q);
    });
  }

 private:
  void visit_query(const Query& q) {
    if (!q.ctes.empty()) {
      f.cte = true;
      f.cte_count += static_cast<int>(q.ctes.size());
      if (q.ctes.size() >= 2) f.multi_cte = true;
      if (q.recursive) {
        for (const auto& cte : q.ctes) {
          std::string n = cte.name;
          for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          if (references_table(*cte.query, n)) f.recursive_cte = true;
        }
      }
    }
    if (!q.order_by.empty()) f.order_by = true;
    if (q.limit) f.limit = true;
    const SelectCore* single = nullptr;
    visit_body(q.body, &single);
    for (const auto& o : q.order_by) scan_general(o.expr, single);
  }

  void visit_body(const QueryBody& b, const SelectCore** single) {
    switch (b.kind) {
      case QueryBody::Kind::select:
        if (single) *single = &b.select;
        visit_core(b.select);
        break;
      case QueryBody::Kind::set_op:
        if (b.op == SetOp::union_) f.union_ = true;
        if (b.op == SetOp::intersect) f.intersect = true;
        if (b.op == SetOp::except) f.except = true;
        visit_body(*b.lhs, nullptr);
        visit_body(*b.rhs, nullptr);
        break;
      case QueryBody::Kind::nested:
        break;  // its own Query node in walk_queries
    }
  }

  void visit_core(const SelectCore& c) {
    for (const auto& item : c.items) {
      if (item.expr.kind == ExprKind::star) f.star_select = true;
      else if (item.expr.kind != ExprKind::literal) f.column_projection = true;
    }
    if (c.distinct) f.distinct = true;

    std::vector<std::string> names;
    bool inner = false, outer = false, cross = false, non_equi = false, derived = false;
    for (const auto& t : c.from) count_tables(t, names, inner, outer, cross, non_equi, derived);
    if (c.from.size() >= 2) inner = true;  // comma join
    f.join_table_count = std::max(f.join_table_count, static_cast<int>(names.size()));
    f.inner_join |= inner;
    f.outer_join |= outer;
    f.cross_join |= cross;
    f.non_equi_join |= non_equi;
    f.derived_table |= derived;
    if (inner || outer) {
      std::vector<std::string> sorted = names;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] == sorted[i - 1] && sorted[i] != "(derived)") f.self_join = true;
      }
    }

    if (!c.group_by.empty()) f.group_by = true;
    if (c.group_by.size() >= 2) f.multi_key_group_by = true;
    if (c.having) f.having = true;

    for (const auto& item : c.items) {
      walk_expr(item.expr, [&](const Expr& e) {
        if (is_arithmetic(e)) f.arithmetic_expr = true;
        if (e.kind == ExprKind::function && !e.over && !is_aggregate_call(e)) f.arithmetic_expr = true;
        if (e.kind == ExprKind::subquery) f.select_subquery = true;
      });
    }
    if (c.where) {
      walk_expr(*c.where, [&](const Expr& e) {
        if (is_comparison(e) || e.kind == ExprKind::quantified) f.comparison = true;
        if ((e.kind == ExprKind::binary && (e.op == "and" || e.op == "or")) ||
            (e.kind == ExprKind::unary && e.op == "not"))
          f.logical_connectives = true;
      });
    }
    for_each_core_expr(c, [&](const Expr& e) { scan_general(e, &c); });
  }

  // Constructs counted wherever they appear in a query level.
  void scan_general(const Expr& root, const SelectCore* core) {
    walk_expr(root, [&](const Expr& e) {
      switch (e.kind) {
        case ExprKind::like: f.like = true; break;
        case ExprKind::between: f.between = true; break;
        case ExprKind::in_list: f.in_list = true; break;
        case ExprKind::is_null: f.is_null = true; break;
        case ExprKind::case_when: f.case_expr = true; break;
        case ExprKind::in_subquery: f.in_subquery = true; break;
        case ExprKind::exists: f.exists = true; break;
        case ExprKind::quantified: f.any_all = true; break;
        case ExprKind::function:
          if (is_aggregate_call(e)) f.aggregate = true;
          if (e.over) window_call(e, core);
          break;
        default:
          break;
      }
    });
    // Scalar subqueries outside the select list.
    bool in_select = false;
    if (core) {
      for (const auto& item : core->items) {
        if (&item.expr == &root) in_select = true;
      }
    }
    if (!in_select) {
      walk_expr(root, [&](const Expr& e) {
        if (e.kind == ExprKind::subquery) f.scalar_subquery = true;
      });
    }
  }

  void window_call(const Expr& e, const SelectCore* core) {
    if (is_ranking_name(e.op)) f.window_rank = true;
    else f.window_agg = true;
    const WindowSpec* spec = e.over.get();
    std::set<std::string> seen;
    while (spec) {
      if (!spec->partition_by.empty()) f.partition_by = true;
      if (spec->frame) f.window_frame = true;
      if (spec->base_name.empty() || !core || !seen.insert(spec->base_name).second) break;
      const WindowSpec* next = nullptr;
      for (const auto& w : core->windows) {
        if (w.name == spec->base_name) next = &w.spec;
      }
      spec = next;
    }
  }
};

}  // namespace

FeatureSet extract_features(const Query& q) {
  Extractor x;
  x.run(q);
  if (x.f.self_join && !(x.f.inner_join || x.f.outer_join)) x.f.self_join = false;
  return x.f;
}

FeatureSet extract_features(const QueryAst& q) { return extract_features(q.root); }

std::string TaxonomyLabel::subcategory_code() const {
  return std::to_string(category) + "." + std::to_string(subcategory);
}
std::string TaxonomyLabel::category_code() const { return "c" + std::to_string(category); }
std::string TaxonomyLabel::to_string() const { return category_code() + " " + subcategory_code(); }

TaxonomyLabel TaxonomyLabel::parse(std::string_view text) {
  std::string s(text);
  if (auto sp = s.find(' '); sp != std::string::npos) s = s.substr(sp + 1);
  const auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= s.size()) throw ConfigError("bad taxonomy label '" + std::string(text) + "'");
  TaxonomyLabel l;
  try {
    l.category = std::stoi(s.substr(0, dot));
    l.subcategory = std::stoi(s.substr(dot + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad taxonomy label '" + std::string(text) + "'");
  }
  if (l.category < 1 || l.category > kCategories || l.subcategory < 1 || l.subcategory > kSubcategoriesPerCategory)
    throw ConfigError("taxonomy label out of range '" + std::string(text) + "'");
  return l;
}

const std::array<SubcategoryInfo, 36>& taxonomy() {
  static const std::array<SubcategoryInfo, 36> table = {{
      {{1, 1}, "star select", "SELECT * with no other construct"},
      {{1, 2}, "column projection", "explicit select-list expressions"},
      {{1, 3}, "comparison predicate", "WHERE contains =, <>, <, <=, >, >=, IS"},
      {{1, 4}, "logical connectives", "WHERE combines predicates with AND, OR or NOT"},
      {{1, 5}, "pattern and membership predicates", "LIKE, BETWEEN, IN (list) or IS [NOT] NULL"},
      {{1, 6}, "ordering and limits", "ORDER BY or LIMIT"},
      {{2, 1}, "aggregate without grouping", "aggregate function and no GROUP BY"},
      {{2, 2}, "distinct", "SELECT DISTINCT"},
      {{2, 3}, "group by one key", "GROUP BY with a single key"},
      {{2, 4}, "group by several keys", "GROUP BY with two or more keys"},
      {{2, 5}, "having", "HAVING clause"},
      {{2, 6}, "expressions over aggregates", "arithmetic or scalar function in SELECT together with aggregation"},
      {{3, 1}, "two-table inner join", "inner join over exactly two tables"},
      {{3, 2}, "multi-table inner join", "inner join over three or more tables"},
      {{3, 3}, "outer join", "LEFT, RIGHT or FULL join"},
      {{3, 4}, "self join", "the same table joined with itself"},
      {{3, 5}, "join with aggregation", "any join together with aggregation or GROUP BY"},
      {{3, 6}, "non-equi or cross join", "join condition other than equality, or CROSS JOIN"},
      {{4, 1}, "scalar subquery", "scalar subquery outside the select list"},
      {{4, 2}, "IN subquery", "[NOT] IN (subquery)"},
      {{4, 3}, "EXISTS subquery", "[NOT] EXISTS (subquery)"},
      {{4, 4}, "quantified subquery", "comparison with ANY, SOME or ALL"},
      {{4, 5}, "derived table", "subquery in FROM"},
      {{4, 6}, "deep nesting", "subquery in the select list, or nesting depth >= 2"},
      {{5, 1}, "union", "UNION or UNION ALL"},
      {{5, 2}, "intersect", "INTERSECT"},
      {{5, 3}, "except", "EXCEPT"},
      {{5, 4}, "case expression", "CASE ... END"},
      {{5, 5}, "single CTE", "WITH with exactly one CTE"},
      {{5, 6}, "multiple CTEs", "two or more CTEs, or a CTE together with a set operator"},
      {{6, 1}, "ranking window", "ranking or navigation window function"},
      {{6, 2}, "aggregate window", "aggregate function with OVER"},
      {{6, 3}, "partitioned window", "OVER (PARTITION BY ...)"},
      {{6, 4}, "window frame", "explicit ROWS, RANGE or GROUPS frame"},
      {{6, 5}, "recursive CTE", "WITH RECURSIVE whose CTE references itself"},
      {{6, 6}, "window with nesting or set operators", "window function together with a subquery or set operator"},
  }};
  return table;
}

std::string_view category_name(int category) {
  static constexpr std::string_view names[] = {"basic single-table", "aggregation", "joins", "nesting",
                                              "set operations and advanced", "windows and recursion"};
  if (category < 1 || category > kCategories) throw ConfigError("category out of range");
  return names[category - 1];
}

const SubcategoryInfo& subcategory_info(TaxonomyLabel label) {
  if (label.category < 1 || label.category > 6 || label.subcategory < 1 || label.subcategory > 6)
    throw ConfigError("taxonomy label out of range");
  return taxonomy()[static_cast<std::size_t>((label.category - 1) * 6 + (label.subcategory - 1))];
}

std::array<std::array<bool, 6>, 6> triggers(const FeatureSet& f) {
  std::array<std::array<bool, 6>, 6> t{};
  t[0] = {f.star_select, f.column_projection, f.comparison, f.logical_connectives,
          f.like || f.between || f.in_list || f.is_null, f.order_by || f.limit};
  t[1] = {f.aggregate && !f.group_by,   f.distinct, f.group_by && !f.multi_key_group_by, f.multi_key_group_by,
          f.having, f.arithmetic_expr && f.aggregate};
  const bool join = f.any_join();
  t[2] = {f.inner_join && f.join_table_count == 2,
          f.inner_join && f.join_table_count >= 3,
          f.outer_join,
          f.self_join,
          join && (f.aggregate || f.group_by),
          f.non_equi_join || f.cross_join};
  t[3] = {f.scalar_subquery, f.in_subquery, f.exists, f.any_all, f.derived_table,
          f.select_subquery || f.nesting_depth >= 2};
  t[4] = {f.union_, f.intersect, f.except, f.case_expr, f.cte && !f.multi_cte, f.multi_cte || (f.cte && f.set_ops())};
  t[5] = {f.window_rank,   f.window_agg,    f.partition_by,
          f.window_frame,  f.recursive_cte, f.any_window() && (f.nesting() || f.set_ops())};
  return t;
}

TaxonomyLabel classify(const FeatureSet& f) {
  const auto t = triggers(f);
  for (int c = kCategories; c >= 2; --c) {
    for (int s = kSubcategoriesPerCategory; s >= 1; --s) {
      if (t[c - 1][s - 1]) return {c, s};
    }
  }
  for (int s = kSubcategoriesPerCategory; s >= 1; --s) {
    if (t[0][s - 1]) return {1, s};
  }
  return {1, 1};
}

TaxonomyLabel classify(const QueryAst& q) { return classify(extract_features(q)); }

}  // namespace sqleval::sql
