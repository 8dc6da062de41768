#include "sqleval/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqleval/errors.hpp"
#include "sqleval/sql/parser.hpp"

using nlohmann::json;

namespace sqleval::metrics {

using data::Cell;
using data::ResultTable;
using data::Row;

const char* to_string(Metric m) {
  switch (m) {
    case Metric::EA: return "EA";
    case Metric::EM: return "EM";
    case Metric::CC: return "CC";
    case Metric::ETC: return "ETC";
    case Metric::TU: return "TU";
  }
  return "?";
}

Metric metric_from_string(const std::string& s) {
  for (auto m : all_metrics())
    if (s == to_string(m)) return m;
  throw ConfigError("unknown metric '" + s + "'");
}

const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> all = {Metric::EA, Metric::EM, Metric::CC, Metric::ETC, Metric::TU};
  return all;
}

json to_json(const MetricOutcome& o) {
  json value;
  if (auto b = std::get_if<bool>(&o.value)) value = *b;
  else if (auto n = std::get_if<std::int64_t>(&o.value)) value = *n;
  json j = {{"metric", to_string(o.metric)}, {"value", value}};
  if (!o.detail.is_null()) j["detail"] = o.detail;
  return j;
}

MetricOutcome outcome_from_json(const json& j) {
  MetricOutcome o;
  o.metric = metric_from_string(j.at("metric").get<std::string>());
  const auto& v = j.at("value");
  if (v.is_boolean()) o.value = v.get<bool>();
  else if (v.is_number_integer()) o.value = v.get<std::int64_t>();
  if (j.contains("detail")) o.detail = j["detail"];
  return o;
}

json to_json(const ComparisonPolicy& p) {
  return {{"order_sensitive_iff_gt_ordered", p.order_sensitive_iff_gt_ordered},
          {"float_rel_tol", p.float_rel_tol},
          {"float_abs_tol", p.float_abs_tol},
          {"null_equals_null", p.null_equals_null},
          {"column_order_sensitive", p.column_order_sensitive}};
}

ComparisonPolicy policy_from_json(const json& j) {
  ComparisonPolicy p;
  p.order_sensitive_iff_gt_ordered = j.value("order_sensitive_iff_gt_ordered", p.order_sensitive_iff_gt_ordered);
  p.float_rel_tol = j.value("float_rel_tol", p.float_rel_tol);
  p.float_abs_tol = j.value("float_abs_tol", p.float_abs_tol);
  p.null_equals_null = j.value("null_equals_null", p.null_equals_null);
  p.column_order_sensitive = j.value("column_order_sensitive", p.column_order_sensitive);
  if (p.float_rel_tol < 0 || p.float_abs_tol < 0) throw ConfigError("comparison tolerances must be non-negative");
  return p;
}

bool cells_equal(const Cell& a, const Cell& b, const ComparisonPolicy& policy) {
  const bool an = data::is_null(a), bn = data::is_null(b);
  if (an || bn) return an && bn && policy.null_equals_null;
  if (data::is_numeric(a) && data::is_numeric(b)) {
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b))
      return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    const double x = data::as_double(a), y = data::as_double(b);
    if (x == y) return true;
    const double diff = std::fabs(x - y);
    return diff <= std::max(policy.float_abs_tol, policy.float_rel_tol * std::max(std::fabs(x), std::fabs(y)));
  }
  return a == b;
}

namespace {

int rank(const Cell& c) {
  switch (c.index()) {
    case 0: return 0;
    case 1:
    case 2: return 1;
    case 3: return 2;
    default: return 3;
  }
}

bool row_less(const Row& a, const Row& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), cell_less);
}

bool rows_equal(const Row& a, const Row& b, const ComparisonPolicy& policy) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!cells_equal(a[i], b[i], policy)) return false;
  return true;
}

bool has_real(const std::vector<Row>& rows) {
  for (const auto& r : rows)
    for (const auto& c : r)
      if (std::holds_alternative<double>(c)) return true;
  return false;
}

bool bags_equal(std::vector<Row> a, std::vector<Row> b, const ComparisonPolicy& policy) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end(), row_less);
  std::sort(b.begin(), b.end(), row_less);
  bool same = true;
  for (std::size_t i = 0; i < a.size() && same; ++i) same = rows_equal(a[i], b[i], policy);
  if (same || !has_real(a) || a.size() > 5000) return same;
  // Tolerance can reorder near-equal reals; fall back to greedy matching.
  std::vector<bool> used(b.size(), false);
  for (const auto& row : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j) {
      if (!used[j] && rows_equal(row, b[j], policy)) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

bool compare_same_layout(const ResultTable& a, const ResultTable& b, const ComparisonPolicy& policy) {
  if (a.columns.size() != b.columns.size()) return false;
  if (b.ordered && policy.order_sensitive_iff_gt_ordered) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i)
      if (!rows_equal(a.rows[i], b.rows[i], policy)) return false;
    return true;
  }
  return bags_equal(a.rows, b.rows, policy);
}

std::vector<Cell> column_values(const ResultTable& t, std::size_t c) {
  std::vector<Cell> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.push_back(r[c]);
  std::sort(out.begin(), out.end(), cell_less);
  return out;
}

}  // namespace

bool cell_less(const Cell& a, const Cell& b) {
  const int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  switch (ra) {
    case 0: return false;
    case 1: {
      if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b))
        return std::get<std::int64_t>(a) < std::get<std::int64_t>(b);
      return data::as_double(a) < data::as_double(b);
    }
    case 2: return std::get<std::string>(a) < std::get<std::string>(b);
    default: return std::get<data::Blob>(a) < std::get<data::Blob>(b);
  }
}

ResultTable permute_columns(const ResultTable& t, const std::vector<std::size_t>& order) {
  ResultTable out;
  out.ordered = t.ordered;
  out.truncated = t.truncated;
  for (auto i : order) out.columns.push_back(t.columns[i]);
  out.rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    Row row;
    row.reserve(order.size());
    for (auto i : order) row.push_back(r[i]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<std::size_t>> matching_column_orders(const ResultTable& a, const ResultTable& b,
                                                             const ComparisonPolicy& policy, std::size_t limit) {
  const std::size_t n = b.columns.size();
  std::vector<std::vector<std::size_t>> out;
  if (a.columns.size() < n || a.rows.size() != b.rows.size()) return out;

  std::vector<std::vector<Cell>> av, bv;
  for (std::size_t i = 0; i < a.columns.size(); ++i) av.push_back(column_values(a, i));
  for (std::size_t i = 0; i < n; ++i) bv.push_back(column_values(b, i));
  // candidates[i]: columns of `a` whose value multiset matches column i of `b`
  std::vector<std::vector<std::size_t>> candidates(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < av.size(); ++j) {
      bool same = av[j].size() == bv[i].size();
      for (std::size_t k = 0; same && k < av[j].size(); ++k) same = cells_equal(av[j][k], bv[i][k], policy);
      if (same) candidates[i].push_back(j);
    }

  std::vector<std::size_t> current;
  std::vector<bool> used(a.columns.size(), false);
  const bool exhaustive = n <= 8;
  std::function<void(std::size_t)> extend = [&](std::size_t i) {
    if (out.size() >= limit) return;
    if (i == n) {
      out.push_back(current);
      return;
    }
    for (auto j : candidates[i]) {
      if (used[j]) continue;
      used[j] = true;
      current.push_back(j);
      extend(i + 1);
      current.pop_back();
      used[j] = false;
      if (!exhaustive && !out.empty()) return;
    }
  };
  extend(0);
  return out;
}

bool compare_result_tables(const ResultTable& a, const ResultTable& b, const ComparisonPolicy& policy) {
  if (a.columns.size() != b.columns.size()) return false;
  if (compare_same_layout(a, b, policy)) return true;
  if (policy.column_order_sensitive) return false;
  for (const auto& order : matching_column_orders(a, b, policy))
    if (compare_same_layout(permute_columns(a, order), b, policy)) return true;
  return false;
}

MetricOutcome execution_accuracy(const ExecOutcome& gen, const ResultTable& gt, const ComparisonPolicy& policy) {
  MetricOutcome o{Metric::EA, false, {}};
  if (!gen.ok()) {
    o.detail = gen.timeout ? "execution timed out" : "execution failed";
    return o;
  }
  o.value = compare_result_tables(*gen.table, gt, policy);
  if (!o.passed()) {
    if (gen.table->columns.size() != gt.columns.size()) o.detail = "column count differs";
    else if (gen.table->rows.size() != gt.rows.size()) o.detail = "row count differs";
    else o.detail = "results differ";
  }
  return o;
}

MetricOutcome exact_match_outcome(const std::string& gen_sql, const std::string& gt_sql, sql::MatchMode mode,
                                  const sql::SchemaInfo* schema) {
  MetricOutcome o{Metric::EM, false, {}};
  sql::QueryAst gen;
  try {
    gen = sql::parse_sql(gen_sql);
  } catch (const Error& e) {
    o.detail = std::string("unparsable: ") + e.what();
    return o;
  }
  try {
    auto r = sql::exact_match(gen, sql::parse_sql(gt_sql), mode, schema);
    o.value = r.match;
    if (!r.match) o.detail = r.diff.to_json();
  } catch (const Error& e) {
    o.detail = std::string("not comparable: ") + e.what();
  }
  return o;
}

MetricOutcome complexity_consistency(const std::optional<sql::TaxonomyLabel>& gen_label,
                                     const sql::TaxonomyLabel& gt_label) {
  MetricOutcome o{Metric::CC, false, {}};
  if (!gen_label) {
    o.detail = "unparsable";
    return o;
  }
  o.value = gen_label->category <= gt_label.category;
  if (!o.passed()) o.detail = gen_label->category_code() + " exceeds " + gt_label.category_code();
  return o;
}

MetricOutcome execution_time_consistency(const data::TimingStats& gen, const data::TimingStats& gt, double tau,
                                         double floor_ms) {
  MetricOutcome o{Metric::ETC, false, {}};
  const double bound = (1.0 + tau) * std::max(gt.median_ms, floor_ms);
  o.detail = {{"gen_ms", gen.median_ms}, {"gt_ms", gt.median_ms}, {"bound_ms", bound}, {"timeout", gen.timeout}};
  o.value = !gen.timeout && gen.median_ms <= bound;
  return o;
}

MetricOutcome token_usage(const gateway::GenerationRecord& rec) {
  MetricOutcome o{Metric::TU, std::int64_t{0}, {}};
  if (rec.input_tokens || rec.output_tokens) {
    o.value = rec.input_tokens.value_or(0) + rec.output_tokens.value_or(0);
    return o;
  }
  const auto chars = static_cast<std::int64_t>(rec.prompt_chars + rec.response_chars);
  o.value = (chars + 3) / 4;
  o.detail = "approximate";
  return o;
}

}  // namespace sqleval::metrics
