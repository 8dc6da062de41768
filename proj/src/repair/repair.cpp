#include "sqleval/repair/repair.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "sqleval/errors.hpp"

using nlohmann::json;

namespace sqleval::repair {

using data::Cell;
using data::ResultTable;
using data::Row;

namespace {

const char* kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::column_reorder: return "column_reorder";
    case TransformKind::column_project: return "column_project";
    case TransformKind::row_dedup: return "row_dedup";
    case TransformKind::ignore_order: return "ignore_order";
    case TransformKind::round_values: return "round_values";
    case TransformKind::limit_truncate: return "limit_truncate";
  }
  return "?";
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Order of `r`'s columns matching `gt`'s names case-insensitively, if every
// gt column name occurs exactly once in r.
std::optional<std::vector<std::size_t>> order_by_name(const ResultTable& r, const ResultTable& gt) {
  std::map<std::string, std::vector<std::size_t>> where;
  for (std::size_t i = 0; i < r.columns.size(); ++i) where[lower(r.columns[i])].push_back(i);
  std::vector<std::size_t> order;
  for (const auto& c : gt.columns) {
    auto it = where.find(lower(c));
    if (it == where.end() || it->second.size() != 1) return std::nullopt;
    order.push_back(it->second[0]);
  }
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return std::nullopt;
  return order;
}

bool is_identity(const std::vector<std::size_t>& order, std::size_t width) {
  if (order.size() != width) return false;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) return false;
  return true;
}

// Candidate column orders: name-based first, then value-based.
std::vector<std::vector<std::size_t>> column_candidates(const ResultTable& r, const ResultTable& gt) {
  std::vector<std::vector<std::size_t>> out;
  if (auto by_name = order_by_name(r, gt)) out.push_back(*by_name);
  for (auto& o : metrics::matching_column_orders(r, gt, {}))
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(std::move(o));
  return out;
}

bool row_less(const Row& a, const Row& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), metrics::cell_less);
}

Cell round_cell(const Cell& c, int digits) {
  if (auto d = std::get_if<double>(&c)) {
    const double scale = std::pow(10.0, digits);
    return std::round(*d * scale) / scale;
  }
  return c;
}

bool rounding_changes(const ResultTable& t, int digits) {
  for (const auto& r : t.rows)
    for (const auto& c : r)
      if (std::holds_alternative<double>(c) && !(round_cell(c, digits) == c)) return true;
  return false;
}

ResultTable rounded(const ResultTable& t, int digits) {
  ResultTable out = t;
  for (auto& r : out.rows)
    for (auto& c : r) c = round_cell(c, digits);
  return out;
}

}  // namespace

std::string Transform::name() const {
  if (kind == TransformKind::round_values) return "round_values(" + std::to_string(digits) + ")";
  return kind_name(kind);
}

std::string Transform::fix_text() const {
  switch (kind) {
    case TransformKind::column_reorder: return "reorder the SELECT columns";
    case TransformKind::column_project: return "drop the extra SELECT columns";
    case TransformKind::row_dedup: return "add DISTINCT";
    case TransformKind::ignore_order: return "add matching ORDER BY";
    case TransformKind::round_values: return "round numeric output to " + std::to_string(digits) + " decimals";
    case TransformKind::limit_truncate: return "add a LIMIT";
  }
  return "";
}

const std::vector<Transform>& transform_catalog() {
  static const std::vector<Transform> catalog = {
      {TransformKind::column_reorder, 0, {}}, {TransformKind::column_project, 0, {}},
      {TransformKind::row_dedup, 0, {}},      {TransformKind::ignore_order, 0, {}},
      {TransformKind::round_values, 4, {}},   {TransformKind::round_values, 2, {}},
      {TransformKind::round_values, 0, {}},   {TransformKind::limit_truncate, 0, {}},
  };
  return catalog;
}

json to_json(const Transform& t) {
  json j = {{"kind", kind_name(t.kind)}};
  if (t.kind == TransformKind::round_values) j["digits"] = t.digits;
  if (!t.columns.empty()) j["columns"] = t.columns;
  return j;
}

Transform transform_from_json(const json& j) {
  Transform t;
  const auto kind = j.at("kind").get<std::string>();
  bool found = false;
  for (const auto& c : transform_catalog())
    if (kind == kind_name(c.kind)) {
      t.kind = c.kind;
      found = true;
    }
  if (!found) throw ConfigError("unknown transform '" + kind + "'");
  t.digits = j.value("digits", 0);
  if (j.contains("columns")) t.columns = j["columns"].get<std::vector<std::size_t>>();
  return t;
}

RepairState apply_transform(const RepairState& s, Transform& t) {
  RepairState out = s;
  switch (t.kind) {
    case TransformKind::column_reorder: {
      if (s.gen.columns.size() != s.gt.columns.size()) throw NotApplicable("column counts differ");
      const auto candidates = column_candidates(s.gen, s.gt);
      const std::vector<std::size_t>* chosen = nullptr;
      for (const auto& c : candidates) {
        if (is_identity(c, s.gen.columns.size())) continue;
        if (!chosen) chosen = &c;
        if (metrics::compare_result_tables(metrics::permute_columns(s.gen, c), s.gt)) {
          chosen = &c;
          break;
        }
      }
      if (!chosen) throw NotApplicable("no column permutation matches");
      t.columns = *chosen;
      out.gen = metrics::permute_columns(s.gen, *chosen);
      break;
    }
    case TransformKind::column_project: {
      if (s.gen.columns.size() <= s.gt.columns.size()) throw NotApplicable("no extra columns");
      const auto candidates = column_candidates(s.gen, s.gt);
      if (candidates.empty()) throw NotApplicable("no column subset matches");
      const std::vector<std::size_t>* chosen = &candidates.front();
      for (const auto& c : candidates)
        if (metrics::compare_result_tables(metrics::permute_columns(s.gen, c), s.gt)) {
          chosen = &c;
          break;
        }
      t.columns = *chosen;
      out.gen = metrics::permute_columns(s.gen, *chosen);
      break;
    }
    case TransformKind::row_dedup: {
      std::vector<Row> seen;
      std::vector<Row> kept;
      for (const auto& r : s.gen.rows) {
        auto it = std::lower_bound(seen.begin(), seen.end(), r, row_less);
        if (it != seen.end() && !row_less(r, *it)) continue;
        seen.insert(it, r);
        kept.push_back(r);
      }
      if (kept.size() == s.gen.rows.size()) throw NotApplicable("no duplicate rows");
      out.gen.rows = std::move(kept);
      break;
    }
    case TransformKind::ignore_order:
      if (!s.gt.ordered) throw NotApplicable("reference is unordered");
      out.gt.ordered = false;
      out.gen.ordered = false;
      break;
    case TransformKind::round_values:
      if (!rounding_changes(s.gen, t.digits) && !rounding_changes(s.gt, t.digits))
        throw NotApplicable("nothing to round");
      out.gen = rounded(s.gen, t.digits);
      out.gt = rounded(s.gt, t.digits);
      break;
    case TransformKind::limit_truncate:
      if (s.gen.rows.size() <= s.gt.rows.size()) throw NotApplicable("no surplus rows");
      out.gen.rows.resize(s.gt.rows.size());
      break;
  }
  return out;
}

ResultTable apply_transform(const ResultTable& r, Transform t, const ResultTable& gt) {
  return apply_transform(RepairState{r, gt}, t).gen;
}

json to_json(const RepairSuggestion& s) {
  json ts = json::array();
  for (const auto& t : s.transforms) ts.push_back(to_json(t));
  return {{"dp_id", s.dp_id}, {"model_id", s.model_id}, {"transforms", ts}, {"fix", s.fix_text}};
}

RepairSuggestion suggestion_from_json(const json& j) {
  RepairSuggestion s;
  s.dp_id = j.value("dp_id", "");
  s.model_id = j.value("model_id", "");
  for (const auto& t : j.at("transforms")) s.transforms.push_back(transform_from_json(t));
  s.fix_text = j.value("fix", "");
  return s;
}

namespace {

RepairSuggestion make_suggestion(std::vector<Transform> seq) {
  RepairSuggestion s;
  for (const auto& t : seq) s.fix_text += (s.fix_text.empty() ? "" : "; then ") + t.fix_text();
  s.transforms = std::move(seq);
  return s;
}

}  // namespace

std::vector<RepairSuggestion> suggest_repairs(const ResultTable& gen, const ResultTable& gt,
                                              const metrics::ComparisonPolicy& policy, int max_depth) {
  std::vector<RepairSuggestion> found;
  if (metrics::compare_result_tables(gen, gt, policy)) return found;

  struct Node {
    RepairState state;
    std::vector<Transform> seq;
  };
  std::vector<Node> frontier{{RepairState{gen, gt}, {}}};
  for (int depth = 1; depth <= max_depth && found.empty(); ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      for (const auto& proto : transform_catalog()) {
        bool repeated = false;
        for (const auto& prev : node.seq) repeated |= prev.same_step(proto);
        if (repeated) continue;
        Transform t = proto;
        RepairState s;
        try {
          s = apply_transform(node.state, t);
        } catch (const NotApplicable&) {
          continue;
        }
        auto seq = node.seq;
        seq.push_back(std::move(t));
        if (metrics::compare_result_tables(s.gen, s.gt, policy)) found.push_back(make_suggestion(seq));
        else next.push_back({std::move(s), std::move(seq)});
      }
    }
    frontier = std::move(next);
  }
  return found;
}

bool verify_suggestion(const ResultTable& gen, const ResultTable& gt, const RepairSuggestion& s,
                       const metrics::ComparisonPolicy& policy) {
  RepairState state{gen, gt};
  try {
    for (const auto& proto : s.transforms) {
      Transform t = proto;
      state = apply_transform(state, t);
    }
  } catch (const NotApplicable&) {
    return false;
  }
  return metrics::compare_result_tables(state.gen, state.gt, policy);
}

}  // namespace sqleval::repair
