#include "sqleval/sql/exact_match.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "sqleval/errors.hpp"
#include "sqleval/sql/render.hpp"

namespace sqleval::sql {

const char* to_string(MatchMode m) { return m == MatchMode::strict ? "strict" : "spider_compatible"; }

MatchMode match_mode_from_string(const std::string& s) {
  if (s == "strict") return MatchMode::strict;
  if (s == "spider" || s == "spider_compatible") return MatchMode::spider_compatible;
  throw ConfigError("unknown exact-match mode '" + s + "'");
}

namespace {

using Components = std::map<std::string, std::vector<std::string>>;

std::vector<std::string> conjuncts(const Expr& e) {
  std::vector<std::string> out;
  if (e.kind == ExprKind::binary && e.op == "and") {
    for (const auto& a : e.args) out.push_back(render(a));
  } else {
    out.push_back(render(e));
  }
  return out;
}

void sort_all(Components& c) {
  for (auto& [name, values] : c) {
    if (name.size() >= 8 && name.compare(name.size() - 8, 8, "order-by") == 0) continue;
    std::sort(values.begin(), values.end());
  }
}

void collect_tables(const TableRef& t, const std::string& how, Components& c, const std::string& prefix) {
  switch (t.kind) {
    case TableRef::Kind::table:
      c[prefix + "from-tables"].push_back(how + t.name + (t.alias.empty() ? "" : " AS " + t.alias));
      break;
    case TableRef::Kind::derived:
      c[prefix + "from-tables"].push_back(how + "(" + render(*t.subquery) + ") AS " + t.alias);
      break;
    case TableRef::Kind::join: {
      collect_tables(*t.left, how, c, prefix);
      std::string kind = t.natural ? "natural " : "";
      switch (t.join) {
        case JoinKind::inner: kind += "inner:"; break;
        case JoinKind::left: kind += "left:"; break;
        case JoinKind::right: kind += "right:"; break;
        case JoinKind::full: kind += "full:"; break;
        case JoinKind::cross: kind += "cross:"; break;
      }
      collect_tables(*t.right, kind, c, prefix);
      if (t.on) {
        for (auto& s : conjuncts(*t.on)) c[prefix + "join-conditions"].push_back(std::move(s));
      }
      for (const auto& u : t.using_columns) c[prefix + "join-conditions"].push_back("using " + u);
      break;
    }
  }
}

void collect_query(const Query& q, const std::string& prefix, Components& c);

void collect_body(const QueryBody& b, const std::string& prefix, Components& c) {
  switch (b.kind) {
    case QueryBody::Kind::select: {
      const SelectCore& core = b.select;
      auto& items = c[prefix + "select-items"];
      for (const auto& item : core.items) items.push_back(render(item.expr));
      c[prefix + "distinct"].push_back(core.distinct ? "distinct" : "all");
      c[prefix + "from-tables"];
      c[prefix + "join-conditions"];
      for (const auto& t : core.from) collect_tables(t, "", c, prefix);
      auto& where = c[prefix + "where-conjuncts"];
      if (core.where) where = conjuncts(*core.where);
      auto& group = c[prefix + "group-by"];
      for (const auto& g : core.group_by) group.push_back(render(g));
      auto& having = c[prefix + "having-conjuncts"];
      if (core.having) having = conjuncts(*core.having);
      for (const auto& w : core.windows) {
        NamedWindow copy = w;
        Expr holder;
        holder.kind = ExprKind::function;
        holder.op = "window";
        holder.over = copy.spec;
        c[prefix + "windows"].push_back(w.name + " " + render(holder));
      }
      break;
    }
    case QueryBody::Kind::set_op: {
      std::string op = b.op == SetOp::union_ ? "union" : b.op == SetOp::intersect ? "intersect" : "except";
      if (b.all) op += " all";
      c[prefix + "set-operators"].push_back(op);
      collect_body(*b.lhs, prefix + "left.", c);
      collect_body(*b.rhs, prefix + "right.", c);
      break;
    }
    case QueryBody::Kind::nested:
      collect_query(*b.nested, prefix + "nested.", c);
      break;
  }
}

void collect_query(const Query& q, const std::string& prefix, Components& c) {
  auto& ctes = c[prefix + "ctes"];
  for (const auto& cte : q.ctes) {
    std::string cols;
    for (const auto& col : cte.columns) cols += (cols.empty() ? "" : ",") + col;
    ctes.push_back(std::string(q.recursive ? "recursive " : "") + cte.name + "(" + cols + ") AS " +
                   render(*cte.query));
  }
  auto& order = c[prefix + "order-by"];
  for (const auto& o : q.order_by) {
    std::string s = render(o.expr) + (o.descending ? " desc" : " asc");
    if (o.nulls == NullsOrder::first) s += " nulls first";
    if (o.nulls == NullsOrder::last) s += " nulls last";
    order.push_back(std::move(s));
  }
  auto& limit = c[prefix + "limit"];
  if (q.limit) limit.push_back("limit " + render(*q.limit));
  if (q.offset) limit.push_back("offset " + render(*q.offset));
  collect_body(q.body, prefix, c);
}

void strip_expr(Expr& e);

void strip_query(Query& q);

void strip_table(TableRef& t) {
  if (t.subquery) strip_query(*t.subquery);
  if (t.left) strip_table(*t.left);
  if (t.right) strip_table(*t.right);
  if (t.on) strip_expr(*t.on);
}

void strip_window(WindowSpec& w) {
  for (auto& p : w.partition_by) strip_expr(p);
  for (auto& o : w.order_by) strip_expr(o.expr);
  if (w.frame) {
    if (w.frame->start.offset) strip_expr(*w.frame->start.offset);
    if (w.frame->end && w.frame->end->offset) strip_expr(*w.frame->end->offset);
  }
}

void strip_expr(Expr& e) {
  if (e.kind == ExprKind::literal && e.literal != LiteralKind::null) {
    e.literal = LiteralKind::placeholder;
    e.value = "?";
  }
  for (auto& a : e.args) strip_expr(a);
  if (e.subquery) strip_query(*e.subquery);
  if (e.over) strip_window(*e.over);
}

void strip_body(QueryBody& b) {
  switch (b.kind) {
    case QueryBody::Kind::select: {
      SelectCore& c = b.select;
      for (auto& item : c.items) strip_expr(item.expr);
      for (auto& t : c.from) strip_table(t);
      if (c.where) strip_expr(*c.where);
      for (auto& g : c.group_by) strip_expr(g);
      if (c.having) strip_expr(*c.having);
      for (auto& w : c.windows) strip_window(w.spec);
      break;
    }
    case QueryBody::Kind::set_op:
      strip_body(*b.lhs);
      strip_body(*b.rhs);
      break;
    case QueryBody::Kind::nested:
      strip_query(*b.nested);
      break;
  }
}

void strip_query(Query& q) {
  for (auto& cte : q.ctes) strip_query(*cte.query);
  strip_body(q.body);
  for (auto& o : q.order_by) strip_expr(o.expr);
  if (q.limit) strip_expr(*q.limit);
  if (q.offset) strip_expr(*q.offset);
}

}  // namespace

Query strip_values(Query q) {
  strip_query(q);
  return q;
}

MatchResult exact_match(const NormalizedAst& gen, const NormalizedAst& gt, MatchMode mode, const SchemaInfo* schema) {
  NormalizedAst a = gen;
  NormalizedAst b = gt;
  if (mode == MatchMode::spider_compatible) {
    // Operand order may have depended on the values; normalize again.
    a.ast.root = strip_values(std::move(a.ast.root));
    b.ast.root = strip_values(std::move(b.ast.root));
    a = normalize(a, schema);
    b = normalize(b, schema);
  }
  Components ca, cb;
  collect_query(a.ast.root, "", ca);
  collect_query(b.ast.root, "", cb);
  sort_all(ca);
  sort_all(cb);

  MatchResult r;
  std::map<std::string, bool> names;
  for (const auto& [k, v] : ca) names[k] = true;
  for (const auto& [k, v] : cb) names[k] = true;
  for (const auto& [name, _] : names) {
    auto ia = ca.find(name);
    auto ib = cb.find(name);
    const std::vector<std::string> empty;
    const auto& va = ia == ca.end() ? empty : ia->second;
    const auto& vb = ib == cb.end() ? empty : ib->second;
    if (va != vb) r.diff.components.push_back(name);
  }
  r.match = r.diff.empty();
  return r;
}

MatchResult exact_match(const QueryAst& gen, const QueryAst& gt, MatchMode mode, const SchemaInfo* schema) {
  return exact_match(normalize(gen, schema), normalize(gt, schema), mode, schema);
}

std::uint64_t ast_fingerprint(const NormalizedAst& n) {
  const std::string text = render(n.ast.root);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

}  // namespace sqleval::sql
