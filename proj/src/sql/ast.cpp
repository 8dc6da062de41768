#include "sqleval/sql/ast.hpp"

#include "sqleval/errors.hpp"

namespace sqleval::sql {

const char* to_string(Dialect d) { return d == Dialect::mysql ? "mysql" : "sqlite"; }

Dialect dialect_from_string(const std::string& s) {
  if (s == "sqlite") return Dialect::sqlite;
  if (s == "mysql") return Dialect::mysql;
  throw ConfigError("unknown dialect '" + s + "'");
}

namespace {

void walk_body(const QueryBody& b, int depth, const std::function<void(const Query&, int, QueryRole)>& fn);
void walk_query(const Query& q, int depth, QueryRole role, const std::function<void(const Query&, int, QueryRole)>& fn);

void walk_expr_queries(const Expr& e, int depth, const std::function<void(const Query&, int, QueryRole)>& fn) {
  walk_expr(e, [&](const Expr& sub) {
    if (sub.subquery) walk_query(*sub.subquery, depth + 1, QueryRole::expression, fn);
  });
}

void walk_table_queries(const TableRef& t, int depth, const std::function<void(const Query&, int, QueryRole)>& fn) {
  switch (t.kind) {
    case TableRef::Kind::table:
      break;
    case TableRef::Kind::derived:
      walk_query(*t.subquery, depth + 1, QueryRole::derived_table, fn);
      break;
    case TableRef::Kind::join:
      walk_table_queries(*t.left, depth, fn);
      walk_table_queries(*t.right, depth, fn);
      if (t.on) walk_expr_queries(*t.on, depth, fn);
      break;
  }
}

void walk_core(const SelectCore& c, int depth, const std::function<void(const Query&, int, QueryRole)>& fn) {
  for (const auto& item : c.items) walk_expr_queries(item.expr, depth, fn);
  for (const auto& t : c.from) walk_table_queries(t, depth, fn);
  if (c.where) walk_expr_queries(*c.where, depth, fn);
  for (const auto& g : c.group_by) walk_expr_queries(g, depth, fn);
  if (c.having) walk_expr_queries(*c.having, depth, fn);
  for (const auto& w : c.windows) {
    for (const auto& p : w.spec.partition_by) walk_expr_queries(p, depth, fn);
    for (const auto& o : w.spec.order_by) walk_expr_queries(o.expr, depth, fn);
  }
}

void walk_body(const QueryBody& b, int depth, const std::function<void(const Query&, int, QueryRole)>& fn) {
  switch (b.kind) {
    case QueryBody::Kind::select:
      walk_core(b.select, depth, fn);
      break;
    case QueryBody::Kind::set_op:
      walk_body(*b.lhs, depth, fn);
      walk_body(*b.rhs, depth, fn);
      break;
    case QueryBody::Kind::nested:
      // A parenthesized set-op operand is part of the same query level.
      walk_query(*b.nested, depth, QueryRole::top, fn);
      break;
  }
}

void walk_query(const Query& q, int depth, QueryRole role, const std::function<void(const Query&, int, QueryRole)>& fn) {
  fn(q, depth, role);
  for (const auto& cte : q.ctes) walk_query(*cte.query, depth + 1, QueryRole::cte, fn);
  walk_body(q.body, depth, fn);
  for (const auto& o : q.order_by) walk_expr_queries(o.expr, depth, fn);
  if (q.limit) walk_expr_queries(*q.limit, depth, fn);
  if (q.offset) walk_expr_queries(*q.offset, depth, fn);
}

void cores_of_body(const QueryBody& b, int depth, const std::function<void(const SelectCore&, int)>& fn) {
  switch (b.kind) {
    case QueryBody::Kind::select:
      fn(b.select, depth);
      break;
    case QueryBody::Kind::set_op:
      cores_of_body(*b.lhs, depth, fn);
      cores_of_body(*b.rhs, depth, fn);
      break;
    case QueryBody::Kind::nested:
      break;  // visited as its own query by walk_queries
  }
}

}  // namespace

void walk_queries(const Query& q, const std::function<void(const Query&, int, QueryRole)>& fn) {
  walk_query(q, 0, QueryRole::top, fn);
}

void walk_cores(const Query& q, const std::function<void(const SelectCore&, int)>& fn) {
  walk_queries(q, [&](const Query& sub, int depth, QueryRole) { cores_of_body(sub.body, depth, fn); });
}

void walk_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  for (const auto& a : e.args) walk_expr(a, fn);
  if (e.over) {
    for (const auto& p : e.over->partition_by) walk_expr(p, fn);
    for (const auto& o : e.over->order_by) walk_expr(o.expr, fn);
    if (e.over->frame) {
      if (e.over->frame->start.offset) walk_expr(*e.over->frame->start.offset, fn);
      if (e.over->frame->end && e.over->frame->end->offset) walk_expr(*e.over->frame->end->offset, fn);
    }
  }
}

namespace {
void table_exprs(const TableRef& t, const std::function<void(const Expr&)>& fn) {
  if (t.kind != TableRef::Kind::join) return;
  table_exprs(*t.left, fn);
  table_exprs(*t.right, fn);
  if (t.on) fn(*t.on);
}
}  // namespace

void for_each_core_expr(const SelectCore& core, const std::function<void(const Expr&)>& fn) {
  for (const auto& item : core.items) fn(item.expr);
  for (const auto& t : core.from) table_exprs(t, fn);
  if (core.where) fn(*core.where);
  for (const auto& g : core.group_by) fn(g);
  if (core.having) fn(*core.having);
  for (const auto& w : core.windows) {
    for (const auto& p : w.spec.partition_by) fn(p);
    for (const auto& o : w.spec.order_by) fn(o.expr);
  }
}

}  // namespace sqleval::sql
