#include "sqleval/sql/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "sqleval/errors.hpp"
#include "sqleval/sql/render.hpp"

namespace sqleval::sql {
namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_symmetric(const std::string& op) { return op == "=" || op == "<>" || op == "is" || op == "is not"; }

std::string flipped(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  if (op == ">=") return "<=";
  return op;
}

std::string key(const Expr& e) { return render(e); }

// Output column names of a query, when they can be known without a schema.
std::optional<std::vector<std::string>> output_columns(const Query& q) {
  const QueryBody* b = &q.body;
  while (b->kind != QueryBody::Kind::select) {
    if (b->kind == QueryBody::Kind::set_op) b = b->lhs.get();
    else return output_columns(*b->nested);
  }
  std::vector<std::string> cols;
  for (const auto& item : b->select.items) {
    if (!item.alias.empty()) cols.push_back(lower(item.alias));
    else if (item.expr.kind == ExprKind::column) cols.push_back(lower(item.expr.op));
    else if (item.expr.kind == ExprKind::star) return std::nullopt;
    else cols.push_back(lower(render(item.expr)));
  }
  return cols;
}

struct Entry {
  std::string ref_name;   // how the query refers to it: alias, else table name
  std::string canonical;  // qualifier written into the normalized tree
  std::string base;       // underlying table name ("" for derived tables)
  std::optional<std::vector<std::string>> columns;
};

struct Scope {
  std::vector<Entry> entries;
  const Scope* parent = nullptr;
};

using CteEnv = std::map<std::string, std::optional<std::vector<std::string>>>;

enum class Clause { select, where, group_by, having, other };

class Normalizer {
 public:
  explicit Normalizer(const SchemaInfo* schema) : schema_(schema) {}

  std::map<std::string, std::string> alias_map;

  void query(Query& q, const Scope* parent, CteEnv env, bool top) {
    for (auto& cte : q.ctes) {
      cte.name = lower(cte.name);
      for (auto& c : cte.columns) c = lower(c);
      if (q.recursive) {
        env[cte.name] = cte.columns.empty() ? std::nullopt : std::optional(cte.columns);
      }
      query(*cte.query, parent, env, false);
      if (!cte.columns.empty()) env[cte.name] = cte.columns;
      else env[cte.name] = output_columns(*cte.query);
    }
    const SelectCore* single = nullptr;
    Scope single_scope;
    body(q.body, parent, env, &single, &single_scope);

    // ORDER BY may name a select alias or an output position.
    for (auto& item : q.order_by) {
      if (single) {
        if (auto sub = alias_or_position(item.expr, *single)) {
          item.expr = *sub;
          continue;
        }
        expr(item.expr, single_scope, env, Clause::other, single);
      } else {
        lower_bare(item.expr);
        expr_shape(item.expr);
      }
    }
    if (q.limit) expr(*q.limit, Scope{{}, parent}, env, Clause::other, nullptr);
    if (q.offset) expr(*q.offset, Scope{{}, parent}, env, Clause::other, nullptr);

    if (top) drop_aliases(q.body);
  }

 private:
  void drop_aliases(QueryBody& b) {
    switch (b.kind) {
      case QueryBody::Kind::select:
        for (auto& item : b.select.items) item.alias.clear();
        break;
      case QueryBody::Kind::set_op:
        drop_aliases(*b.lhs);
        drop_aliases(*b.rhs);
        break;
      case QueryBody::Kind::nested:
        break;
    }
  }

  // Lowercases names in an expression that cannot be resolved against a
  // single FROM scope (ORDER BY of a compound query).
  void lower_bare(Expr& e) {
    if (e.kind == ExprKind::column || e.kind == ExprKind::star) {
      e.op = lower(e.op);
      e.qualifier = lower(e.qualifier);
    }
    for (auto& a : e.args) lower_bare(a);
  }

  std::optional<Expr> alias_or_position(const Expr& e, const SelectCore& core) {
    if (e.kind == ExprKind::literal && e.literal == LiteralKind::integer) {
      std::size_t pos = 0;
      try {
        pos = std::stoul(e.value);
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (pos >= 1 && pos <= core.items.size() && core.items[pos - 1].expr.kind != ExprKind::star)
        return core.items[pos - 1].expr;
      return std::nullopt;
    }
    if (e.kind != ExprKind::column || !e.qualifier.empty()) return std::nullopt;
    const std::string name = lower(e.op);
    for (const auto& item : core.items) {
      if (!item.alias.empty() && lower(item.alias) == name) return item.expr;
    }
    return std::nullopt;
  }

  void body(QueryBody& b, const Scope* parent, const CteEnv& env, const SelectCore** single, Scope* single_scope) {
    switch (b.kind) {
      case QueryBody::Kind::select: {
        Scope scope = core(b.select, parent, env);
        if (single) {
          *single = &b.select;
          *single_scope = std::move(scope);
        }
        break;
      }
      case QueryBody::Kind::set_op:
        body(*b.lhs, parent, env, nullptr, nullptr);
        body(*b.rhs, parent, env, nullptr, nullptr);
        break;
      case QueryBody::Kind::nested:
        query(*b.nested, parent, env, false);
        break;
    }
  }

  void add_tables(TableRef& t, Scope& scope, const Scope* parent, const CteEnv& env, int& derived_counter) {
    switch (t.kind) {
      case TableRef::Kind::table: {
        Entry e;
        e.base = lower(t.name);
        int seen = 0;
        for (const auto& other : scope.entries) {
          if (other.base == e.base) ++seen;
        }
        e.canonical = seen == 0 ? e.base : e.base + "_" + std::to_string(seen + 1);
        e.ref_name = t.alias.empty() ? e.base : lower(t.alias);
        if (auto it = env.find(e.base); it != env.end()) {
          e.columns = it->second;
        } else if (schema_) {
          if (auto it2 = schema_->find(e.base); it2 != schema_->end()) e.columns = it2->second;
        }
        if (!t.alias.empty()) alias_map[lower(t.alias)] = e.base;
        t.name = e.base;
        t.alias = e.canonical == e.base ? "" : e.canonical;
        scope.entries.push_back(std::move(e));
        break;
      }
      case TableRef::Kind::derived: {
        query(*t.subquery, parent, env, false);
        Entry e;
        e.canonical = "_sub" + std::to_string(++derived_counter);
        e.ref_name = t.alias.empty() ? e.canonical : lower(t.alias);
        e.columns = output_columns(*t.subquery);
        if (!t.alias.empty()) alias_map[lower(t.alias)] = e.canonical;
        t.alias = e.canonical;
        scope.entries.push_back(std::move(e));
        break;
      }
      case TableRef::Kind::join:
        add_tables(*t.left, scope, parent, env, derived_counter);
        add_tables(*t.right, scope, parent, env, derived_counter);
        for (auto& c : t.using_columns) c = lower(c);
        break;
    }
  }

  void join_conditions(TableRef& t, const Scope& scope, const CteEnv& env, const SelectCore* core) {
    if (t.kind != TableRef::Kind::join) return;
    join_conditions(*t.left, scope, env, core);
    join_conditions(*t.right, scope, env, core);
    if (t.on) expr(*t.on, scope, env, Clause::other, core);
  }

  Scope core(SelectCore& c, const Scope* parent, const CteEnv& env) {
    Scope scope;
    scope.parent = parent;
    int derived_counter = 0;
    for (auto& t : c.from) add_tables(t, scope, parent, env, derived_counter);
    for (auto& t : c.from) join_conditions(t, scope, env, &c);

    for (auto& w : c.windows) {
      w.name = lower(w.name);
      window(w.spec, scope, env, &c);
    }
    // Substitutions read the original select expressions, so resolve the
    // select list last.
    if (c.where) expr(*c.where, scope, env, Clause::where, &c);
    for (auto& g : c.group_by) {
      if (auto sub = alias_substitute(g, scope, c)) g = *sub;
      expr(g, scope, env, Clause::group_by, &c);
    }
    if (c.having) {
      substitute_aliases(*c.having, scope, c);
      expr(*c.having, scope, env, Clause::having, &c);
    }
    for (auto& item : c.items) {
      item.alias = lower(item.alias);
      expr(item.expr, scope, env, Clause::select, &c);
    }
    return scope;
  }

  // A bare name that is a select alias and not a resolvable column.
  std::optional<Expr> alias_substitute(const Expr& e, const Scope& scope, const SelectCore& c) {
    if (e.kind != ExprKind::column || !e.qualifier.empty()) return std::nullopt;
    const std::string name = lower(e.op);
    const SelectItem* match = nullptr;
    for (const auto& item : c.items) {
      if (!item.alias.empty() && lower(item.alias) == name) match = &item;
    }
    if (!match) return std::nullopt;
    if (match->expr.kind == ExprKind::column && lower(match->expr.op) == name) return std::nullopt;
    for (const Scope* s = &scope; s; s = s->parent) {
      for (const auto& entry : s->entries) {
        if (entry.columns && std::find(entry.columns->begin(), entry.columns->end(), name) != entry.columns->end())
          return std::nullopt;
      }
    }
    return match->expr;
  }

  void substitute_aliases(Expr& e, const Scope& scope, const SelectCore& c) {
    if (auto sub = alias_substitute(e, scope, c)) {
      e = *sub;
      return;
    }
    for (auto& a : e.args) substitute_aliases(a, scope, c);
  }

  void window(WindowSpec& w, const Scope& scope, const CteEnv& env, const SelectCore* c) {
    w.base_name = lower(w.base_name);
    for (auto& p : w.partition_by) expr(p, scope, env, Clause::other, c);
    for (auto& o : w.order_by) expr(o.expr, scope, env, Clause::other, c);
    if (w.frame) {
      if (w.frame->start.offset) expr(*w.frame->start.offset, scope, env, Clause::other, c);
      if (w.frame->end && w.frame->end->offset) expr(*w.frame->end->offset, scope, env, Clause::other, c);
    }
  }

  void resolve_qualified(Expr& e, const Scope& scope) {
    const std::string q = lower(e.qualifier);
    for (const Scope* s = &scope; s; s = s->parent) {
      for (const auto& entry : s->entries) {
        if (entry.ref_name == q) {
          e.qualifier = entry.canonical;
          return;
        }
      }
    }
    for (const Scope* s = &scope; s; s = s->parent) {
      for (const auto& entry : s->entries) {
        if (!entry.base.empty() && entry.base == q) {
          e.qualifier = entry.canonical;
          return;
        }
      }
    }
    e.qualifier = q;
  }

  // Returns false when the name is not visible in any enclosing scope.
  bool resolve_unqualified(Expr& e, const Scope& scope) {
    const std::string name = lower(e.op);
    for (const Scope* s = &scope; s; s = s->parent) {
      std::vector<const Entry*> known;
      std::vector<const Entry*> unknown;
      for (const auto& entry : s->entries) {
        if (!entry.columns) unknown.push_back(&entry);
        else if (std::find(entry.columns->begin(), entry.columns->end(), name) != entry.columns->end())
          known.push_back(&entry);
      }
      if (known.size() > 1) throw AmbiguousColumn("column '" + name + "' matches several tables");
      if (known.size() == 1) {
        e.qualifier = known.front()->canonical;
        e.op = name;
        e.quoted = false;
        return true;
      }
      if (unknown.size() == 1) {
        e.qualifier = unknown.front()->canonical;
        e.op = name;
        e.quoted = false;
        return true;
      }
      if (unknown.size() > 1)
        throw AmbiguousColumn("unqualified column '" + name + "' with several FROM tables and no schema");
    }
    return false;
  }

  void expr(Expr& e, const Scope& scope, const CteEnv& env, Clause clause, const SelectCore* c) {
    switch (e.kind) {
      case ExprKind::column:
        if (!e.qualifier.empty()) {
          resolve_qualified(e, scope);
          e.op = lower(e.op);
        } else if (!resolve_unqualified(e, scope)) {
          if (e.quoted) {
            // SQLite reads an unresolvable double-quoted name as a string.
            Expr lit;
            lit.kind = ExprKind::literal;
            lit.literal = LiteralKind::string;
            lit.value = e.op;
            e = std::move(lit);
            return;
          }
          e.op = lower(e.op);
        }
        return;
      case ExprKind::star:
        if (!e.qualifier.empty()) resolve_qualified(e, scope);
        return;
      default:
        break;
    }
    for (auto& a : e.args) expr(a, scope, env, clause, c);
    if (e.subquery) query(*e.subquery, &scope, env, false);
    if (e.over) window(*e.over, scope, env, c);
    expr_shape(e);
  }

  // Flattening and operand ordering; children are already normalized.
  void expr_shape(Expr& e) {
    if (e.kind != ExprKind::binary) return;
    if (e.op == "and" || e.op == "or") {
      std::vector<Expr> flat;
      for (auto& a : e.args) {
        if (a.kind == ExprKind::binary && a.op == e.op) {
          for (auto& inner : a.args) flat.push_back(std::move(inner));
        } else {
          flat.push_back(std::move(a));
        }
      }
      std::vector<std::pair<std::string, Expr>> keyed;
      keyed.reserve(flat.size());
      for (auto& f : flat) keyed.emplace_back(key(f), std::move(f));
      std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      keyed.erase(std::unique(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
                  keyed.end());
      e.args.clear();
      for (auto& [k, f] : keyed) e.args.push_back(std::move(f));
      if (e.args.size() == 1) {
        Expr only = std::move(e.args.front());
        e = std::move(only);
      }
      return;
    }
    if (e.args.size() != 2) return;
    const bool relational = e.op == "<" || e.op == ">" || e.op == "<=" || e.op == ">=";
    if (!is_symmetric(e.op) && !relational) return;
    if (key(e.args[0]) > key(e.args[1])) {
      std::swap(e.args[0], e.args[1]);
      e.op = flipped(e.op);
    }
  }

  const SchemaInfo* schema_;
};

}  // namespace

NormalizedAst normalize(const QueryAst& q, const SchemaInfo* schema) {
  NormalizedAst out;
  out.ast = q;
  Normalizer n(schema);
  n.query(out.ast.root, nullptr, {}, true);
  out.alias_map = std::move(n.alias_map);
  return out;
}

NormalizedAst normalize(const NormalizedAst& q, const SchemaInfo* schema) {
  NormalizedAst again = normalize(q.ast, schema);
  for (const auto& [alias, table] : q.alias_map) again.alias_map.emplace(alias, table);
  return again;
}

}  // namespace sqleval::sql
