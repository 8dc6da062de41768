#include "sqleval/sql/render.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace sqleval::sql {
namespace {

const std::set<std::string>& reserved_upper() {
  static const std::set<std::string> kw = {
      "SELECT", "FROM",    "WHERE",  "GROUP",    "ORDER",   "BY",      "HAVING",  "LIMIT",  "OFFSET",
      "UNION",  "INTERSECT", "EXCEPT", "ALL",    "DISTINCT", "AS",     "ON",      "JOIN",   "INNER",
      "LEFT",   "RIGHT",   "FULL",   "OUTER",    "CROSS",   "NATURAL", "USING",   "AND",    "OR",
      "NOT",    "IN",      "IS",     "NULL",     "LIKE",    "GLOB",    "REGEXP",  "MATCH",  "BETWEEN",
      "CASE",   "WHEN",    "THEN",   "ELSE",     "END",     "EXISTS",  "CAST",    "WITH",   "RECURSIVE",
      "WINDOW", "OVER",    "PARTITION", "COLLATE", "ESCAPE", "ASC",    "DESC",    "ISNULL", "NOTNULL",
      "VALUES", "TRUE",    "FALSE",  "ROWS",     "RANGE",   "GROUPS",  "FILTER",  "INDEXED", "CURRENT",
      "UNBOUNDED", "PRECEDING", "FOLLOWING", "ROW", "NULLS", "FIRST", "LAST", "MATERIALIZED", "ANY", "SOME"};
  return kw;
}

// Binding strength; higher binds tighter. Mirrors the parser's levels.
enum Prec : int {
  p_or = 1,
  p_and = 2,
  p_not = 3,
  p_cmp = 4,
  p_bit = 5,
  p_add = 6,
  p_mul = 7,
  p_concat = 8,
  p_unary = 9,
  p_postfix = 10,
  p_primary = 11,
};

int binary_prec(const std::string& op) {
  if (op == "or") return p_or;
  if (op == "and") return p_and;
  if (op == "&" || op == "|" || op == "<<" || op == ">>") return p_bit;
  if (op == "+" || op == "-") return p_add;
  if (op == "*" || op == "/" || op == "%") return p_mul;
  if (op == "||") return p_concat;
  return p_cmp;  // comparisons, is, is not
}

int prec(const Expr& e) {
  switch (e.kind) {
    case ExprKind::binary:
      return binary_prec(e.op);
    case ExprKind::unary:
      return e.op == "not" ? p_not : p_unary;
    case ExprKind::in_list:
    case ExprKind::in_subquery:
    case ExprKind::between:
    case ExprKind::like:
    case ExprKind::is_null:
    case ExprKind::quantified:
      return p_cmp;
    case ExprKind::exists:
      return e.negated ? p_not : p_primary;
    case ExprKind::collate:
      return p_postfix;
    default:
      return p_primary;
  }
}

class Renderer {
 public:
  explicit Renderer(Dialect d) : dialect_(d) {}

  std::string ident(const std::string& name) const {
    bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) plain = false;
    }
    if (plain) {
      std::string up = name;
      for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (reserved_upper().count(up)) plain = false;
    }
    if (plain) return name;
    std::string out = "`";
    for (char c : name) {
      out += c;
      if (c == '`') out += '`';
    }
    out += '`';
    return out;
  }

  std::string string_literal(const std::string& s) const {
    std::string out = "'";
    for (char c : s) {
      if (c == '\'') out += "''";
      else if (c == '\\' && dialect_ == Dialect::mysql) out += "\\\\";
      else out += c;
    }
    out += '\'';
    return out;
  }

  std::string column(const Expr& e) const {
    std::string name;
    if (e.quoted) {
      name = "\"";
      for (char c : e.op) {
        name += c;
        if (c == '"') name += '"';
      }
      name += '"';
    } else {
      name = ident(e.op);
    }
    if (e.qualifier.empty()) return name;
    return ident(e.qualifier) + "." + name;
  }

  std::string wrap(const Expr& e, int min_prec) const {
    std::string s = expr(e);
    if (prec(e) < min_prec) return "(" + s + ")";
    return s;
  }

  std::string expr(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::column:
        return column(e);
      case ExprKind::star:
        return e.qualifier.empty() ? "*" : ident(e.qualifier) + ".*";
      case ExprKind::literal:
        switch (e.literal) {
          case LiteralKind::string:
            return string_literal(e.value);
          case LiteralKind::blob:
            return "X'" + e.value + "'";
          case LiteralKind::null:
            return "NULL";
          case LiteralKind::placeholder:
            return "?";
          default:
            return e.value;
        }
      case ExprKind::unary:
        if (e.op == "not") return "NOT " + wrap(e.args[0], p_not);
        {
          std::string inner = wrap(e.args[0], p_unary);
          // Avoid "--x" turning into a comment.
          if (!inner.empty() && (inner[0] == '-' || inner[0] == '+')) inner = "(" + inner + ")";
          return e.op + inner;
        }
      case ExprKind::binary: {
        const int p = binary_prec(e.op);
        std::string op = e.op;
        if (op == "and" || op == "or" || op == "is" || op == "is not") {
          for (auto& c : op) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        std::string out = wrap(e.args[0], p);
        for (std::size_t i = 1; i < e.args.size(); ++i) out += " " + op + " " + wrap(e.args[i], p + 1);
        return out;
      }
      case ExprKind::function: {
        std::string out = e.op + "(";
        if (e.distinct) out += "DISTINCT ";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i) out += ", ";
          out += expr(e.args[i]);
        }
        out += ")";
        if (e.over) {
          if (e.over->bare_name) out += " OVER " + ident(e.over->base_name);
          else out += " OVER (" + window(*e.over) + ")";
        }
        return out;
      }
      case ExprKind::case_when: {
        std::string out = "CASE";
        std::size_t i = 0;
        if (e.case_operand) out += " " + expr(e.args[i++]);
        const std::size_t stop = e.case_else ? e.args.size() - 1 : e.args.size();
        for (; i + 1 < stop; i += 2) {
          out += " WHEN " + expr(e.args[i]) + " THEN " + expr(e.args[i + 1]);
        }
        if (e.case_else) out += " ELSE " + expr(e.args.back());
        return out + " END";
      }
      case ExprKind::cast: {
        std::string type = e.value;
        for (auto& c : type) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return "CAST(" + expr(e.args[0]) + " AS " + type + ")";
      }
      case ExprKind::collate:
        return wrap(e.args[0], p_postfix) + " COLLATE " + ident(e.value);
      case ExprKind::in_list: {
        std::string out = wrap(e.args[0], p_cmp) + (e.negated ? " NOT IN (" : " IN (");
        for (std::size_t i = 1; i < e.args.size(); ++i) {
          if (i > 1) out += ", ";
          out += expr(e.args[i]);
        }
        return out + ")";
      }
      case ExprKind::in_subquery:
        return wrap(e.args[0], p_cmp) + (e.negated ? " NOT IN (" : " IN (") + query(*e.subquery) + ")";
      case ExprKind::between:
        return wrap(e.args[0], p_cmp) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") + wrap(e.args[1], p_bit) +
               " AND " + wrap(e.args[2], p_bit);
      case ExprKind::like: {
        std::string op = e.op;
        for (auto& c : op) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        std::string out = wrap(e.args[0], p_cmp) + (e.negated ? " NOT " : " ") + op + " " + wrap(e.args[1], p_bit);
        if (e.args.size() > 2) out += " ESCAPE " + wrap(e.args[2], p_bit);
        return out;
      }
      case ExprKind::is_null:
        return wrap(e.args[0], p_cmp) + (e.negated ? " IS NOT NULL" : " IS NULL");
      case ExprKind::exists:
        return std::string(e.negated ? "NOT EXISTS (" : "EXISTS (") + query(*e.subquery) + ")";
      case ExprKind::subquery:
        return "(" + query(*e.subquery) + ")";
      case ExprKind::quantified: {
        std::string q = e.value;
        for (auto& c : q) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return wrap(e.args[0], p_cmp) + " " + e.op + " " + q + " (" + query(*e.subquery) + ")";
      }
      case ExprKind::tuple: {
        std::string out = "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i) out += ", ";
          out += expr(e.args[i]);
        }
        return out + ")";
      }
    }
    return {};
  }

  std::string order_list(const std::vector<OrderItem>& items) const {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += expr(items[i].expr);
      if (items[i].descending) out += " DESC";
      if (items[i].nulls == NullsOrder::first) out += " NULLS FIRST";
      if (items[i].nulls == NullsOrder::last) out += " NULLS LAST";
    }
    return out;
  }

  std::string bound(const FrameBound& b) const {
    switch (b.kind) {
      case FrameBoundKind::unbounded_preceding: return "UNBOUNDED PRECEDING";
      case FrameBoundKind::unbounded_following: return "UNBOUNDED FOLLOWING";
      case FrameBoundKind::current_row: return "CURRENT ROW";
      case FrameBoundKind::preceding: return wrap(*b.offset, p_bit) + " PRECEDING";
      case FrameBoundKind::following: return wrap(*b.offset, p_bit) + " FOLLOWING";
    }
    return {};
  }

  std::string window(const WindowSpec& w) const {
    std::vector<std::string> parts;
    if (!w.base_name.empty()) parts.push_back(ident(w.base_name));
    if (!w.partition_by.empty()) {
      std::string p = "PARTITION BY ";
      for (std::size_t i = 0; i < w.partition_by.size(); ++i) {
        if (i) p += ", ";
        p += expr(w.partition_by[i]);
      }
      parts.push_back(p);
    }
    if (!w.order_by.empty()) parts.push_back("ORDER BY " + order_list(w.order_by));
    if (w.frame) {
      std::string unit = w.frame->unit;
      for (auto& c : unit) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (w.frame->end) parts.push_back(unit + " BETWEEN " + bound(w.frame->start) + " AND " + bound(*w.frame->end));
      else parts.push_back(unit + " " + bound(w.frame->start));
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ' ';
      out += parts[i];
    }
    return out;
  }

  std::string table(const TableRef& t) const {
    switch (t.kind) {
      case TableRef::Kind::table: {
        std::string out = ident(t.name);
        if (!t.alias.empty()) out += " AS " + ident(t.alias);
        return out;
      }
      case TableRef::Kind::derived: {
        std::string out = "(" + query(*t.subquery) + ")";
        if (!t.alias.empty()) out += " AS " + ident(t.alias);
        return out;
      }
      case TableRef::Kind::join: {
        std::string out = table(*t.left);
        out += ' ';
        if (t.natural) out += "NATURAL ";
        switch (t.join) {
          case JoinKind::inner: out += t.explicit_inner ? "INNER JOIN " : "JOIN "; break;
          case JoinKind::left: out += "LEFT JOIN "; break;
          case JoinKind::right: out += "RIGHT JOIN "; break;
          case JoinKind::full: out += "FULL JOIN "; break;
          case JoinKind::cross: out += "CROSS JOIN "; break;
        }
        // A join on the right-hand side needs parentheses to keep its shape.
        if (t.right->kind == TableRef::Kind::join) out += "(" + table(*t.right) + ")";
        else out += table(*t.right);
        if (t.on) out += " ON " + expr(*t.on);
        if (!t.using_columns.empty()) {
          out += " USING (";
          for (std::size_t i = 0; i < t.using_columns.size(); ++i) {
            if (i) out += ", ";
            out += ident(t.using_columns[i]);
          }
          out += ")";
        }
        return out;
      }
    }
    return {};
  }

  std::string core(const SelectCore& c) const {
    std::string out = "SELECT ";
    if (c.distinct) out += "DISTINCT ";
    for (std::size_t i = 0; i < c.items.size(); ++i) {
      if (i) out += ", ";
      out += expr(c.items[i].expr);
      if (!c.items[i].alias.empty()) out += " AS " + ident(c.items[i].alias);
    }
    if (!c.from.empty()) {
      out += " FROM ";
      for (std::size_t i = 0; i < c.from.size(); ++i) {
        if (i) out += ", ";
        out += table(c.from[i]);
      }
    }
    if (c.where) out += " WHERE " + expr(*c.where);
    if (!c.group_by.empty()) {
      out += " GROUP BY ";
      for (std::size_t i = 0; i < c.group_by.size(); ++i) {
        if (i) out += ", ";
        out += expr(c.group_by[i]);
      }
    }
    if (c.having) out += " HAVING " + expr(*c.having);
    if (!c.windows.empty()) {
      out += " WINDOW ";
      for (std::size_t i = 0; i < c.windows.size(); ++i) {
        if (i) out += ", ";
        out += ident(c.windows[i].name) + " AS (" + window(c.windows[i].spec) + ")";
      }
    }
    return out;
  }

  std::string body(const QueryBody& b) const {
    switch (b.kind) {
      case QueryBody::Kind::select:
        return core(b.select);
      case QueryBody::Kind::nested:
        return "(" + query(*b.nested) + ")";
      case QueryBody::Kind::set_op: {
        std::string op = b.op == SetOp::union_ ? "UNION" : b.op == SetOp::intersect ? "INTERSECT" : "EXCEPT";
        if (b.all) op += " ALL";
        std::string rhs = body(*b.rhs);
        if (b.rhs->kind == QueryBody::Kind::set_op) rhs = "(" + rhs + ")";
        return body(*b.lhs) + " " + op + " " + rhs;
      }
    }
    return {};
  }

  std::string query(const Query& q) const {
    std::string out;
    if (!q.ctes.empty()) {
      out += q.recursive ? "WITH RECURSIVE " : "WITH ";
      for (std::size_t i = 0; i < q.ctes.size(); ++i) {
        if (i) out += ", ";
        out += ident(q.ctes[i].name);
        if (!q.ctes[i].columns.empty()) {
          out += "(";
          for (std::size_t j = 0; j < q.ctes[i].columns.size(); ++j) {
            if (j) out += ", ";
            out += ident(q.ctes[i].columns[j]);
          }
          out += ")";
        }
        out += " AS (" + query(*q.ctes[i].query) + ")";
      }
      out += ' ';
    }
    out += body(q.body);
    if (!q.order_by.empty()) out += " ORDER BY " + order_list(q.order_by);
    if (q.limit) out += " LIMIT " + expr(*q.limit);
    if (q.offset) out += " OFFSET " + expr(*q.offset);
    return out;
  }

 private:
  Dialect dialect_;
};

}  // namespace

std::string render(const Query& q, Dialect dialect) { return Renderer(dialect).query(q); }
std::string render(const QueryAst& q) { return Renderer(q.dialect).query(q.root); }
std::string render(const Expr& e, Dialect dialect) { return Renderer(dialect).expr(e); }
std::string render(const TableRef& t, Dialect dialect) { return Renderer(dialect).table(t); }

}  // namespace sqleval::sql
