#include "sqleval/sql/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "sqleval/errors.hpp"
#include "sqleval/sql/lexer.hpp"

namespace sqleval::sql {
namespace {

const std::set<std::string>& statement_keywords_unsupported() {
  static const std::set<std::string> kw = {
      "INSERT", "UPDATE", "DELETE",  "CREATE",  "DROP",     "ALTER",   "REPLACE", "PRAGMA", "ATTACH",
      "DETACH", "BEGIN",  "COMMIT",  "ROLLBACK", "VACUUM",  "ANALYZE", "EXPLAIN", "REINDEX", "SAVEPOINT",
      "RELEASE", "TRUNCATE", "GRANT", "REVOKE",  "SHOW",     "SET",     "USE",     "DESCRIBE", "DESC", "CALL",
      "LOCK",   "UNLOCK", "LOAD",    "HANDLER", "MERGE",    "UPSERT",  "END"};
  return kw;
}

// Words that cannot be used as bare identifiers (column names or implicit
// aliases) in the subset we accept.
const std::set<std::string>& reserved() {
  static const std::set<std::string> kw = {
      "SELECT", "FROM",    "WHERE",  "GROUP",    "ORDER",   "BY",      "HAVING",  "LIMIT",  "OFFSET",
      "UNION",  "INTERSECT", "EXCEPT", "ALL",    "DISTINCT", "AS",     "ON",      "JOIN",   "INNER",
      "LEFT",   "RIGHT",   "FULL",   "OUTER",    "CROSS",   "NATURAL", "USING",   "AND",    "OR",
      "NOT",    "IN",      "IS",     "NULL",     "LIKE",    "GLOB",    "REGEXP",  "MATCH",  "BETWEEN",
      "CASE",   "WHEN",    "THEN",   "ELSE",     "END",     "EXISTS",  "CAST",    "WITH",   "RECURSIVE",
      "WINDOW", "OVER",    "PARTITION", "COLLATE", "ESCAPE", "ASC",    "DESC",    "ISNULL", "NOTNULL",
      "VALUES", "TRUE",    "FALSE",  "ROWS",     "RANGE",   "GROUPS",  "FILTER"};
  return kw;
}

bool is_comparison_op(const std::string& op) {
  return op == "=" || op == "==" || op == "!=" || op == "<>" || op == "<" || op == "<=" || op == ">" || op == ">=";
}

std::string canonical_comparison(const std::string& op) {
  if (op == "==") return "=";
  if (op == "!=") return "<>";
  return op;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class Parser {
 public:
  Parser(std::string_view text, Dialect dialect) : dialect_(dialect), tokens_(tokenize(text, dialect)) {}

  QueryAst parse_statement() {
    const Token& first = peek();
    if (first.type == TokenType::ident) {
      const std::string up = first.upper();
      if (statement_keywords_unsupported().count(up))
        throw UnsupportedConstruct("only SELECT statements are supported; got " + up);
    }
    if (!(peek_kw("SELECT") || peek_kw("WITH") || peek_op("(")))
      throw ParseError(first.offset, "expected SELECT or WITH");

    QueryAst ast;
    ast.dialect = dialect_;
    ast.root = parse_query();
    if (!peek_op(";") && peek().type != TokenType::end)
      throw ParseError(peek().offset, "unexpected '" + peek().text + "' after end of query");
    if (accept_op(";")) {
      while (accept_op(";")) {
      }
      if (peek().type != TokenType::end)
        throw ParseError(peek().offset, "multiple statements are not supported");
    }
    return ast;
  }

 private:
  // --- token helpers -------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& advance() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool peek_kw(const char* kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == TokenType::ident && t.upper() == kw;
  }
  bool peek_op(const char* op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == TokenType::op && t.text == op;
  }
  bool accept_kw(const char* kw) {
    if (!peek_kw(kw)) return false;
    advance();
    return true;
  }
  bool accept_op(const char* op) {
    if (!peek_op(op)) return false;
    advance();
    return true;
  }
  void expect_kw(const char* kw) {
    if (!accept_kw(kw)) fail(std::string("expected ") + kw);
  }
  void expect_op(const char* op) {
    if (!accept_op(op)) fail(std::string("expected '") + op + "'");
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    const std::string got = t.type == TokenType::end ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.offset, what + ", got " + got);
  }

  bool peek_query_start(std::size_t ahead = 0) const { return peek_kw("SELECT", ahead) || peek_kw("WITH", ahead); }

  // Identifier usable as a name: quoted, or bare and not reserved.
  bool peek_name(std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    if (t.type == TokenType::quoted_ident) return true;
    return t.type == TokenType::ident && !reserved().count(t.upper());
  }
  std::string expect_name(const char* what) {
    if (!peek_name()) fail(std::string("expected ") + what);
    return advance().text;
  }

  // --- queries -------------------------------------------------------------
  Query parse_query() {
    Query q;
    if (accept_kw("WITH")) {
      q.recursive = accept_kw("RECURSIVE");
      do {
        Cte cte;
        cte.name = expect_name("CTE name");
        if (accept_op("(")) {
          do {
            cte.columns.push_back(expect_name("column name"));
          } while (accept_op(","));
          expect_op(")");
        }
        expect_kw("AS");
        if (accept_kw("NOT")) expect_kw("MATERIALIZED");
        else accept_kw("MATERIALIZED");
        expect_op("(");
        cte.query = parse_query();
        expect_op(")");
        q.ctes.push_back(std::move(cte));
      } while (accept_op(","));
    }
    q.body = parse_set_expr();
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      q.order_by = parse_order_list();
    }
    if (accept_kw("LIMIT")) {
      Expr first = parse_expr();
      if (accept_op(",")) {
        q.offset = std::move(first);
        q.limit = parse_expr();
      } else {
        q.limit = std::move(first);
        if (accept_kw("OFFSET")) q.offset = parse_expr();
      }
    }
    return q;
  }

  QueryBody parse_set_expr() {
    QueryBody left = parse_set_operand();
    for (;;) {
      SetOp op;
      if (peek_kw("UNION")) op = SetOp::union_;
      else if (peek_kw("INTERSECT")) op = SetOp::intersect;
      else if (peek_kw("EXCEPT")) op = SetOp::except;
      else break;
      advance();
      const bool all = accept_kw("ALL");
      if (!all) accept_kw("DISTINCT");
      QueryBody right = parse_set_operand();
      QueryBody combined;
      combined.kind = QueryBody::Kind::set_op;
      combined.op = op;
      combined.all = all;
      combined.lhs = std::move(left);
      combined.rhs = std::move(right);
      left = std::move(combined);
    }
    return left;
  }

  QueryBody parse_set_operand() {
    QueryBody b;
    if (peek_op("(")) {
      advance();
      b.kind = QueryBody::Kind::nested;
      b.nested = parse_query();
      expect_op(")");
      return b;
    }
    if (!peek_kw("SELECT")) fail("expected SELECT");
    b.kind = QueryBody::Kind::select;
    b.select = parse_select_core();
    return b;
  }

  SelectCore parse_select_core() {
    expect_kw("SELECT");
    SelectCore c;
    if (accept_kw("DISTINCT")) c.distinct = true;
    else accept_kw("ALL");
    do {
      c.items.push_back(parse_select_item());
    } while (accept_op(","));
    if (accept_kw("FROM")) {
      do {
        c.from.push_back(parse_join_chain());
      } while (accept_op(","));
    }
    if (accept_kw("WHERE")) c.where = parse_expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do {
        c.group_by.push_back(parse_expr());
      } while (accept_op(","));
    }
    if (accept_kw("HAVING")) c.having = parse_expr();
    if (accept_kw("WINDOW")) {
      do {
        NamedWindow w;
        w.name = expect_name("window name");
        expect_kw("AS");
        expect_op("(");
        w.spec = parse_window_body();
        expect_op(")");
        c.windows.push_back(std::move(w));
      } while (accept_op(","));
    }
    return c;
  }

  SelectItem parse_select_item() {
    SelectItem item;
    if (peek_op("*")) {
      advance();
      item.expr.kind = ExprKind::star;
      return item;
    }
    if (peek_name() && peek_op(".", 1) && peek_op("*", 2)) {
      item.expr.kind = ExprKind::star;
      item.expr.qualifier = advance().text;
      advance();
      advance();
      return item;
    }
    item.expr = parse_expr();
    item.alias = parse_optional_alias();
    return item;
  }

  std::string parse_optional_alias() {
    if (accept_kw("AS")) {
      if (peek().type == TokenType::string) return advance().text;
      return expect_name("alias");
    }
    if (peek_name()) return advance().text;
    return {};
  }

  TableRef parse_join_chain() {
    TableRef left = parse_table_primary();
    for (;;) {
      const std::size_t save = pos_;
      bool natural = accept_kw("NATURAL");
      JoinKind kind = JoinKind::inner;
      bool explicit_inner = false;
      if (accept_kw("LEFT")) {
        kind = JoinKind::left;
        accept_kw("OUTER");
      } else if (accept_kw("RIGHT")) {
        kind = JoinKind::right;
        accept_kw("OUTER");
      } else if (accept_kw("FULL")) {
        kind = JoinKind::full;
        accept_kw("OUTER");
      } else if (accept_kw("INNER")) {
        explicit_inner = true;
      } else if (accept_kw("CROSS")) {
        kind = JoinKind::cross;
      }
      if (!accept_kw("JOIN")) {
        if (pos_ != save) fail("expected JOIN");
        break;
      }
      TableRef join;
      join.kind = TableRef::Kind::join;
      join.join = kind;
      join.natural = natural;
      join.explicit_inner = explicit_inner;
      join.left = std::move(left);
      join.right = parse_table_primary();
      if (accept_kw("ON")) {
        join.on = parse_expr();
      } else if (accept_kw("USING")) {
        expect_op("(");
        do {
          join.using_columns.push_back(expect_name("column name"));
        } while (accept_op(","));
        expect_op(")");
      }
      left = std::move(join);
    }
    return left;
  }

  TableRef parse_table_primary() {
    TableRef t;
    if (accept_op("(")) {
      if (peek_query_start() || peek_op("(")) {
        t.kind = TableRef::Kind::derived;
        t.subquery = parse_query();
        expect_op(")");
        t.alias = parse_optional_alias();
        return t;
      }
      TableRef inner = parse_join_chain();
      expect_op(")");
      return inner;
    }
    t.kind = TableRef::Kind::table;
    t.name = expect_name("table name");
    if (accept_op(".")) t.name = expect_name("table name");  // schema-qualified; schema dropped
    t.alias = parse_optional_alias();
    if (accept_kw("INDEXED")) {
      expect_kw("BY");
      expect_name("index name");
    } else if (peek_kw("NOT") && peek_kw("INDEXED", 1)) {
      advance();
      advance();
    }
    return t;
  }

  std::vector<OrderItem> parse_order_list() {
    std::vector<OrderItem> out;
    do {
      OrderItem item;
      item.expr = parse_expr();
      if (accept_kw("DESC")) item.descending = true;
      else accept_kw("ASC");
      if (accept_kw("NULLS")) {
        if (accept_kw("FIRST")) item.nulls = NullsOrder::first;
        else if (accept_kw("LAST")) item.nulls = NullsOrder::last;
        else fail("expected FIRST or LAST");
      }
      out.push_back(std::move(item));
    } while (accept_op(","));
    return out;
  }

  // --- windows -------------------------------------------------------------
  WindowSpec parse_window_body() {
    WindowSpec w;
    if (peek_name() && !peek_kw("PARTITION") && !peek_kw("ORDER")) w.base_name = advance().text;
    if (accept_kw("PARTITION")) {
      expect_kw("BY");
      do {
        w.partition_by.push_back(parse_expr());
      } while (accept_op(","));
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      w.order_by = parse_order_list();
    }
    if (peek_kw("ROWS") || peek_kw("RANGE") || peek_kw("GROUPS")) {
      Frame f;
      f.unit = lower(advance().text);
      if (accept_kw("BETWEEN")) {
        f.start = parse_frame_bound();
        expect_kw("AND");
        f.end = parse_frame_bound();
      } else {
        f.start = parse_frame_bound();
      }
      if (accept_kw("EXCLUDE")) fail("EXCLUDE frame clauses are not supported");
      w.frame = std::move(f);
    }
    return w;
  }

  FrameBound parse_frame_bound() {
    FrameBound b;
    if (accept_kw("UNBOUNDED")) {
      if (accept_kw("PRECEDING")) b.kind = FrameBoundKind::unbounded_preceding;
      else if (accept_kw("FOLLOWING")) b.kind = FrameBoundKind::unbounded_following;
      else fail("expected PRECEDING or FOLLOWING");
      return b;
    }
    if (accept_kw("CURRENT")) {
      expect_kw("ROW");
      b.kind = FrameBoundKind::current_row;
      return b;
    }
    b.offset = parse_bitwise();
    if (accept_kw("PRECEDING")) b.kind = FrameBoundKind::preceding;
    else if (accept_kw("FOLLOWING")) b.kind = FrameBoundKind::following;
    else fail("expected PRECEDING or FOLLOWING");
    return b;
  }

  // --- expressions ---------------------------------------------------------
  Expr parse_expr() { return parse_or(); }

  static Expr make_binary(std::string op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = ExprKind::binary;
    e.op = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  Expr parse_or() {
    Expr left = parse_and();
    while (accept_kw("OR")) left = make_binary("or", std::move(left), parse_and());
    return left;
  }

  Expr parse_and() {
    Expr left = parse_not();
    while (accept_kw("AND")) left = make_binary("and", std::move(left), parse_not());
    return left;
  }

  Expr parse_not() {
    if (peek_kw("NOT")) {
      if (peek_kw("EXISTS", 1)) {
        advance();
        Expr e = parse_comparison();
        // NOT EXISTS (...) binds to the EXISTS primary when nothing follows it.
        if (e.kind == ExprKind::exists && !e.negated) {
          e.negated = true;
          return e;
        }
        Expr n;
        n.kind = ExprKind::unary;
        n.op = "not";
        n.args.push_back(std::move(e));
        return n;
      }
      advance();
      Expr n;
      n.kind = ExprKind::unary;
      n.op = "not";
      n.args.push_back(parse_not());
      return n;
    }
    return parse_comparison();
  }

  Expr parse_comparison() {
    Expr left = parse_bitwise();
    for (;;) {
      const Token& t = peek();
      if (t.type == TokenType::op && is_comparison_op(t.text)) {
        const std::string op = canonical_comparison(advance().text);
        if (peek_kw("ANY") || peek_kw("ALL") || peek_kw("SOME")) {
          Expr q;
          q.kind = ExprKind::quantified;
          q.op = op;
          q.value = lower(advance().text);
          expect_op("(");
          q.subquery = parse_query();
          expect_op(")");
          q.args.push_back(std::move(left));
          left = std::move(q);
          continue;
        }
        left = make_binary(op, std::move(left), parse_bitwise());
        continue;
      }
      if (peek_kw("IS")) {
        advance();
        const bool neg = accept_kw("NOT");
        if (accept_kw("NULL")) {
          Expr e;
          e.kind = ExprKind::is_null;
          e.negated = neg;
          e.args.push_back(std::move(left));
          left = std::move(e);
        } else {
          left = make_binary(neg ? "is not" : "is", std::move(left), parse_bitwise());
        }
        continue;
      }
      if (peek_kw("ISNULL") || peek_kw("NOTNULL")) {
        Expr e;
        e.kind = ExprKind::is_null;
        e.negated = advance().upper() == "NOTNULL";
        e.args.push_back(std::move(left));
        left = std::move(e);
        continue;
      }
      bool neg = false;
      if (peek_kw("NOT") &&
          (peek_kw("IN", 1) || peek_kw("BETWEEN", 1) || peek_kw("LIKE", 1) || peek_kw("GLOB", 1) ||
           peek_kw("REGEXP", 1) || peek_kw("MATCH", 1) || peek_kw("NULL", 1))) {
        advance();
        neg = true;
        if (accept_kw("NULL")) {
          Expr e;
          e.kind = ExprKind::is_null;
          e.negated = true;
          e.args.push_back(std::move(left));
          left = std::move(e);
          continue;
        }
      }
      if (accept_kw("IN")) {
        left = parse_in_rhs(std::move(left), neg);
        continue;
      }
      if (accept_kw("BETWEEN")) {
        Expr e;
        e.kind = ExprKind::between;
        e.negated = neg;
        e.args.push_back(std::move(left));
        e.args.push_back(parse_bitwise());
        expect_kw("AND");
        e.args.push_back(parse_bitwise());
        left = std::move(e);
        continue;
      }
      if (peek_kw("LIKE") || peek_kw("GLOB") || peek_kw("REGEXP") || peek_kw("MATCH")) {
        Expr e;
        e.kind = ExprKind::like;
        e.op = lower(advance().text);
        e.negated = neg;
        e.args.push_back(std::move(left));
        e.args.push_back(parse_bitwise());
        if (accept_kw("ESCAPE")) e.args.push_back(parse_bitwise());
        left = std::move(e);
        continue;
      }
      if (neg) fail("expected IN, BETWEEN, LIKE or NULL after NOT");
      break;
    }
    return left;
  }

  Expr parse_in_rhs(Expr lhs, bool neg) {
    expect_op("(");
    Expr e;
    e.negated = neg;
    if (peek_query_start()) {
      e.kind = ExprKind::in_subquery;
      e.args.push_back(std::move(lhs));
      e.subquery = parse_query();
      expect_op(")");
      return e;
    }
    e.kind = ExprKind::in_list;
    e.args.push_back(std::move(lhs));
    if (!peek_op(")")) {
      do {
        e.args.push_back(parse_expr());
      } while (accept_op(","));
    }
    expect_op(")");
    return e;
  }

  Expr parse_bitwise() {
    Expr left = parse_additive();
    while (peek_op("&") || peek_op("|") || peek_op("<<") || peek_op(">>")) {
      std::string op = advance().text;
      left = make_binary(std::move(op), std::move(left), parse_additive());
    }
    return left;
  }

  Expr parse_additive() {
    Expr left = parse_multiplicative();
    while (peek_op("+") || peek_op("-")) {
      std::string op = advance().text;
      left = make_binary(std::move(op), std::move(left), parse_multiplicative());
    }
    return left;
  }

  Expr parse_multiplicative() {
    Expr left = parse_concat();
    while (peek_op("*") || peek_op("/") || peek_op("%")) {
      std::string op = advance().text;
      left = make_binary(std::move(op), std::move(left), parse_concat());
    }
    return left;
  }

  Expr parse_concat() {
    Expr left = parse_unary();
    while (peek_op("||")) {
      advance();
      left = make_binary("||", std::move(left), parse_unary());
    }
    return left;
  }

  Expr parse_unary() {
    if (peek_op("-") || peek_op("+") || peek_op("~")) {
      Expr e;
      e.kind = ExprKind::unary;
      e.op = advance().text;
      e.args.push_back(parse_unary());
      return e;
    }
    return parse_postfix();
  }

  Expr parse_postfix() {
    Expr e = parse_primary();
    while (accept_kw("COLLATE")) {
      Expr c;
      c.kind = ExprKind::collate;
      c.value = lower(expect_name("collation name"));
      c.args.push_back(std::move(e));
      e = std::move(c);
    }
    return e;
  }

  static Expr literal(LiteralKind kind, std::string value) {
    Expr e;
    e.kind = ExprKind::literal;
    e.literal = kind;
    e.value = std::move(value);
    return e;
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::number: {
        const Token& n = advance();
        const bool is_real = n.text.find_first_of(".eE") != std::string::npos &&
                             !(n.text.size() > 1 && (n.text[1] == 'x' || n.text[1] == 'X'));
        return literal(is_real ? LiteralKind::real : LiteralKind::integer, n.text);
      }
      case TokenType::string:
        return literal(LiteralKind::string, advance().text);
      case TokenType::blob:
        return literal(LiteralKind::blob, advance().text);
      case TokenType::quoted_ident:
        return parse_column_ref();
      case TokenType::op:
        if (t.text == "(") return parse_paren();
        if (t.text == "?") fail("bound parameters are not supported");
        fail("expected expression");
      case TokenType::end:
        fail("expected expression");
      case TokenType::ident:
        break;
    }
    const std::string up = t.upper();
    if (up == "NULL") {
      advance();
      return literal(LiteralKind::null, "NULL");
    }
    if (up == "TRUE" || up == "FALSE") {
      advance();
      return literal(LiteralKind::boolean, up);
    }
    if (up == "EXISTS") {
      advance();
      Expr e;
      e.kind = ExprKind::exists;
      expect_op("(");
      e.subquery = parse_query();
      expect_op(")");
      return e;
    }
    if (up == "CASE") return parse_case();
    if (up == "CAST" && peek_op("(", 1)) return parse_cast();
    if (peek_op("(", 1) && !(up == "IN" || up == "NOT" || up == "AND" || up == "OR")) return parse_function();
    if (reserved().count(up)) fail("unexpected keyword " + up);
    return parse_column_ref();
  }

  Expr parse_column_ref() {
    Expr e;
    e.kind = ExprKind::column;
    const Token& first = advance();
    e.op = first.text;
    e.quoted = first.type == TokenType::quoted_ident && first.quote == '"';
    if (peek_op(".") && peek_name(1)) {
      advance();
      const Token& second = advance();
      e.qualifier = e.op;
      e.op = second.text;
      e.quoted = second.type == TokenType::quoted_ident && second.quote == '"';
      if (peek_op(".") && peek_name(1)) {  // schema.table.column
        advance();
        const Token& third = advance();
        e.qualifier = e.op;
        e.op = third.text;
        e.quoted = third.type == TokenType::quoted_ident && third.quote == '"';
      }
      // A qualified name is unambiguously a column reference.
      e.quoted = false;
    }
    return e;
  }

  Expr parse_paren() {
    expect_op("(");
    if (peek_query_start()) {
      Expr e;
      e.kind = ExprKind::subquery;
      e.subquery = parse_query();
      expect_op(")");
      return e;
    }
    Expr first = parse_expr();
    if (!accept_op(",")) {
      expect_op(")");
      return first;
    }
    Expr tuple;
    tuple.kind = ExprKind::tuple;
    tuple.args.push_back(std::move(first));
    do {
      tuple.args.push_back(parse_expr());
    } while (accept_op(","));
    expect_op(")");
    return tuple;
  }

  Expr parse_case() {
    expect_kw("CASE");
    Expr e;
    e.kind = ExprKind::case_when;
    if (!peek_kw("WHEN")) {
      e.case_operand = true;
      e.args.push_back(parse_expr());
    }
    if (!peek_kw("WHEN")) fail("expected WHEN");
    while (accept_kw("WHEN")) {
      e.args.push_back(parse_expr());
      expect_kw("THEN");
      e.args.push_back(parse_expr());
    }
    if (accept_kw("ELSE")) {
      e.case_else = true;
      e.args.push_back(parse_expr());
    }
    expect_kw("END");
    return e;
  }

  Expr parse_cast() {
    advance();  // CAST
    expect_op("(");
    Expr e;
    e.kind = ExprKind::cast;
    e.args.push_back(parse_expr());
    expect_kw("AS");
    std::string type;
    while (peek().type == TokenType::ident) {
      if (!type.empty()) type += ' ';
      type += lower(advance().text);
    }
    if (type.empty()) fail("expected type name");
    if (accept_op("(")) {
      type += '(';
      do {
        const Token& n = advance();
        if (n.type != TokenType::number) throw ParseError(n.offset, "expected type size");
        if (type.back() != '(') type += ',';
        type += n.text;
      } while (accept_op(","));
      expect_op(")");
      type += ')';
    }
    e.value = std::move(type);
    expect_op(")");
    return e;
  }

  Expr parse_function() {
    Expr e;
    e.kind = ExprKind::function;
    e.op = lower(advance().text);
    expect_op("(");
    if (accept_op("*")) {
      Expr star;
      star.kind = ExprKind::star;
      e.args.push_back(std::move(star));
    } else if (!peek_op(")")) {
      if (accept_kw("DISTINCT")) e.distinct = true;
      else accept_kw("ALL");
      do {
        e.args.push_back(parse_expr());
      } while (accept_op(","));
    }
    expect_op(")");
    if (peek_kw("FILTER")) fail("FILTER clauses are not supported");
    if (accept_kw("OVER")) {
      WindowSpec w;
      if (accept_op("(")) {
        w = parse_window_body();
        expect_op(")");
      } else {
        w.base_name = expect_name("window name");
        w.bare_name = true;
      }
      e.over = std::move(w);
    }
    return e;
  }

  Dialect dialect_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse_sql(std::string_view text, Dialect dialect) {
  bool blank = std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
  if (blank) throw ParseError(0, "empty query");
  Parser p(text, dialect);
  QueryAst ast = p.parse_statement();
  ast.source_text = std::string(text);
  return ast;
}

}  // namespace sqleval::sql
