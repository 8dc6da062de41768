#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sqleval::sql {

enum class Dialect { sqlite, mysql };

const char* to_string(Dialect d);
Dialect dialect_from_string(const std::string& s);

// Owning pointer with value semantics: copies deep-copy the pointee and
// equality compares pointees. Lets recursive AST nodes stay regular types.
template <typename T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const noexcept { return static_cast<bool>(ptr_); }
  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  T* get() { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }
  void reset() { ptr_.reset(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

struct Query;
struct WindowSpec;

enum class ExprKind {
  column,       // op = column name, qualifier = table/alias
  star,         // qualifier optional (t.*)
  literal,
  unary,        // op in {"-", "+", "~", "not"}
  binary,       // op is a lowercase operator; "and"/"or" may be n-ary after normalization
  function,     // op = lowercase name; over set for window calls
  case_when,    // [operand] (when then)* [else]
  cast,         // value = target type
  collate,      // value = collation name
  in_list,      // args[0] IN (args[1..])
  in_subquery,  // args[0] IN (subquery)
  between,      // args[0] BETWEEN args[1] AND args[2]
  like,         // op in {"like", "glob", "regexp", "match"}; args[2] = ESCAPE
  is_null,
  exists,
  subquery,     // scalar subquery
  quantified,   // args[0] <op> ANY|ALL (subquery); value = "any" | "all" | "some"
  tuple,        // (a, b, ...)
};

enum class LiteralKind { integer, real, string, null, boolean, blob, placeholder };

struct Expr {
  ExprKind kind = ExprKind::literal;
  std::string op;
  std::string qualifier;
  LiteralKind literal = LiteralKind::null;
  std::string value;
  bool negated = false;
  bool distinct = false;
  bool quoted = false;  // identifier written in double quotes (sqlite string fallback)
  bool case_operand = false;
  bool case_else = false;
  std::vector<Expr> args;
  Box<Query> subquery;
  Box<WindowSpec> over;

  bool operator==(const Expr&) const = default;
};

enum class NullsOrder { unspecified, first, last };

struct OrderItem {
  Expr expr;
  bool descending = false;
  NullsOrder nulls = NullsOrder::unspecified;
  bool operator==(const OrderItem&) const = default;
};

enum class FrameBoundKind { unbounded_preceding, preceding, current_row, following, unbounded_following };

struct FrameBound {
  FrameBoundKind kind = FrameBoundKind::current_row;
  std::optional<Expr> offset;
  bool operator==(const FrameBound&) const = default;
};

struct Frame {
  std::string unit;  // rows | range | groups
  FrameBound start;
  std::optional<FrameBound> end;
  bool operator==(const Frame&) const = default;
};

struct WindowSpec {
  std::string base_name;  // OVER w, or OVER (w ...)
  std::vector<Expr> partition_by;
  std::vector<OrderItem> order_by;
  std::optional<Frame> frame;
  bool bare_name = false;  // OVER w without parentheses
  bool operator==(const WindowSpec&) const = default;
};

struct NamedWindow {
  std::string name;
  WindowSpec spec;
  bool operator==(const NamedWindow&) const = default;
};

struct SelectItem {
  Expr expr;
  std::string alias;
  bool operator==(const SelectItem&) const = default;
};

enum class JoinKind { inner, left, right, full, cross };

struct TableRef {
  enum class Kind { table, derived, join };
  Kind kind = Kind::table;
  std::string name;
  std::string alias;
  Box<Query> subquery;
  JoinKind join = JoinKind::inner;
  bool natural = false;
  bool explicit_inner = false;  // INNER keyword written; rendering only
  Box<TableRef> left;
  Box<TableRef> right;
  std::optional<Expr> on;
  std::vector<std::string> using_columns;
  bool operator==(const TableRef&) const = default;
};

struct SelectCore {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<TableRef> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;
  std::vector<NamedWindow> windows;
  bool operator==(const SelectCore&) const = default;
};

enum class SetOp { union_, intersect, except };

struct QueryBody {
  enum class Kind { select, set_op, nested };
  Kind kind = Kind::select;
  SelectCore select;
  SetOp op = SetOp::union_;
  bool all = false;
  Box<QueryBody> lhs;
  Box<QueryBody> rhs;
  Box<Query> nested;
  bool operator==(const QueryBody&) const = default;
};

struct Cte {
  std::string name;
  std::vector<std::string> columns;
  Box<Query> query;
  bool operator==(const Cte&) const = default;
};

struct Query {
  bool recursive = false;
  std::vector<Cte> ctes;
  QueryBody body;
  std::vector<OrderItem> order_by;
  std::optional<Expr> limit;
  std::optional<Expr> offset;
  bool operator==(const Query&) const = default;
};

// A parsed top-level statement. Equality is structural: source text and
// dialect do not participate.
struct QueryAst {
  Query root;
  Dialect dialect = Dialect::sqlite;
  std::string source_text;

  friend bool operator==(const QueryAst& a, const QueryAst& b) { return a.root == b.root; }
};

// Table name (lowercase) -> ordered column names (lowercase).
using SchemaInfo = std::map<std::string, std::vector<std::string>>;

// Where a query sits relative to its parent.
enum class QueryRole { top, cte, derived_table, expression };

// Pre-order traversal over every query node (top, CTE bodies, derived
// tables, expression subqueries, parenthesized set-op operands). Depth is the
// number of enclosing queries; the top-level query has depth 0.
void walk_queries(const Query& q, const std::function<void(const Query&, int depth, QueryRole role)>& fn);

// Pre-order traversal over every SELECT core, including set-op operands and
// all nested queries.
void walk_cores(const Query& q, const std::function<void(const SelectCore&, int depth)>& fn);

// Pre-order traversal over an expression tree. Does not descend into
// subqueries; callers that want those use walk_queries.
void walk_expr(const Expr& e, const std::function<void(const Expr&)>& fn);

// Every direct expression of a core (select items, join conditions, where,
// group by, having, window clauses).
void for_each_core_expr(const SelectCore& core, const std::function<void(const Expr&)>& fn);

}  // namespace sqleval::sql
