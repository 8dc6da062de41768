#pragma once

#include <map>
#include <string>

#include "sqleval/sql/ast.hpp"

namespace sqleval::sql {

// Canonical form used for structural comparison and fingerprinting.
//
// Identifiers are lowercased, table aliases are replaced by canonical table
// names (a repeated table gets "<name>_<k>", a derived table "_sub<k>"),
// unqualified columns are qualified, AND/OR chains become sorted n-ary
// nodes, and commutative comparisons have their operands in a fixed order.
// Literal values are untouched.
struct NormalizedAst {
  QueryAst ast;
  std::map<std::string, std::string> alias_map;  // lowercase alias -> canonical table name

  friend bool operator==(const NormalizedAst& a, const NormalizedAst& b) { return a.ast == b.ast; }
};

// `schema` is optional; without it an unqualified column in a multi-table
// FROM raises AmbiguousColumn.
NormalizedAst normalize(const QueryAst& q, const SchemaInfo* schema = nullptr);
NormalizedAst normalize(const NormalizedAst& q, const SchemaInfo* schema = nullptr);

}  // namespace sqleval::sql
