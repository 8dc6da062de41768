#pragma once

#include <string>

#include "sqleval/sql/ast.hpp"

namespace sqleval::sql {

// Renders SQL text that parses back to a structurally equal tree.
// Keywords are uppercase, identifiers are emitted as stored and quoted only
// when needed.
std::string render(const Query& q, Dialect dialect = Dialect::sqlite);
std::string render(const QueryAst& q);
std::string render(const Expr& e, Dialect dialect = Dialect::sqlite);
std::string render(const TableRef& t, Dialect dialect = Dialect::sqlite);

}  // namespace sqleval::sql
