#pragma once

#include <string>
#include <string_view>

#include "sqleval/sql/ast.hpp"

namespace sqleval::sql {

// Parses exactly one SELECT (optionally WITH-prefixed) statement. A single
// trailing semicolon is allowed; anything after it is rejected.
//
// Throws ParseError (with byte offset) on malformed input and
// UnsupportedConstruct for DML/DDL statements.
QueryAst parse_sql(std::string_view text, Dialect dialect = Dialect::sqlite);

}  // namespace sqleval::sql
