#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sqleval/sql/ast.hpp"

namespace sqleval::sql {

enum class TokenType { ident, quoted_ident, string, number, blob, op, end };

struct Token {
  TokenType type = TokenType::end;
  std::string text;  // unquoted/unescaped content for quoted identifiers and strings
  std::size_t offset = 0;
  char quote = 0;    // opening quote character of a quoted identifier

  std::string upper() const;
};

// Splits SQL text into tokens; the last token is always TokenType::end.
// Throws ParseError on unterminated literals or stray characters.
std::vector<Token> tokenize(std::string_view text, Dialect dialect);

}  // namespace sqleval::sql
