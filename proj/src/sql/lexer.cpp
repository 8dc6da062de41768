#include "sqleval/sql/lexer.hpp"

#include <cctype>

#include "sqleval/errors.hpp"

namespace sqleval::sql {

std::string Token::upper() const {
  std::string s = text;
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (c & 0x80); }
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$'; }

}  // namespace

std::vector<Token> tokenize(std::string_view s, Dialect dialect) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = s.size();

  auto read_quoted = [&](char open, char close, bool backslash_escapes) {
    const std::size_t start = i;
    std::string content;
    ++i;
    for (;;) {
      if (i >= n) throw ParseError(start, "unterminated quoted text");
      const char c = s[i];
      if (backslash_escapes && c == '\\' && i + 1 < n) {
        const char e = s[i + 1];
        switch (e) {
          case 'n': content += '\n'; break;
          case 't': content += '\t'; break;
          case 'r': content += '\r'; break;
          case '0': content += '\0'; break;
          default: content += e; break;
        }
        i += 2;
        continue;
      }
      if (c == close) {
        if (close != ']' && i + 1 < n && s[i + 1] == close) {
          content += close;
          i += 2;
          continue;
        }
        ++i;
        break;
      }
      content += c;
      ++i;
    }
    (void)open;
    return content;
  };

  while (i < n) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && s[i + 1] == '-') {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    if (c == '#' && dialect == Dialect::mysql) {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '*') {
      const std::size_t start = i;
      i += 2;
      while (i + 1 < n && !(s[i] == '*' && s[i + 1] == '/')) ++i;
      if (i + 1 >= n) throw ParseError(start, "unterminated comment");
      i += 2;
      continue;
    }

    Token t;
    t.offset = i;
    if ((c == 'x' || c == 'X') && i + 1 < n && s[i + 1] == '\'') {
      ++i;
      t.type = TokenType::blob;
      t.text = read_quoted('\'', '\'', false);
    } else if (ident_start(c)) {
      const std::size_t start = i;
      while (i < n && ident_char(s[i])) ++i;
      t.type = TokenType::ident;
      t.text = std::string(s.substr(start, i - start));
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      const std::size_t start = i;
      if (c == '0' && i + 1 < n && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        i += 2;
        while (i < n && std::isxdigit(static_cast<unsigned char>(s[i]))) ++i;
      } else {
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i < n && s[i] == '.') {
          ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
        if (i < n && (s[i] == 'e' || s[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (s[j] == '+' || s[j] == '-')) ++j;
          if (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) {
            i = j;
            while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
          }
        }
      }
      if (i < n && ident_start(s[i])) throw ParseError(start, "malformed number");
      t.type = TokenType::number;
      t.text = std::string(s.substr(start, i - start));
    } else if (c == '\'') {
      t.type = TokenType::string;
      t.text = read_quoted('\'', '\'', dialect == Dialect::mysql);
    } else if (c == '"') {
      if (dialect == Dialect::mysql) {
        t.type = TokenType::string;
        t.text = read_quoted('"', '"', true);
      } else {
        t.type = TokenType::quoted_ident;
        t.quote = '"';
        t.text = read_quoted('"', '"', false);
      }
    } else if (c == '`') {
      t.type = TokenType::quoted_ident;
      t.quote = '`';
      t.text = read_quoted('`', '`', false);
    } else if (c == '[' && dialect == Dialect::sqlite) {
      t.type = TokenType::quoted_ident;
      t.quote = '[';
      t.text = read_quoted('[', ']', false);
    } else {
      static const char* const two[] = {"||", "<=", ">=", "<>", "!=", "==", "<<", ">>"};
      t.type = TokenType::op;
      bool matched = false;
      if (i + 1 < n) {
        for (const char* op : two) {
          if (s[i] == op[0] && s[i + 1] == op[1]) {
            t.text = op;
            i += 2;
            matched = true;
            break;
          }
        }
      }
      if (!matched) {
        static const std::string_view singles = "(),.;+-*/%<>=&|~?";
        if (singles.find(c) == std::string_view::npos)
          throw ParseError(i, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.type = TokenType::end;
  end.offset = n;
  out.push_back(end);
  return out;
}

}  // namespace sqleval::sql
