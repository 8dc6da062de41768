#include "sqleval/gateway/prompt.hpp"

#include <cctype>

namespace sqleval::gateway {

namespace {

constexpr const char* kSqlSystem =
    "You translate questions about a relational database into a single SQLite SELECT statement. "
    "Answer with the SQL only, inside one ```sql code block.";

constexpr const char* kAugmentSystem =
    "You write new benchmark items for a text-to-SQL evaluation. Each item is a natural-language question and "
    "one SQLite SELECT statement answering it. Reply with a JSON object {\"question\": ..., \"sql\": ...}.";

std::string trim(std::string s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_semicolons(std::string s) {
  s = trim(std::move(s));
  while (!s.empty() && s.back() == ';') s = trim(s.substr(0, s.size() - 1));
  return s;
}

bool keyword_at(const std::string& s, std::size_t i, const char* kw) {
  std::size_t n = std::char_traits<char>::length(kw);
  if (i + n > s.size()) return false;
  if (i > 0 && (std::isalnum(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '_')) return false;
  for (std::size_t k = 0; k < n; ++k)
    if (std::toupper(static_cast<unsigned char>(s[i + k])) != kw[k]) return false;
  return i + n == s.size() || !(std::isalnum(static_cast<unsigned char>(s[i + n])) || s[i + n] == '_');
}

}  // namespace

std::string system_text(const Prompt& p) { return p.sql_task() ? kSqlSystem : kAugmentSystem; }

std::string user_text(const Prompt& p) {
  std::string out;
  if (const auto* t = p.sql_task()) {
    out += "Database schema:\n" + t->schema_text + "\n";
    for (const auto& e : t->exemplars) out += "Question: " + e.question + "\nSQL: " + e.sql + "\n\n";
    out += "Question: " + t->question + "\nSQL:";
    return out;
  }
  const auto& t = *p.augment_task();
  const auto& info = sql::subcategory_info(t.target);
  out += "Database schema:\n" + t.schema_text + "\n";
  out += "Target query class " + t.target.subcategory_code() + " (" + std::string(info.name) +
         "): " + std::string(info.trigger) + "\n";
  out += "The SQL must use this construct and nothing more complex.\n";
  for (const auto& e : t.exemplars) out += "Example question: " + e.question + "\nExample SQL: " + e.sql + "\n\n";
  out += "Write a new item different from the examples. Variant " + std::to_string(t.attempt) + ".";
  return out;
}

std::string prompt_text(const Prompt& p) {
  return std::string("[") + kPromptTemplateVersion + "]\n" + system_text(p) + "\n---\n" + user_text(p);
}

std::string cache_material(const Prompt& p) {
  std::string id = p.sql_task() ? "sql dp=" + p.sql_task()->dp_id + " db=" + p.sql_task()->db_id
                                : "augment db=" + p.augment_task()->db_id;
  return prompt_text(p) + "\n#" + id;
}

std::string extract_sql(const std::string& reply) {
  const auto fence = reply.find("```");
  if (fence != std::string::npos) {
    auto body = reply.find('\n', fence);
    const auto close = reply.find("```", fence + 3);
    if (body != std::string::npos && close != std::string::npos && body < close)
      return strip_semicolons(reply.substr(body + 1, close - body - 1));
    if (close != std::string::npos) {
      // single-line fence: ```SELECT 1```
      std::string inner = reply.substr(fence + 3, close - fence - 3);
      if (inner.rfind("sql", 0) == 0) inner = inner.substr(3);
      return strip_semicolons(inner);
    }
  }
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (keyword_at(reply, i, "SELECT") || keyword_at(reply, i, "WITH")) {
      // up to the first semicolon outside quotes
      char quote = 0;
      std::size_t j = i;
      for (; j < reply.size(); ++j) {
        const char c = reply[j];
        if (quote) {
          if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"' || c == '`') {
          quote = c;
        } else if (c == ';') {
          break;
        }
      }
      return strip_semicolons(reply.substr(i, j - i));
    }
  }
  return strip_semicolons(reply);
}

}  // namespace sqleval::gateway
