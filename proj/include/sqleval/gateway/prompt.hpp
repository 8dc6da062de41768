#pragma once

#include <string>
#include <variant>
#include <vector>

#include "sqleval/sql/taxonomy.hpp"

namespace sqleval::gateway {

struct Exemplar {
  std::string question;
  std::string sql;
  bool operator==(const Exemplar&) const = default;
};

// Translate one question into SQL.
struct SqlTask {
  std::string dp_id;
  std::string db_id;
  std::string question;
  std::string schema_text;
  std::vector<Exemplar> exemplars;  // train-split demonstrations
};

// Propose a new question/SQL pair in a target subcategory.
struct AugmentTask {
  sql::TaxonomyLabel target;
  std::string db_id;
  std::string schema_text;
  std::vector<Exemplar> exemplars;
  int attempt = 0;
};

struct Prompt {
  std::variant<SqlTask, AugmentTask> task;
  int iteration = 0;

  const SqlTask* sql_task() const { return std::get_if<SqlTask>(&task); }
  const AugmentTask* augment_task() const { return std::get_if<AugmentTask>(&task); }
};

inline constexpr const char* kPromptTemplateVersion = "v1";

std::string system_text(const Prompt& p);
std::string user_text(const Prompt& p);
// Full text used for caching and character-based token estimates.
std::string prompt_text(const Prompt& p);
// Prompt text plus the task identity (data point, database). Mock answers
// depend on the identity, so two tasks with equal text must not share a
// cache entry.
std::string cache_material(const Prompt& p);

// First fenced code block, else the first statement starting with SELECT or
// WITH; trailing semicolons trimmed.
std::string extract_sql(const std::string& reply);

}  // namespace sqleval::gateway
