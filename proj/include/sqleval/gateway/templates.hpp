#pragma once

#include <string>
#include <vector>

namespace sqleval::gateway::detail {

struct TemplateEntry {
  std::string db_id;
  std::string label;  // subcategory code
  std::string question;
  std::vector<std::string> sql;
};

// The 4.4 entries use ANY/ALL, which SQLite cannot execute; they exist so
// the generator answers every subcategory and validation rejects them.
const std::vector<TemplateEntry>& templates();

}  // namespace sqleval::gateway::detail
