#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/data/driver.hpp"

namespace sqleval::data {

// db_id -> database. Loaded from a JSON file of the form
//   {"databases": {"<id>": {"engine": "sqlite", "path": "..."}}}
// where an entry may give "init_script" (SQL text) instead of "path"; such
// databases are built once under <workdir>/dbs/. Relative paths resolve
// against the catalog file's directory.
class Catalog {
 public:
  Catalog() = default;

  static Catalog load(const std::filesystem::path& file, const std::filesystem::path& workdir);

  void add(DatabaseRef db);
  bool contains(const std::string& db_id) const { return dbs_.count(db_id) > 0; }
  const DatabaseRef& get(const std::string& db_id) const;  // NotFound
  std::vector<std::string> ids() const;
  const std::filesystem::path& source() const { return source_; }

  nlohmann::json to_json() const;

 private:
  std::map<std::string, DatabaseRef> dbs_;
  std::filesystem::path source_;
};

// Builds a SQLite file from a SQL script; reuses an up-to-date existing file.
void materialize_sqlite(const std::filesystem::path& script, const std::filesystem::path& target);

}  // namespace sqleval::data
