#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/sql/ast.hpp"

namespace sqleval::data {

struct ColumnInfo {
  std::string name;
  std::string type;  // declared type as written
  bool nullable = true;
  bool pk = false;
  bool operator==(const ColumnInfo&) const = default;
};

struct ForeignKey {
  std::vector<std::string> columns;
  std::string parent_table;
  std::vector<std::string> parent_columns;
  bool operator==(const ForeignKey&) const = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnInfo> columns;
  std::vector<ForeignKey> foreign_keys;
  std::vector<std::vector<std::string>> unique_keys;  // includes the primary key
  bool operator==(const TableSchema&) const = default;

  const ColumnInfo* column(const std::string& name) const;
  std::vector<std::string> primary_key() const;
};

struct DatabaseSchema {
  std::vector<TableSchema> tables;  // creation order
  bool operator==(const DatabaseSchema&) const = default;

  const TableSchema* table(const std::string& name) const;
  // Lowercased table -> column names, as used by normalization.
  sql::SchemaInfo info() const;
  // CREATE-like summary used in generation prompts.
  std::string text() const;
};

nlohmann::json to_json(const DatabaseSchema& s);

}  // namespace sqleval::data
