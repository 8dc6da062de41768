#include "sqleval/data/schema.hpp"

#include <algorithm>
#include <cctype>

namespace sqleval::data {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

const ColumnInfo* TableSchema::column(const std::string& n) const {
  for (const auto& c : columns)
    if (lower(c.name) == lower(n)) return &c;
  return nullptr;
}

std::vector<std::string> TableSchema::primary_key() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.pk) out.push_back(c.name);
  return out;
}

const TableSchema* DatabaseSchema::table(const std::string& n) const {
  for (const auto& t : tables)
    if (lower(t.name) == lower(n)) return &t;
  return nullptr;
}

sql::SchemaInfo DatabaseSchema::info() const {
  sql::SchemaInfo out;
  for (const auto& t : tables) {
    auto& cols = out[lower(t.name)];
    for (const auto& c : t.columns) cols.push_back(lower(c.name));
  }
  return out;
}

std::string DatabaseSchema::text() const {
  std::string out;
  for (const auto& t : tables) {
    out += "CREATE TABLE " + t.name + " (";
    bool first = true;
    for (const auto& c : t.columns) {
      out += (first ? "" : ", ") + c.name + (c.type.empty() ? "" : " " + c.type);
      if (c.pk) out += " PRIMARY KEY";
      else if (!c.nullable) out += " NOT NULL";
      first = false;
    }
    for (const auto& fk : t.foreign_keys)
      out += ", FOREIGN KEY (" + join(fk.columns) + ") REFERENCES " + fk.parent_table + "(" + join(fk.parent_columns) +
             ")";
    out += ");\n";
  }
  return out;
}

nlohmann::json to_json(const DatabaseSchema& s) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : s.tables) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : t.columns)
      cols.push_back({{"name", c.name}, {"type", c.type}, {"nullable", c.nullable}, {"pk", c.pk}});
    nlohmann::json fks = nlohmann::json::array();
    for (const auto& fk : t.foreign_keys)
      fks.push_back({{"columns", fk.columns}, {"parent_table", fk.parent_table}, {"parent_columns", fk.parent_columns}});
    tables.push_back({{"name", t.name}, {"columns", cols}, {"foreign_keys", fks}, {"unique_keys", t.unique_keys}});
  }
  return {{"tables", tables}};
}

}  // namespace sqleval::data
