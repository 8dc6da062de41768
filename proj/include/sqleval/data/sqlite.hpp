#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include <sqlite3.h>

#include "sqleval/data/result.hpp"
#include "sqleval/data/schema.hpp"

namespace sqleval::data {

class SqliteStatement {
 public:
  SqliteStatement(sqlite3* db, const std::string& sql);
  SqliteStatement(const SqliteStatement&) = delete;
  SqliteStatement& operator=(const SqliteStatement&) = delete;
  SqliteStatement(SqliteStatement&& o) noexcept : db_(o.db_), stmt_(o.stmt_) { o.stmt_ = nullptr; }
  ~SqliteStatement();

  void bind(int index, const Cell& value);  // 1-based
  // Returns true while a row is available. Throws ExecError or Timeout.
  bool step();
  void reset();
  int column_count() const;
  std::string column_name(int i) const;
  Cell column(int i) const;
  bool read_only() const;

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

// Owns one sqlite3 handle. Timeouts are enforced through a progress handler
// armed per call with set_deadline.
class SqliteDb {
 public:
  SqliteDb(const std::filesystem::path& path, bool read_only);
  SqliteDb(const SqliteDb&) = delete;
  SqliteDb& operator=(const SqliteDb&) = delete;
  ~SqliteDb();

  sqlite3* handle() { return db_; }
  void exec(const std::string& sql);
  SqliteStatement prepare(const std::string& sql) { return SqliteStatement(db_, sql); }

  void set_deadline(int timeout_ms);
  void clear_deadline();
  bool deadline_passed() const { return deadline_hit_; }

  DatabaseSchema introspect();

 private:
  static int on_progress(void* self);

  sqlite3* db_ = nullptr;
  std::chrono::steady_clock::time_point deadline_{};
  bool armed_ = false;
  bool deadline_hit_ = false;
};

}  // namespace sqleval::data
