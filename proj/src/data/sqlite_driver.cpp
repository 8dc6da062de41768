#include <algorithm>
#include <cctype>

#include "sqleval/data/driver.hpp"
#include "sqleval/data/sqlite.hpp"
#include "sqleval/errors.hpp"

namespace sqleval::data {

namespace {

bool only_space_or_semicolons(const char* p) {
  for (; p && *p; ++p)
    if (!std::isspace(static_cast<unsigned char>(*p)) && *p != ';') return false;
  return true;
}

}  // namespace

SqliteStatement::SqliteStatement(sqlite3* db, const std::string& sql) : db_(db) {
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &stmt_, &tail) != SQLITE_OK) {
    const std::string msg = sqlite3_errmsg(db);
    sqlite3_finalize(stmt_);
    stmt_ = nullptr;
    if (sqlite3_errcode(db) == SQLITE_INTERRUPT) throw Timeout("query interrupted");
    throw ExecError(msg);
  }
  if (!stmt_) throw ExecError("empty statement");
  if (!only_space_or_semicolons(tail)) {
    sqlite3_finalize(stmt_);
    stmt_ = nullptr;
    throw ExecError("multiple statements are not supported");
  }
}

SqliteStatement::~SqliteStatement() { sqlite3_finalize(stmt_); }

void SqliteStatement::bind(int index, const Cell& value) {
  int rc = SQLITE_OK;
  switch (value.index()) {
    case 0: rc = sqlite3_bind_null(stmt_, index); break;
    case 1: rc = sqlite3_bind_int64(stmt_, index, std::get<std::int64_t>(value)); break;
    case 2: rc = sqlite3_bind_double(stmt_, index, std::get<double>(value)); break;
    case 3: {
      const auto& s = std::get<std::string>(value);
      rc = sqlite3_bind_text(stmt_, index, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
      break;
    }
    default: {
      const auto& b = std::get<Blob>(value).bytes;
      rc = sqlite3_bind_blob(stmt_, index, b.data(), static_cast<int>(b.size()), SQLITE_TRANSIENT);
      break;
    }
  }
  if (rc != SQLITE_OK) throw ExecError(sqlite3_errmsg(db_));
}

bool SqliteStatement::step() {
  const int rc = sqlite3_step(stmt_);
  if (rc == SQLITE_ROW) return true;
  if (rc == SQLITE_DONE) return false;
  if (rc == SQLITE_INTERRUPT) throw Timeout("query exceeded its time limit");
  throw ExecError(sqlite3_errmsg(db_));
}

void SqliteStatement::reset() {
  sqlite3_reset(stmt_);
  sqlite3_clear_bindings(stmt_);
}

int SqliteStatement::column_count() const { return sqlite3_column_count(stmt_); }

std::string SqliteStatement::column_name(int i) const {
  const char* n = sqlite3_column_name(stmt_, i);
  return n ? n : "";
}

Cell SqliteStatement::column(int i) const {
  switch (sqlite3_column_type(stmt_, i)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt_, i));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt_, i);
    case SQLITE_TEXT: {
      const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, i));
      return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, i)));
    }
    case SQLITE_BLOB: {
      const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt_, i));
      return Blob{std::vector<std::uint8_t>(p, p + sqlite3_column_bytes(stmt_, i))};
    }
    default: return std::monostate{};
  }
}

bool SqliteStatement::read_only() const { return sqlite3_stmt_readonly(stmt_) != 0; }

SqliteDb::SqliteDb(const std::filesystem::path& path, bool read_only) {
  const int flags = read_only ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  if (sqlite3_open_v2(path.c_str(), &db_, flags | SQLITE_OPEN_NOMUTEX, nullptr) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw ConnectionError("cannot open " + path.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  sqlite3_progress_handler(db_, 1000, &SqliteDb::on_progress, this);
  if (!read_only) exec("PRAGMA foreign_keys = ON");
}

SqliteDb::~SqliteDb() { sqlite3_close(db_); }

void SqliteDb::exec(const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw ExecError(msg);
  }
}

void SqliteDb::set_deadline(int timeout_ms) {
  deadline_ = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  armed_ = timeout_ms > 0;
  deadline_hit_ = false;
}

void SqliteDb::clear_deadline() { armed_ = false; }

int SqliteDb::on_progress(void* self) {
  auto* db = static_cast<SqliteDb*>(self);
  if (db->armed_ && std::chrono::steady_clock::now() >= db->deadline_) {
    db->deadline_hit_ = true;
    return 1;
  }
  return 0;
}

DatabaseSchema SqliteDb::introspect() {
  DatabaseSchema schema;
  auto tables = prepare(
      "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid");
  while (tables.step()) {
    TableSchema t;
    t.name = std::get<std::string>(tables.column(0));
    const std::string quoted = "\"" + t.name + "\"";

    auto cols = prepare("PRAGMA table_info(" + quoted + ")");
    std::vector<std::pair<int, std::string>> pk_order;
    while (cols.step()) {
      ColumnInfo c;
      c.name = std::get<std::string>(cols.column(1));
      c.type = cell_text(cols.column(2));
      const auto pk_pos = std::get<std::int64_t>(cols.column(5));
      c.pk = pk_pos > 0;
      c.nullable = std::get<std::int64_t>(cols.column(3)) == 0 && !c.pk;
      if (c.pk) pk_order.emplace_back(static_cast<int>(pk_pos), c.name);
      t.columns.push_back(std::move(c));
    }
    std::sort(pk_order.begin(), pk_order.end());
    if (!pk_order.empty()) {
      std::vector<std::string> pk;
      for (auto& [_, n] : pk_order) pk.push_back(n);
      t.unique_keys.push_back(std::move(pk));
    }

    auto fks = prepare("PRAGMA foreign_key_list(" + quoted + ")");
    std::int64_t current = -1;
    while (fks.step()) {
      const auto id = std::get<std::int64_t>(fks.column(0));
      if (id != current) {
        t.foreign_keys.push_back({});
        t.foreign_keys.back().parent_table = std::get<std::string>(fks.column(2));
        current = id;
      }
      t.foreign_keys.back().columns.push_back(std::get<std::string>(fks.column(3)));
      t.foreign_keys.back().parent_columns.push_back(cell_text(fks.column(4)));
    }
    // foreign_key_list reports keys last-declared first.
    std::reverse(t.foreign_keys.begin(), t.foreign_keys.end());

    auto indexes = prepare("PRAGMA index_list(" + quoted + ")");
    std::vector<std::string> unique_indexes;
    while (indexes.step()) {
      if (std::get<std::int64_t>(indexes.column(2)) == 0) continue;
      if (cell_text(indexes.column(3)) == "pk") continue;
      unique_indexes.push_back(std::get<std::string>(indexes.column(1)));
    }
    std::sort(unique_indexes.begin(), unique_indexes.end());
    for (const auto& name : unique_indexes) {
      auto info = prepare("PRAGMA index_info(\"" + name + "\")");
      std::vector<std::string> key;
      while (info.step()) key.push_back(cell_text(info.column(2)));
      t.unique_keys.push_back(std::move(key));
    }
    schema.tables.push_back(std::move(t));
  }
  return schema;
}

namespace {

class SqliteConnection final : public Connection {
 public:
  SqliteConnection(const std::string& path, bool read_only) : db_(path, read_only) {
    if (read_only) db_.exec("PRAGMA query_only = 1");
  }

  ResultTable query(const std::string& sql, int timeout_ms, std::size_t row_cap) override {
    Armed armed(db_, timeout_ms);
    auto stmt = db_.prepare(sql);
    if (!stmt.read_only()) throw ExecError("statement is not read-only");
    ResultTable t;
    const int n = stmt.column_count();
    for (int i = 0; i < n; ++i) t.columns.push_back(stmt.column_name(i));
    while (stmt.step()) {
      if (t.rows.size() == row_cap) {
        t.truncated = true;
        break;
      }
      Row row;
      row.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) row.push_back(stmt.column(i));
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  double run_discarding(const std::string& sql, int timeout_ms) override {
    Armed armed(db_, timeout_ms);
    const auto start = std::chrono::steady_clock::now();
    auto stmt = db_.prepare(sql);
    if (!stmt.read_only()) throw ExecError("statement is not read-only");
    while (stmt.step()) {
    }
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }

  DatabaseSchema introspect() override { return db_.introspect(); }

 private:
  struct Armed {
    Armed(SqliteDb& db, int timeout_ms) : db(db) { db.set_deadline(timeout_ms); }
    ~Armed() { db.clear_deadline(); }
    SqliteDb& db;
  };

  SqliteDb db_;
};

class SqliteDriver final : public Driver {
 public:
  std::unique_ptr<Connection> open(const DatabaseRef& db, bool read_only) override {
    if (!std::filesystem::exists(db.location)) throw ConnectionError("database file not found: " + db.location);
    return std::make_unique<SqliteConnection>(db.location, read_only);
  }
};

}  // namespace

Driver& sqlite_driver() {
  static SqliteDriver driver;
  return driver;
}

}  // namespace sqleval::data
