#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sqleval/data/result.hpp"
#include "sqleval/data/schema.hpp"

namespace sqleval::data {

enum class Engine { sqlite, mysql };

const char* to_string(Engine e);
Engine engine_from_string(const std::string& s);

struct DatabaseRef {
  std::string db_id;
  Engine engine = Engine::sqlite;
  std::string location;  // file path or connection descriptor
  DatabaseSchema schema;
};

inline constexpr int kDefaultTimeoutMs = 30000;
inline constexpr std::size_t kDefaultRowCap = 100000;
inline constexpr int kDefaultRepetitions = 5;

// One open handle to a database. Not thread-safe; confine to one worker.
class Connection {
 public:
  virtual ~Connection() = default;

  // Runs one statement and captures up to row_cap rows. Throws ExecError,
  // Timeout or ConnectionError.
  virtual ResultTable query(const std::string& sql, int timeout_ms, std::size_t row_cap) = 0;

  // Runs a statement and discards rows; returns elapsed wall-clock ms.
  virtual double run_discarding(const std::string& sql, int timeout_ms) = 0;

  virtual DatabaseSchema introspect() = 0;
};

class Driver {
 public:
  virtual ~Driver() = default;
  virtual std::unique_ptr<Connection> open(const DatabaseRef& db, bool read_only) = 0;
};

// Throws ConnectionError for engines not compiled in.
Driver& driver_for(Engine e);

std::unique_ptr<Connection> open_connection(const DatabaseRef& db, bool read_only = true);

// Read-only execution; the ordered flag comes from parsing the statement.
ResultTable execute_query(const DatabaseRef& db, const std::string& sql, int timeout_ms = kDefaultTimeoutMs,
                          std::size_t row_cap = kDefaultRowCap);
ResultTable execute_query(Connection& conn, const std::string& sql, int timeout_ms = kDefaultTimeoutMs,
                          std::size_t row_cap = kDefaultRowCap);

// One untimed warm-up, then `repetitions` timed runs. A timeout sets
// timeout=true and keeps the samples taken so far.
TimingStats measure_time(const DatabaseRef& db, const std::string& sql, int repetitions = kDefaultRepetitions,
                         int timeout_ms = kDefaultTimeoutMs);
TimingStats measure_time(Connection& conn, const std::string& sql, int repetitions = kDefaultRepetitions,
                         int timeout_ms = kDefaultTimeoutMs);

// True iff the statement parses and has a top-level ORDER BY.
bool has_top_level_order(const std::string& sql);

// Hands out read-only connections to one database; connections are reused.
class ConnectionPool {
 public:
  explicit ConnectionPool(DatabaseRef db) : db_(std::move(db)) {}

  class Lease {
   public:
    Lease(ConnectionPool* pool, std::unique_ptr<Connection> conn) : pool_(pool), conn_(std::move(conn)) {}
    Lease(Lease&&) noexcept = default;
    Lease& operator=(Lease&&) = delete;
    ~Lease() {
      if (pool_ && conn_) pool_->release(std::move(conn_));
    }
    Connection& operator*() { return *conn_; }
    Connection* operator->() { return conn_.get(); }

   private:
    ConnectionPool* pool_;
    std::unique_ptr<Connection> conn_;
  };

  Lease acquire();
  const DatabaseRef& db() const { return db_; }

 private:
  void release(std::unique_ptr<Connection> conn);

  DatabaseRef db_;
  std::mutex mu_;
  std::vector<std::unique_ptr<Connection>> idle_;
};

}  // namespace sqleval::data
