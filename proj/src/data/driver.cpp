#include "sqleval/data/driver.hpp"

#include "sqleval/errors.hpp"
#include "sqleval/sql/parser.hpp"

namespace sqleval::data {

Driver& sqlite_driver();

const char* to_string(Engine e) { return e == Engine::mysql ? "mysql" : "sqlite"; }

Engine engine_from_string(const std::string& s) {
  if (s == "sqlite") return Engine::sqlite;
  if (s == "mysql") return Engine::mysql;
  throw ConfigError("unknown engine '" + s + "'");
}

Driver& driver_for(Engine e) {
  switch (e) {
    case Engine::sqlite:
      return sqlite_driver();
    case Engine::mysql:
      break;
  }
  throw ConnectionError("engine '" + std::string(to_string(e)) + "' not compiled in");
}

std::unique_ptr<Connection> open_connection(const DatabaseRef& db, bool read_only) {
  return driver_for(db.engine).open(db, read_only);
}

bool has_top_level_order(const std::string& sql) {
  try {
    return !sql::parse_sql(sql).root.order_by.empty();
  } catch (const Error&) {
    return false;
  }
}

ResultTable execute_query(Connection& conn, const std::string& sql, int timeout_ms, std::size_t row_cap) {
  ResultTable t = conn.query(sql, timeout_ms, row_cap);
  t.ordered = has_top_level_order(sql);
  return t;
}

ResultTable execute_query(const DatabaseRef& db, const std::string& sql, int timeout_ms, std::size_t row_cap) {
  auto conn = open_connection(db, true);
  return execute_query(*conn, sql, timeout_ms, row_cap);
}

TimingStats measure_time(Connection& conn, const std::string& sql, int repetitions, int timeout_ms) {
  TimingStats stats;
  try {
    conn.run_discarding(sql, timeout_ms);
    for (int i = 0; i < repetitions; ++i) stats.samples.push_back(conn.run_discarding(sql, timeout_ms));
  } catch (const Timeout&) {
    stats.timeout = true;
  }
  stats.median_ms = median(stats.samples);
  return stats;
}

TimingStats measure_time(const DatabaseRef& db, const std::string& sql, int repetitions, int timeout_ms) {
  auto conn = open_connection(db, true);
  return measure_time(*conn, sql, repetitions, timeout_ms);
}

ConnectionPool::Lease ConnectionPool::acquire() {
  {
    std::lock_guard lock(mu_);
    if (!idle_.empty()) {
      auto c = std::move(idle_.back());
      idle_.pop_back();
      return Lease(this, std::move(c));
    }
  }
  return Lease(this, open_connection(db_, true));
}

void ConnectionPool::release(std::unique_ptr<Connection> conn) {
  std::lock_guard lock(mu_);
  idle_.push_back(std::move(conn));
}

}  // namespace sqleval::data
