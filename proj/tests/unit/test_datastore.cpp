#include <doctest.h>

#include <map>
#include <set>

#include "sqleval/data/catalog.hpp"
#include "sqleval/data/driver.hpp"
#include "sqleval/data/scaling.hpp"
#include "sqleval/data/sqlite.hpp"
#include "sqleval/errors.hpp"
#include "sqleval/util/files.hpp"
#include "support/workdir.hpp"

using namespace sqleval;
using namespace sqleval::data;
using sqleval::testing::demo_catalog;
using sqleval::testing::TempDir;

namespace {

DatabaseRef make_db(const std::filesystem::path& dir, const std::string& id, const std::string& script) {
  const auto file = dir / (id + ".sqlite");
  {
    SqliteDb db(file, false);
    db.exec(script);
  }
  DatabaseRef ref{id, Engine::sqlite, file.string(), {}};
  ref.schema = open_connection(ref)->introspect();
  return ref;
}

std::int64_t count(const DatabaseRef& db, const std::string& sql) {
  auto t = execute_query(db, sql);
  return std::get<std::int64_t>(t.rows.at(0).at(0));
}

std::map<std::string, double> frequencies(const DatabaseRef& db, const std::string& table, const std::string& col) {
  auto t = execute_query(db, "SELECT " + col + ", COUNT(*) FROM " + table + " GROUP BY 1");
  double total = 0;
  std::map<std::string, double> f;
  for (const auto& r : t.rows) {
    const double n = static_cast<double>(std::get<std::int64_t>(r[1]));
    f[cell_text(r[0])] += n;
    total += n;
  }
  for (auto& [_, v] : f) v /= total;
  return f;
}

double tvd(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  std::set<std::string> keys;
  for (const auto& [k, _] : a) keys.insert(k);
  for (const auto& [k, _] : b) keys.insert(k);
  double d = 0;
  for (const auto& k : keys) {
    const double x = a.count(k) ? a.at(k) : 0.0;
    const double y = b.count(k) ? b.at(k) : 0.0;
    d += std::abs(x - y);
  }
  return d / 2;
}

}  // namespace

TEST_CASE("execute_query basics") {
  const auto& db = demo_catalog().get("company");
  auto t = execute_query(db, "SELECT 1 AS x");
  CHECK(t.columns == std::vector<std::string>{"x"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == Cell{std::int64_t{1}});
  CHECK_FALSE(t.ordered);
  CHECK(execute_query(db, "SELECT id FROM dept ORDER BY id DESC").ordered);
  CHECK_THROWS_AS(execute_query(db, "SELECT a FROM missing_table"), ExecError);
  CHECK_THROWS_AS(execute_query(db, "DELETE FROM dept"), ExecError);
}

TEST_CASE("row cap truncates") {
  const auto& db = demo_catalog().get("company");
  // 200 * 200 rows = 40000 > cap + 10
  auto t = execute_query(db, "SELECT a.id, b.id FROM emp a, emp b", 30000, 10000);
  CHECK(t.truncated);
  CHECK(t.rows.size() == 10000);
  auto exact = execute_query(db, "SELECT id FROM emp", 30000, 200);
  CHECK_FALSE(exact.truncated);
  CHECK(exact.rows.size() == 200);
}

TEST_CASE("median and timing") {
  CHECK(median({3, 1, 2, 9, 2}) == 2.0);
  CHECK(median({1, 2, 3, 4}) == 2.5);
  const auto& db = demo_catalog().get("company");
  auto stats = measure_time(db, "SELECT COUNT(*) FROM emp", 5, 30000);
  CHECK(stats.samples.size() == 5);
  CHECK_FALSE(stats.timeout);
  CHECK(stats.median_ms == median(stats.samples));
}

TEST_CASE("catalog reports missing databases") {
  CHECK_THROWS_AS(demo_catalog().get("nope"), NotFound);
  CHECK(demo_catalog().ids() == std::vector<std::string>{"company", "school"});
  DatabaseRef my{"m", Engine::mysql, "mysql://localhost/x", {}};
  CHECK_THROWS_AS(open_connection(my), ConnectionError);
}

TEST_CASE("introspection reads keys") {
  const auto& schema = demo_catalog().get("company").schema;
  const auto* emp = schema.table("emp");
  REQUIRE(emp);
  CHECK(emp->primary_key() == std::vector<std::string>{"id"});
  REQUIRE(emp->foreign_keys.size() == 2);
  CHECK(emp->foreign_keys[0].parent_table == "dept");
  CHECK(emp->foreign_keys[1].parent_table == "emp");
  CHECK(emp->column("manager_id")->nullable);
  CHECK_FALSE(emp->column("dept_id")->nullable);
  bool email_unique = false;
  for (const auto& k : emp->unique_keys) email_unique |= k == std::vector<std::string>{"email"};
  CHECK(email_unique);
}

TEST_CASE("foreign key order") {
  DatabaseSchema s;
  TableSchema emp{"emp", {{"id", "INTEGER", false, true}, {"dept_id", "INTEGER", false, false},
                          {"manager_id", "INTEGER", true, false}},
                  {{{"dept_id"}, "dept", {"id"}}, {{"manager_id"}, "emp", {"id"}}}, {{"id"}}};
  TableSchema dept{"dept", {{"id", "INTEGER", false, true}}, {}, {{"id"}}};
  s.tables = {emp, dept};
  auto o = fk_topological_order(s);
  CHECK(o.tables == std::vector<std::string>{"dept", "emp"});
  REQUIRE(o.deferred.size() == 1);
  CHECK(o.deferred[0].table == "emp");
  CHECK(o.deferred[0].fk.columns == std::vector<std::string>{"manager_id"});

  DatabaseSchema independent;
  independent.tables = {TableSchema{"r", {}, {}, {}}, TableSchema{"s", {}, {}, {}}};
  CHECK(fk_topological_order(independent).tables == std::vector<std::string>{"r", "s"});

  DatabaseSchema strict_cycle;
  strict_cycle.tables = {TableSchema{"a", {{"b_id", "INTEGER", false, false}}, {{{"b_id"}, "b", {"id"}}}, {}},
                         TableSchema{"b", {{"a_id", "INTEGER", false, false}}, {{{"a_id"}, "a", {"id"}}}, {}}};
  CHECK_THROWS_AS(fk_topological_order(strict_cycle), CyclicFkError);

  DatabaseSchema soft_cycle = strict_cycle;
  soft_cycle.tables[1].columns[0].nullable = true;
  auto soft = fk_topological_order(soft_cycle);
  CHECK(soft.tables == std::vector<std::string>{"b", "a"});
  CHECK(soft.deferred.size() == 1);
}

TEST_CASE("factor one is the identity and the source is untouched") {
  TempDir work("scale1");
  const auto& db = demo_catalog().get("company");
  const std::string before = util::read_file(db.location);
  auto scaled = scale_database(db, 1, 42, work.path());
  CHECK(scaled.db.location != db.location);
  for (const auto& t : db.schema.tables) {
    const std::string q = "SELECT * FROM " + t.name + " ORDER BY 1";
    CHECK(execute_query(db, q).rows == execute_query(scaled.db, q).rows);
  }
  CHECK(util::read_file(db.location) == before);
}

TEST_CASE("factor ten multiplies rows and keeps keys intact") {
  TempDir work("scale10");
  const auto& db = demo_catalog().get("company");
  const std::string before = util::read_file(db.location);
  auto scaled = scale_database(db, 10, 7, work.path());
  for (const auto& t : db.schema.tables) {
    CAPTURE(t.name);
    CHECK(count(scaled.db, "SELECT COUNT(*) FROM " + t.name) == 10 * count(db, "SELECT COUNT(*) FROM " + t.name));
  }
  CHECK(foreign_key_orphans(scaled.db) == 0);
  CHECK(count(scaled.db, "SELECT COUNT(*) - COUNT(DISTINCT email) FROM emp") == 0);
  CHECK(count(scaled.db, "SELECT COUNT(*) FROM emp e LEFT JOIN emp m ON e.manager_id = m.id "
                         "WHERE e.manager_id IS NOT NULL AND m.id IS NULL") == 0);
  CHECK(count(scaled.db, "SELECT COUNT(*) FROM emp WHERE manager_id IS NOT NULL AND id > 200") > 0);
  CHECK(tvd(frequencies(db, "emp", "title"), frequencies(scaled.db, "emp", "title")) <= 0.1);
  CHECK(util::read_file(db.location) == before);
  CHECK(scaled.db.schema.tables.size() == db.schema.tables.size());
  CHECK(open_connection(scaled.db)->introspect() == db.schema);
}

TEST_CASE("scaling is deterministic for a fixed seed") {
  TempDir a("det-a"), b("det-b");
  const auto& db = demo_catalog().get("school");
  auto x = scale_database(db, 3, 99, a.path());
  auto y = scale_database(db, 3, 99, b.path());
  for (const auto& t : db.schema.tables) {
    const std::string q = "SELECT * FROM " + t.name + " ORDER BY rowid";
    CHECK(execute_query(x.db, q).rows == execute_query(y.db, q).rows);
  }
  auto z = scale_database(db, 3, 100, b.path());
  CHECK(execute_query(x.db, "SELECT * FROM students ORDER BY rowid").rows !=
        execute_query(z.db, "SELECT * FROM students ORDER BY rowid").rows);
}

TEST_CASE("categorical fidelity on a two-valued column") {
  TempDir work("tvd");
  std::string script = "CREATE TABLE r (id INTEGER PRIMARY KEY, c TEXT);";
  for (int i = 1; i <= 200; ++i) script += "INSERT INTO r VALUES (" + std::to_string(i) + ", '" + (i <= 120 ? "A" : "B") + "');";
  auto db = make_db(work.path(), "two", script);
  auto scaled = scale_database(db, 10, 5, work.path());
  CHECK(count(scaled.db, "SELECT COUNT(*) FROM r") == 2000);
  CHECK(tvd(frequencies(db, "r", "c"), frequencies(scaled.db, "r", "c")) <= 0.1);
}

TEST_CASE("composite unique keys stay unique") {
  TempDir work("composite");
  std::string script =
      "CREATE TABLE p (id INTEGER PRIMARY KEY, code TEXT NOT NULL UNIQUE);"
      "CREATE TABLE q (id INTEGER PRIMARY KEY, a INTEGER NOT NULL, b INTEGER NOT NULL, UNIQUE (a, b));";
  for (int i = 1; i <= 30; ++i) {
    script += "INSERT INTO p VALUES (" + std::to_string(i) + ", 'c" + std::to_string(i) + "');";
    script += "INSERT INTO q VALUES (" + std::to_string(i) + ", " + std::to_string(i % 6) + ", " + std::to_string(i) + ");";
  }
  auto db = make_db(work.path(), "uniq", script);
  auto scaled = scale_database(db, 4, 1, work.path());
  CHECK(count(scaled.db, "SELECT COUNT(*) FROM p") == 120);
  CHECK(count(scaled.db, "SELECT COUNT(DISTINCT code) FROM p") == 120);
  CHECK(count(scaled.db, "SELECT COUNT(*) FROM (SELECT DISTINCT a, b FROM q)") == 120);
  CHECK(count(scaled.db, "SELECT COUNT(*) FROM p WHERE code LIKE 'c%\\_s%' ESCAPE '\\'") == 90);
}

TEST_CASE("exhausted composite key space is a capacity error") {
  TempDir work("exhausted");
  std::string script = "CREATE TABLE q (id INTEGER PRIMARY KEY, a INTEGER NOT NULL, b INTEGER NOT NULL, UNIQUE (a, b));";
  for (int i = 0; i < 4; ++i)
    script += "INSERT INTO q VALUES (" + std::to_string(i + 1) + ", " + std::to_string(i % 2) + ", " + std::to_string(i / 2) + ");";
  auto db = make_db(work.path(), "full", script);
  CHECK_THROWS_AS(scale_database(db, 2, 1, work.path()), CapacityError);
}

TEST_CASE("cross product times out") {
  TempDir work("timeout");
  auto scaled = scale_database(demo_catalog().get("company"), 10, 3, work.path());
  auto stats = measure_time(scaled.db, "SELECT COUNT(*) FROM emp a, emp b, emp c", 3, 100);
  CHECK(stats.timeout);
  CHECK_THROWS_AS(execute_query(scaled.db, "SELECT COUNT(*) FROM emp a, emp b, emp c", 100), Timeout);
}
