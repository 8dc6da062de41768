#include "sqleval/data/catalog.hpp"

#include <mutex>

#include "sqleval/data/sqlite.hpp"
#include "sqleval/errors.hpp"
#include "sqleval/util/files.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sqleval::data {

void materialize_sqlite(const fs::path& script, const fs::path& target) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::error_code ec;
  if (fs::exists(target) && fs::last_write_time(target, ec) >= fs::last_write_time(script, ec)) return;
  fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".building";
  fs::remove(tmp, ec);
  {
    SqliteDb db(tmp, false);
    db.exec(util::read_file(script));
  }
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot publish " + target.string() + ": " + ec.message());
}

Catalog Catalog::load(const fs::path& file, const fs::path& workdir) {
  json j;
  try {
    j = json::parse(util::read_file(file));
  } catch (const json::exception& e) {
    throw ConfigError("catalog " + file.string() + ": " + e.what());
  }
  Catalog c;
  c.source_ = file;
  const fs::path base = file.parent_path();
  if (!j.contains("databases") || !j["databases"].is_object()) throw ConfigError("catalog lacks a databases object");
  for (const auto& [id, entry] : j["databases"].items()) {
    DatabaseRef db;
    db.db_id = id;
    db.engine = engine_from_string(entry.value("engine", "sqlite"));
    if (entry.contains("path")) {
      fs::path p = entry["path"].get<std::string>();
      db.location = (p.is_relative() ? base / p : p).string();
    } else if (entry.contains("init_script")) {
      fs::path script = entry["init_script"].get<std::string>();
      if (script.is_relative()) script = base / script;
      const fs::path target = workdir / "dbs" / (id + ".sqlite");
      materialize_sqlite(script, target);
      db.location = target.string();
    } else if (entry.contains("dsn")) {
      db.location = entry["dsn"].get<std::string>();
    } else {
      throw ConfigError("catalog entry '" + id + "' has neither path nor init_script");
    }
    if (db.engine == Engine::sqlite) db.schema = open_connection(db, true)->introspect();
    c.add(std::move(db));
  }
  return c;
}

void Catalog::add(DatabaseRef db) {
  const std::string id = db.db_id;
  dbs_[id] = std::move(db);
}

const DatabaseRef& Catalog::get(const std::string& db_id) const {
  auto it = dbs_.find(db_id);
  if (it == dbs_.end()) throw NotFound("unknown database '" + db_id + "'");
  return it->second;
}

std::vector<std::string> Catalog::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : dbs_) out.push_back(id);
  return out;
}

json Catalog::to_json() const {
  json out = json::array();
  for (const auto& [id, db] : dbs_) {
    json tables = json::array();
    for (const auto& t : db.schema.tables) tables.push_back(t.name);
    out.push_back({{"db_id", id}, {"engine", data::to_string(db.engine)}, {"tables", tables}});
  }
  return out;
}

}  // namespace sqleval::data
