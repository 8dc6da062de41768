#include "sqleval/data/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "sqleval/data/sqlite.hpp"
#include "sqleval/errors.hpp"
#include "sqleval/util/files.hpp"
#include "sqleval/util/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sqleval::data {

const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::categorical: return "categorical";
    case SamplerKind::histogram: return "histogram";
    case SamplerKind::text_suffix: return "text_suffix";
    case SamplerKind::fresh_key: return "fresh_key";
    case SamplerKind::foreign_key: return "foreign_key";
  }
  return "?";
}

json to_json(const ScalingProfile& p) {
  json tables = json::array();
  for (const auto& t : p.tables) {
    json cols = json::array();
    for (const auto& c : t.columns)
      cols.push_back({{"column", c.column},
                      {"sampler", to_string(c.kind)},
                      {"null_rate", c.null_rate},
                      {"distinct", c.distinct},
                      {"unique", c.unique}});
    tables.push_back({{"table", t.table}, {"rows", t.rows}, {"columns", cols}});
  }
  return {{"factor", p.factor}, {"seed", p.seed}, {"tables", tables}};
}

namespace {

std::string quote(const std::string& ident) {
  std::string out = "\"";
  for (char c : ident) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool fk_nullable(const TableSchema& t, const ForeignKey& fk) {
  for (const auto& c : fk.columns) {
    const auto* col = t.column(c);
    if (!col || !col->nullable) return false;
  }
  return true;
}

struct Edge {
  std::size_t child;
  std::size_t parent;
  const ForeignKey* fk;
  bool nullable;
};

// Tarjan's strongly connected components over table indices.
std::vector<int> components(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) adj[e.child].push_back(e.parent);
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int counter = 0, comps = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (auto w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
      } while (w != v);
      ++comps;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return comp;
}

}  // namespace

FkOrder fk_topological_order(const DatabaseSchema& schema) {
  const std::size_t n = schema.tables.size();
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) {
    std::string lower = schema.tables[i].name;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    pos[lower] = i;
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& fk : schema.tables[i].foreign_keys) {
      std::string parent = fk.parent_table;
      for (auto& c : parent) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      auto it = pos.find(parent);
      if (it == pos.end()) continue;
      edges.push_back({i, it->second, &fk, fk_nullable(schema.tables[i], fk)});
    }
  }

  FkOrder order;
  std::vector<Edge> kept;
  const auto comp = components(n, edges);
  for (const auto& e : edges) {
    const bool in_cycle = e.child == e.parent || comp[e.child] == comp[e.parent];
    if (in_cycle && e.nullable) {
      order.deferred.push_back({schema.tables[e.child].name, *e.fk});
    } else {
      kept.push_back(e);
    }
  }

  std::vector<int> pending(n, 0);
  for (const auto& e : kept) {
    if (e.child == e.parent)
      throw CyclicFkError("table '" + schema.tables[e.child].name + "' references itself through a NOT NULL key");
    ++pending[e.child];
  }
  std::vector<bool> done(n, false);
  for (std::size_t round = 0; round < n; ++round) {
    // Lowest schema position first keeps the order deterministic.
    std::size_t next = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && pending[i] == 0) {
        next = i;
        break;
      }
    if (next == n) {
      std::string names;
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i]) names += (names.empty() ? "" : ", ") + schema.tables[i].name;
      throw CyclicFkError("foreign keys form a NOT NULL cycle among: " + names);
    }
    done[next] = true;
    order.tables.push_back(schema.tables[next].name);
    for (const auto& e : kept)
      if (e.parent == next) --pending[e.child];
  }
  return order;
}

namespace {

using Tuple = std::vector<Cell>;

bool any_null(const Tuple& t) {
  return std::any_of(t.begin(), t.end(), [](const Cell& c) { return is_null(c); });
}

struct ScaleJob {
  SqliteDb& db;
  const DatabaseSchema& schema;
  const FkOrder& order;
  int factor;
  std::uint64_t seed;
  ScalingProfile profile;

  // Rows designated to receive a deferred key after all inserts.
  struct Backfill {
    std::string table;
    const ForeignKey* fk;
    std::vector<std::int64_t> rowids;
  };
  std::vector<Backfill> backfills;

  std::vector<Row> read_rows(const TableSchema& t) {
    std::string cols;
    for (const auto& c : t.columns) cols += (cols.empty() ? "" : ", ") + quote(c.name);
    auto stmt = db.prepare("SELECT " + cols + " FROM " + quote(t.name) + " ORDER BY rowid");
    std::vector<Row> rows;
    while (stmt.step()) {
      Row r;
      for (std::size_t i = 0; i < t.columns.size(); ++i) r.push_back(stmt.column(static_cast<int>(i)));
      rows.push_back(std::move(r));
    }
    return rows;
  }

  std::vector<Tuple> key_pool(const std::string& table, const std::vector<std::string>& cols) {
    std::string list;
    for (const auto& c : cols) list += (list.empty() ? "" : ", ") + quote(c);
    auto stmt = db.prepare("SELECT DISTINCT " + list + " FROM " + quote(table) + " ORDER BY " + list);
    std::vector<Tuple> pool;
    while (stmt.step()) {
      Tuple t;
      for (std::size_t i = 0; i < cols.size(); ++i) t.push_back(stmt.column(static_cast<int>(i)));
      if (!any_null(t)) pool.push_back(std::move(t));
    }
    return pool;
  }

  bool is_deferred(const std::string& table, const ForeignKey& fk) const {
    for (const auto& d : order.deferred)
      if (d.table == table && d.fk == fk) return true;
    return false;
  }

  // Per-column synthesized values for m new rows.
  std::vector<Cell> synthesize_column(const std::vector<Cell>& original, SamplerKind kind, std::size_t m,
                                      util::Rng& rng) {
    std::vector<Cell> out;
    out.reserve(m);
    std::vector<Cell> non_null;
    std::size_t nulls = 0;
    for (const auto& c : original) {
      if (is_null(c)) ++nulls;
      else non_null.push_back(c);
    }
    const std::size_t n = original.size();
    // Each original row contributes factor-1 synthetic rows' worth of quota,
    // so null counts scale exactly.
    const std::size_t null_quota = n ? nulls * m / n : 0;
    const std::size_t value_quota = m - null_quota;
    out.assign(null_quota, std::monostate{});

    switch (kind) {
      case SamplerKind::categorical: {
        // Stratified: every non-null original value repeated equally often.
        for (std::size_t i = 0; i < value_quota; ++i) out.push_back(non_null[i % non_null.size()]);
        break;
      }
      case SamplerKind::histogram: {
        std::vector<double> sorted;
        bool integral = true;
        for (const auto& c : non_null) {
          sorted.push_back(as_double(c));
          integral = integral && std::holds_alternative<std::int64_t>(c);
        }
        std::sort(sorted.begin(), sorted.end());
        const std::size_t buckets = std::min<std::size_t>(kHistogramBuckets, sorted.size());
        for (std::size_t i = 0; i < value_quota; ++i) {
          const std::size_t b = i % buckets;
          const double lo = sorted[b * sorted.size() / buckets];
          const double hi = sorted[std::min(sorted.size() - 1, (b + 1) * sorted.size() / buckets)];
          const double v = lo + (hi - lo) * rng.unit();
          if (integral) out.push_back(static_cast<std::int64_t>(std::llround(v)));
          else out.push_back(v);
        }
        break;
      }
      case SamplerKind::text_suffix: {
        for (std::size_t i = 0; i < value_quota; ++i) {
          const Cell& src = non_null[i % non_null.size()];
          if (!std::holds_alternative<std::string>(src)) {
            out.push_back(src);
            continue;
          }
          std::string s = std::get<std::string>(src);
          for (std::size_t k = (s.size() + 1) / 2; k < s.size(); ++k)
            s[k] = static_cast<char>('a' + rng.below(26));
          out.push_back(std::move(s));
        }
        break;
      }
      case SamplerKind::fresh_key: {
        bool integral = !non_null.empty();
        bool numeric = !non_null.empty();
        double max_value = 0;
        for (const auto& c : non_null) {
          integral = integral && std::holds_alternative<std::int64_t>(c);
          numeric = numeric && is_numeric(c);
          if (is_numeric(c)) max_value = std::max(max_value, as_double(c));
        }
        for (std::size_t i = 1; i <= value_quota; ++i) {
          if (non_null.empty() || integral) {
            out.push_back(static_cast<std::int64_t>(max_value) + static_cast<std::int64_t>(i));
          } else if (numeric) {
            out.push_back(max_value + static_cast<double>(i));
          } else {
            out.push_back(cell_text(non_null[(i - 1) % non_null.size()]) + "_s" + std::to_string(i));
          }
        }
        break;
      }
      case SamplerKind::foreign_key:
        break;
    }
    rng.shuffle(out);
    return out;
  }

  void scale_table(const TableSchema& t) {
    const auto rows = read_rows(t);
    const std::size_t n = rows.size();
    const std::size_t m = n * static_cast<std::size_t>(factor - 1);
    const std::size_t ncols = t.columns.size();

    TableProfile tp;
    tp.table = t.name;
    tp.rows = n;

    std::map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < ncols; ++i) col_index[t.columns[i].name] = i;

    std::set<std::string> single_unique;
    for (const auto& key : t.unique_keys)
      if (key.size() == 1) single_unique.insert(key[0]);

    std::map<std::string, const ForeignKey*> fk_of;
    for (const auto& fk : t.foreign_keys)
      for (const auto& c : fk.columns)
        if (!fk_of.count(c)) fk_of[c] = &fk;

    std::vector<std::vector<Cell>> synth(ncols);
    std::vector<SamplerKind> kinds(ncols);
    for (std::size_t i = 0; i < ncols; ++i) {
      const auto& col = t.columns[i];
      std::vector<Cell> original;
      std::set<Cell> distinct;
      for (const auto& r : rows) {
        original.push_back(r[i]);
        if (!is_null(r[i])) distinct.insert(r[i]);
      }
      ColumnProfile cp;
      cp.column = col.name;
      cp.distinct = distinct.size();
      cp.unique = single_unique.count(col.name) > 0;
      cp.null_rate = n ? static_cast<double>(std::count_if(original.begin(), original.end(), is_null)) / n : 0.0;
      bool numeric = !distinct.empty() && std::all_of(distinct.begin(), distinct.end(), is_numeric);
      if (fk_of.count(col.name)) cp.kind = SamplerKind::foreign_key;
      else if (cp.unique || (n == 0 && col.pk)) cp.kind = SamplerKind::fresh_key;
      else if (distinct.size() <= kCategoricalLimit) cp.kind = SamplerKind::categorical;
      else if (numeric) cp.kind = SamplerKind::histogram;
      else cp.kind = SamplerKind::text_suffix;
      kinds[i] = cp.kind;
      if (cp.kind != SamplerKind::foreign_key && m > 0) {
        if (distinct.empty() && cp.kind != SamplerKind::fresh_key) {
          synth[i].assign(m, std::monostate{});
        } else {
          util::Rng rng(util::derive_seed(seed, t.name + "." + col.name));
          synth[i] = synthesize_column(original, cp.kind, m, rng);
        }
      }
      tp.columns.push_back(std::move(cp));
    }

    // Foreign keys: sample tuples from the parent's current key pool.
    struct FkPlan {
      const ForeignKey* fk;
      std::vector<std::size_t> cols;
      bool deferred;
      std::vector<bool> non_null;  // per new row
      std::vector<Tuple> pool;
      util::Rng rng{0};
    };
    std::vector<FkPlan> plans;
    for (const auto& fk : t.foreign_keys) {
      FkPlan p;
      p.fk = &fk;
      for (const auto& c : fk.columns) p.cols.push_back(col_index.at(c));
      p.deferred = is_deferred(t.name, fk);
      p.rng = util::Rng(util::derive_seed(seed, t.name + ".fk." + fk.parent_table + "." + fk.columns[0]));
      std::size_t null_rows = 0;
      for (const auto& r : rows) {
        Tuple tup;
        for (auto c : p.cols) tup.push_back(r[c]);
        null_rows += any_null(tup);
      }
      const std::size_t null_quota = n ? null_rows * m / n : 0;
      p.non_null.assign(m, true);
      std::fill(p.non_null.begin(), p.non_null.begin() + static_cast<std::ptrdiff_t>(null_quota), false);
      p.rng.shuffle(p.non_null);
      if (!p.deferred && m > 0) {
        p.pool = key_pool(fk.parent_table, fk.parent_columns);
        if (p.pool.empty() && null_quota < m)
          throw CapacityError("no parent keys in '" + fk.parent_table + "' for " + t.name);
      }
      plans.push_back(std::move(p));
    }

    // Composite unique keys must stay unique; single-column ones are fresh.
    std::vector<std::vector<std::size_t>> composite;
    for (const auto& key : t.unique_keys) {
      if (key.size() < 2) continue;
      std::vector<std::size_t> idx;
      for (const auto& c : key) idx.push_back(col_index.at(c));
      composite.push_back(std::move(idx));
    }
    std::vector<std::set<Tuple>> seen(composite.size());
    for (std::size_t k = 0; k < composite.size(); ++k)
      for (const auto& r : rows) {
        Tuple tup;
        for (auto c : composite[k]) tup.push_back(r[c]);
        if (!any_null(tup)) seen[k].insert(std::move(tup));
      }

    std::string cols, marks;
    for (const auto& c : t.columns) {
      cols += (cols.empty() ? "" : ", ") + quote(c.name);
      marks += marks.empty() ? "?" : ", ?";
    }
    auto insert = db.prepare("INSERT INTO " + quote(t.name) + " (" + cols + ") VALUES (" + marks + ")");
    util::Rng retry_rng(util::derive_seed(seed, t.name + ".retry"));
    std::vector<std::int64_t> new_rowids;
    new_rowids.reserve(m);

    for (std::size_t r = 0; r < m; ++r) {
      Row row(ncols);
      for (std::size_t i = 0; i < ncols; ++i)
        if (kinds[i] != SamplerKind::foreign_key) row[i] = synth[i][r];
      auto draw_fks = [&] {
        for (auto& p : plans) {
          if (p.deferred || !p.non_null[r]) {
            for (auto c : p.cols) row[c] = std::monostate{};
            continue;
          }
          const Tuple& tup = p.pool[p.rng.below(p.pool.size())];
          for (std::size_t k = 0; k < p.cols.size(); ++k) row[p.cols[k]] = tup[k];
        }
      };
      draw_fks();

      for (int attempt = 0;; ++attempt) {
        bool clash = false;
        for (std::size_t k = 0; k < composite.size() && !clash; ++k) {
          Tuple tup;
          for (auto c : composite[k]) tup.push_back(row[c]);
          clash = !any_null(tup) && seen[k].count(tup);
        }
        if (!clash) break;
        if (attempt >= 100) throw CapacityError("cannot find a fresh unique combination for " + t.name);
        draw_fks();
        for (const auto& key : composite)
          for (auto c : key)
            if (kinds[c] != SamplerKind::foreign_key && kinds[c] != SamplerKind::fresh_key && !rows.empty())
              row[c] = rows[retry_rng.below(rows.size())][c];
      }
      for (std::size_t k = 0; k < composite.size(); ++k) {
        Tuple tup;
        for (auto c : composite[k]) tup.push_back(row[c]);
        if (!any_null(tup)) seen[k].insert(std::move(tup));
      }

      insert.reset();
      for (std::size_t i = 0; i < ncols; ++i) insert.bind(static_cast<int>(i + 1), row[i]);
      try {
        insert.step();
      } catch (const ExecError& e) {
        throw CapacityError("insert into " + t.name + " failed: " + e.what());
      }
      new_rowids.push_back(sqlite3_last_insert_rowid(db.handle()));
    }

    for (auto& p : plans) {
      if (!p.deferred) continue;
      Backfill b{t.name, p.fk, {}};
      for (std::size_t r = 0; r < m; ++r)
        if (p.non_null[r]) b.rowids.push_back(new_rowids[r]);
      backfills.push_back(std::move(b));
    }
    profile.tables.push_back(std::move(tp));
  }

  void backfill() {
    for (const auto& b : backfills) {
      auto pool = key_pool(b.fk->parent_table, b.fk->parent_columns);
      if (pool.empty()) continue;
      std::string set;
      for (const auto& c : b.fk->columns) set += (set.empty() ? "" : ", ") + quote(c) + " = ?";
      auto update = db.prepare("UPDATE " + quote(b.table) + " SET " + set + " WHERE rowid = ?");
      util::Rng rng(util::derive_seed(seed, b.table + ".backfill." + b.fk->columns[0]));
      for (auto rowid : b.rowids) {
        const Tuple& tup = pool[rng.below(pool.size())];
        update.reset();
        int k = 1;
        for (const auto& c : tup) update.bind(k++, c);
        update.bind(k, rowid);
        update.step();
      }
    }
  }
};

}  // namespace

std::size_t foreign_key_orphans(const DatabaseRef& db) {
  SqliteDb handle(db.location, true);
  auto stmt = handle.prepare("PRAGMA foreign_key_check");
  std::size_t n = 0;
  while (stmt.step()) ++n;
  return n;
}

ScaledDatabase scale_database(const DatabaseRef& db, int factor, std::uint64_t seed, const fs::path& workdir) {
  if (factor < 1) throw ConfigError("scale factor must be >= 1");
  if (db.engine != Engine::sqlite) throw ConnectionError("scaling is implemented for sqlite databases only");

  const fs::path dir = workdir / "scaled" / (db.db_id + "_x" + std::to_string(factor));
  const fs::path file = dir / (db.db_id + ".sqlite");
  const fs::path manifest = dir / "profile.json";
  std::error_code ec;
  const auto source_time = fs::last_write_time(db.location, ec);
  const auto stamp = static_cast<long long>(source_time.time_since_epoch().count());

  if (fs::exists(file) && fs::exists(manifest)) {
    try {
      auto j = json::parse(util::read_file(manifest));
      if (j.at("seed").get<std::uint64_t>() == seed && j.at("source").get<std::string>() == db.location &&
          j.at("source_stamp").get<long long>() == stamp) {
        ScaledDatabase out{db, {}};
        out.db.location = file.string();
        out.profile.factor = factor;
        out.profile.seed = seed;
        return out;
      }
    } catch (const std::exception&) {
      // stale or partial manifest: rebuild
    }
  }

  const fs::path staging = dir.string() + ".staging." + std::to_string(seed);
  fs::remove_all(staging, ec);
  fs::create_directories(staging);
  const fs::path staged_file = staging / file.filename();
  {
    // Read through the driver so the source stays untouched.
    SqliteDb src(db.location, true);
    SqliteDb dst(staged_file, false);
    sqlite3_backup* backup = sqlite3_backup_init(dst.handle(), "main", src.handle(), "main");
    if (!backup) throw CapacityError("cannot copy " + db.location);
    sqlite3_backup_step(backup, -1);
    if (sqlite3_backup_finish(backup) != SQLITE_OK) throw CapacityError("copy of " + db.location + " failed");
  }

  ScaledDatabase out{db, {}};
  out.profile.factor = factor;
  out.profile.seed = seed;
  {
    SqliteDb dst(staged_file, false);
    const DatabaseSchema schema = dst.introspect();
    const FkOrder order = fk_topological_order(schema);
    ScaleJob job{dst, schema, order, factor, seed, out.profile, {}};
    if (factor > 1) {
      dst.exec("BEGIN");
      try {
        for (const auto& name : order.tables) job.scale_table(*schema.table(name));
        job.backfill();
        dst.exec("COMMIT");
      } catch (...) {
        dst.exec("ROLLBACK");
        throw;
      }
    }
    out.profile = std::move(job.profile);
    auto check = dst.prepare("PRAGMA foreign_key_check");
    if (check.step()) throw CapacityError("scaled copy of " + db.db_id + " violates a foreign key");
  }
  json m = to_json(out.profile);
  m["source"] = db.location;
  m["source_stamp"] = stamp;
  util::atomic_write(staging / "profile.json", m.dump(2));
  util::publish_directory(staging, dir);

  out.db.location = file.string();
  return out;
}

}  // namespace sqleval::data
