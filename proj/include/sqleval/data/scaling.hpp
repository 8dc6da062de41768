#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/data/driver.hpp"
#include "sqleval/data/schema.hpp"

namespace sqleval::data {

struct DeferredFk {
  std::string table;
  ForeignKey fk;
};

// Insert order where every parent precedes its children. Foreign keys that
// close a cycle are deferred when nullable: their cells are inserted as NULL
// and backfilled once all tables are populated.
struct FkOrder {
  std::vector<std::string> tables;
  std::vector<DeferredFk> deferred;
};

// Throws CyclicFkError when a cycle has no nullable foreign key to break it.
FkOrder fk_topological_order(const DatabaseSchema& schema);

enum class SamplerKind { categorical, histogram, text_suffix, fresh_key, foreign_key };

const char* to_string(SamplerKind k);

struct ColumnProfile {
  std::string column;
  SamplerKind kind = SamplerKind::categorical;
  double null_rate = 0.0;
  std::size_t distinct = 0;  // non-null distinct values
  bool unique = false;
};

struct TableProfile {
  std::string table;
  std::size_t rows = 0;
  std::vector<ColumnProfile> columns;
};

struct ScalingProfile {
  int factor = 1;
  std::uint64_t seed = 0;
  std::vector<TableProfile> tables;
};

nlohmann::json to_json(const ScalingProfile& p);

inline constexpr std::size_t kCategoricalLimit = 256;
inline constexpr int kHistogramBuckets = 32;

struct ScaledDatabase {
  DatabaseRef db;
  ScalingProfile profile;
};

// Writes a scaled copy to <workdir>/scaled/<db_id>_x<factor>/ and returns a
// reference to it; the source database is opened read-only. An existing copy
// built from the same source with the same seed is reused.
ScaledDatabase scale_database(const DatabaseRef& db, int factor, std::uint64_t seed,
                              const std::filesystem::path& workdir);

// Rows reported by PRAGMA foreign_key_check.
std::size_t foreign_key_orphans(const DatabaseRef& db);

}  // namespace sqleval::data
