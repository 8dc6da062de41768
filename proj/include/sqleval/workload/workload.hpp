#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/data/catalog.hpp"
#include "sqleval/gateway/gateway.hpp"
#include "sqleval/sql/taxonomy.hpp"

namespace sqleval::workload {

enum class Split { train, eval };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct Provenance {
  enum class Kind { seed_benchmark, augmented };
  Kind kind = Kind::seed_benchmark;
  std::string benchmark;  // seed_benchmark
  std::string model_id;   // augmented
  std::string run_id;     // augmented

  static Provenance seed(std::string name) { return {Kind::seed_benchmark, std::move(name), {}, {}}; }
  static Provenance augmented(std::string model, std::string run) {
    return {Kind::augmented, {}, std::move(model), std::move(run)};
  }
  bool operator==(const Provenance&) const = default;
};

struct DataPoint {
  std::string id;
  std::string question;
  std::string gt_sql;
  std::string db_id;
  Split split = Split::eval;
  Provenance provenance;
  sql::TaxonomyLabel label;  // classify(gt_sql), recomputed on load

  bool operator==(const DataPoint&) const = default;
};

nlohmann::json to_json(const DataPoint& dp);
// Parses the stored fields; the label is recomputed by the caller.
DataPoint data_point_from_json(const nlohmann::json& j);

struct SplitStats {
  std::size_t train = 0;
  std::size_t eval = 0;
  std::size_t total() const { return train + eval; }
  double train_fraction() const { return total() ? static_cast<double>(train) / static_cast<double>(total()) : 0.0; }
};

struct Workload {
  std::string workload_id;
  int version = 1;
  std::optional<int> parent_version;
  std::vector<DataPoint> data_points;
  std::string created_at;

  SplitStats split_stats() const;
  std::vector<const DataPoint*> eval_points() const;
  const DataPoint* find(const std::string& dp_id) const;
  // Eval-point counts per category 1..6 (index 0 unused).
  std::array<std::size_t, 7> category_counts() const;
};

// One data point per line. Each line must parse, name a catalog database and
// carry a unique id; violations raise ValidationError listing every
// offending id.
Workload parse_workload(const std::string& jsonl, const std::string& workload_id, const data::Catalog& catalog);
Workload load_workload(const std::filesystem::path& path, const data::Catalog& catalog);
std::string serialize_workload(const Workload& w);

// Versioned store: <root>/<id>/v<k>.jsonl plus meta.json with the lineage.
// Versions are immutable once published. A workload with no stored versions
// is imported as v1 from <seed_dir>/<id>.jsonl on first access.
class WorkloadStore {
 public:
  WorkloadStore(std::filesystem::path root, const data::Catalog& catalog, std::filesystem::path seed_dir = {});

  std::vector<std::string> ids() const;  // stored and importable
  std::vector<int> versions(const std::string& id) const;
  // Latest version when `version` is empty. Throws NotFound.
  Workload load(const std::string& id, std::optional<int> version = std::nullopt) const;

  // Requires version = latest + 1 (or 1 for a new id); for v > 1 the parent's
  // data points must be a subset. Throws ValidationError otherwise.
  void publish(const Workload& w, const nlohmann::json& note = nlohmann::json::object()) const;

  nlohmann::json meta(const std::string& id) const;
  nlohmann::json to_json() const;  // every workload with its versions and lineage

  const std::filesystem::path& root() const { return root_; }

 private:
  void ensure_imported(const std::string& id) const;

  std::filesystem::path root_;
  const data::Catalog* catalog_;
  std::filesystem::path seed_dir_;
};

// Category weights, keyed 1..6.
struct TargetDistribution {
  std::map<int, double> weights;

  // {"c1": 0.5, ...}; weights in [0, 1] summing to 1 within 1e-9.
  static TargetDistribution from_json(const nlohmann::json& j);
  static TargetDistribution load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Largest-remainder apportionment of n over the target weights; ties on the
// remainder go to the lower category.
std::map<int, std::size_t> largest_remainder_quotas(const TargetDistribution& target, std::size_t n);

struct AlignmentResult {
  Workload workload;
  std::size_t n = 0;
  std::map<int, std::size_t> quotas;
};

// Largest eval subset whose category counts equal the quotas for its size.
// Train points are carried over unchanged. The result is a new workload
// "<id>_aligned_<hash>" at version 1. Throws InfeasibleAlignment.
AlignmentResult align_workload(const Workload& w, const TargetDistribution& target, std::uint64_t seed);

struct SubcategoryScore {
  double score = 0.0;
  std::size_t support = 0;
};

inline constexpr std::size_t kDefaultMinSupport = 3;

// Subcategories scoring below theta with support at least min_support.
std::set<sql::TaxonomyLabel> select_weak_subcategories(const std::map<sql::TaxonomyLabel, SubcategoryScore>& scores,
                                                       double theta, std::size_t min_support = kDefaultMinSupport);

struct Candidate {
  std::string question;
  std::string sql;
  std::string db_id;
};

struct Verdict {
  bool accepted = false;
  std::string reason;  // parse-failure, label-mismatch, exec-failure, duplicate, unknown-db
  std::string detail;
  std::uint64_t fingerprint = 0;
};

// db_id -> fingerprints of the queries already present.
using FingerprintIndex = std::map<std::string, std::set<std::uint64_t>>;

FingerprintIndex fingerprint_index(const Workload& w, const data::Catalog& catalog);
std::uint64_t query_fingerprint(const std::string& sql_text, const data::DatabaseRef& db);

Verdict validate_candidate(const Candidate& c, sql::TaxonomyLabel target, const data::Catalog& catalog,
                           const FingerprintIndex& known, int timeout_ms = data::kDefaultTimeoutMs);

struct AugmentOptions {
  std::size_t per_subcategory = 3;
  std::size_t budget_factor = 5;  // attempts per subcategory = budget_factor * per_subcategory
  std::size_t max_exemplars = 3;
  std::string generator;          // gateway model id
  std::string run_id;
  std::uint64_t seed = 0;
};

struct SubcategoryFill {
  sql::TaxonomyLabel label;
  std::string db_id;
  std::size_t requested = 0;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  std::map<std::string, std::size_t> rejections;  // reason -> count

  nlohmann::json to_json() const;
};

struct AugmentResult {
  Workload workload;  // version + 1
  std::vector<SubcategoryFill> fills;
  std::vector<std::string> added_ids;
};

// Throws ConfigError for an empty weak set or k = 0; GatewayError from the
// generator propagates.
AugmentResult augment_workload(const Workload& w, const std::set<sql::TaxonomyLabel>& weak, const AugmentOptions& opts,
                               gateway::Gateway& gw, const data::Catalog& catalog);

std::string utc_timestamp();

}  // namespace sqleval::workload
