#include "sqleval/workload/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <mutex>
#include <numeric>
#include <sstream>

#include "sqleval/data/driver.hpp"
#include "sqleval/errors.hpp"
#include "sqleval/sql/exact_match.hpp"
#include "sqleval/sql/normalize.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/util/files.hpp"
#include "sqleval/util/hash.hpp"
#include "sqleval/util/rng.hpp"

namespace sqleval::workload {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Split s) { return s == Split::train ? "train" : "eval"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "eval") return Split::eval;
  throw ConfigError("unknown split '" + s + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const DataPoint& dp) {
  json prov;
  if (dp.provenance.kind == Provenance::Kind::seed_benchmark)
    prov = {{"kind", "seed_benchmark"}, {"name", dp.provenance.benchmark}};
  else
    prov = {{"kind", "augmented"}, {"model_id", dp.provenance.model_id}, {"run_id", dp.provenance.run_id}};
  return {{"id", dp.id},         {"question", dp.question}, {"gt_sql", dp.gt_sql},
          {"db_id", dp.db_id},   {"split", to_string(dp.split)}, {"provenance", prov},
          {"label", dp.label.subcategory_code()}};
}

DataPoint data_point_from_json(const json& j) {
  DataPoint dp;
  dp.id = j.at("id").get<std::string>();
  dp.question = j.at("question").get<std::string>();
  dp.gt_sql = j.at("gt_sql").get<std::string>();
  dp.db_id = j.at("db_id").get<std::string>();
  dp.split = split_from_string(j.value("split", std::string("eval")));
  if (j.contains("provenance")) {
    const auto& p = j["provenance"];
    const auto kind = p.value("kind", std::string("seed_benchmark"));
    if (kind == "augmented")
      dp.provenance = Provenance::augmented(p.value("model_id", ""), p.value("run_id", ""));
    else if (kind == "seed_benchmark")
      dp.provenance = Provenance::seed(p.value("name", ""));
    else
      throw ConfigError("unknown provenance kind '" + kind + "'");
  }
  return dp;
}

SplitStats Workload::split_stats() const {
  SplitStats s;
  for (const auto& dp : data_points) (dp.split == Split::train ? s.train : s.eval)++;
  return s;
}

std::vector<const DataPoint*> Workload::eval_points() const {
  std::vector<const DataPoint*> out;
  for (const auto& dp : data_points)
    if (dp.split == Split::eval) out.push_back(&dp);
  return out;
}

const DataPoint* Workload::find(const std::string& dp_id) const {
  for (const auto& dp : data_points)
    if (dp.id == dp_id) return &dp;
  return nullptr;
}

std::array<std::size_t, 7> Workload::category_counts() const {
  std::array<std::size_t, 7> counts{};
  for (const auto* dp : eval_points()) counts[static_cast<std::size_t>(dp->label.category)]++;
  return counts;
}

Workload parse_workload(const std::string& jsonl, const std::string& workload_id, const data::Catalog& catalog) {
  Workload w;
  w.workload_id = workload_id;
  std::vector<std::string> bad;
  std::vector<std::string> problems;
  std::set<std::string> seen;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DataPoint dp;
    try {
      dp = data_point_from_json(json::parse(line));
    } catch (const std::exception& e) {
      bad.push_back("line " + std::to_string(line_no));
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    }
    if (!seen.insert(dp.id).second) {
      bad.push_back(dp.id);
      problems.push_back(dp.id + ": duplicate id");
      continue;
    }
    if (!catalog.contains(dp.db_id)) {
      bad.push_back(dp.id);
      problems.push_back(dp.id + ": unknown database '" + dp.db_id + "'");
      continue;
    }
    try {
      dp.label = sql::classify(sql::parse_sql(dp.gt_sql));
    } catch (const Error& e) {
      bad.push_back(dp.id);
      problems.push_back(dp.id + ": " + e.what());
      continue;
    }
    w.data_points.push_back(std::move(dp));
  }
  if (!bad.empty()) {
    std::string msg = "invalid data points in workload '" + workload_id + "':";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg, bad);
  }
  return w;
}

Workload load_workload(const fs::path& path, const data::Catalog& catalog) {
  if (!fs::exists(path)) throw NotFound("workload file " + path.string() + " does not exist");
  return parse_workload(util::read_file(path), path.stem().string(), catalog);
}

std::string serialize_workload(const Workload& w) {
  std::string out;
  for (const auto& dp : w.data_points) out += to_json(dp).dump() + "\n";
  return out;
}

// ---- store ----

namespace {

std::mutex& store_mutex() {
  static std::mutex mu;
  return mu;
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  }) && id.front() != '.';
}

json read_meta(const fs::path& dir) {
  const auto file = dir / "meta.json";
  if (!fs::exists(file)) return json();
  return json::parse(util::read_file(file));
}

}  // namespace

WorkloadStore::WorkloadStore(fs::path root, const data::Catalog& catalog, fs::path seed_dir)
    : root_(std::move(root)), catalog_(&catalog), seed_dir_(std::move(seed_dir)) {}

void WorkloadStore::ensure_imported(const std::string& id) const {
  if (!valid_id(id)) throw NotFound("invalid workload id '" + id + "'");
  if (fs::exists(root_ / id / "meta.json")) return;
  const auto seed = seed_dir_ / (id + ".jsonl");
  if (seed_dir_.empty() || !fs::exists(seed)) throw NotFound("unknown workload '" + id + "'");
  auto w = load_workload(seed, *catalog_);
  w.version = 1;
  publish(w, {{"source", "import"}, {"file", seed.filename().string()}});
}

std::vector<std::string> WorkloadStore::ids() const {
  std::set<std::string> out;
  if (fs::exists(root_))
    for (const auto& e : fs::directory_iterator(root_))
      if (e.is_directory() && fs::exists(e.path() / "meta.json")) out.insert(e.path().filename().string());
  if (!seed_dir_.empty() && fs::exists(seed_dir_))
    for (const auto& e : fs::directory_iterator(seed_dir_))
      if (e.path().extension() == ".jsonl") out.insert(e.path().stem().string());
  return {out.begin(), out.end()};
}

std::vector<int> WorkloadStore::versions(const std::string& id) const {
  ensure_imported(id);
  std::vector<int> out;
  const auto meta = read_meta(root_ / id);
  for (const auto& v : meta.at("versions")) out.push_back(v.at("version").get<int>());
  std::sort(out.begin(), out.end());
  return out;
}

Workload WorkloadStore::load(const std::string& id, std::optional<int> version) const {
  const auto vs = versions(id);
  const int v = version.value_or(vs.back());
  if (std::find(vs.begin(), vs.end(), v) == vs.end())
    throw NotFound("workload '" + id + "' has no version " + std::to_string(v));
  auto w = parse_workload(util::read_file(root_ / id / ("v" + std::to_string(v) + ".jsonl")), id, *catalog_);
  w.version = v;
  const auto meta = read_meta(root_ / id);
  for (const auto& entry : meta.at("versions")) {
    if (entry.at("version").get<int>() != v) continue;
    if (!entry["parent_version"].is_null()) w.parent_version = entry["parent_version"].get<int>();
    w.created_at = entry.value("created_at", "");
  }
  return w;
}

void WorkloadStore::publish(const Workload& w, const json& note) const {
  if (!valid_id(w.workload_id)) throw ValidationError("invalid workload id '" + w.workload_id + "'", {w.workload_id});
  std::lock_guard lock(store_mutex());
  const auto dir = root_ / w.workload_id;
  json meta = read_meta(dir);
  if (meta.is_null()) meta = {{"workload_id", w.workload_id}, {"versions", json::array()}};
  int latest = 0;
  for (const auto& v : meta["versions"]) latest = std::max(latest, v.at("version").get<int>());
  if (w.version != latest + 1)
    throw ValidationError("workload '" + w.workload_id + "' version " + std::to_string(w.version) +
                              " does not follow version " + std::to_string(latest),
                          {});
  std::set<std::string> ids;
  for (const auto& dp : w.data_points)
    if (!ids.insert(dp.id).second) throw ValidationError("duplicate data point id '" + dp.id + "'", {dp.id});
  if (latest > 0) {
    if (w.parent_version != latest)
      throw ValidationError("version " + std::to_string(w.version) + " must name parent " + std::to_string(latest), {});
    const auto parent =
        parse_workload(util::read_file(dir / ("v" + std::to_string(latest) + ".jsonl")), w.workload_id, *catalog_);
    std::vector<std::string> missing;
    for (const auto& p : parent.data_points) {
      const auto* dp = w.find(p.id);
      if (!dp || !(*dp == p)) missing.push_back(p.id);
    }
    if (!missing.empty())
      throw ValidationError("new version drops or changes parent data points", missing);
  }
  fs::create_directories(dir);
  util::atomic_write(dir / ("v" + std::to_string(w.version) + ".jsonl"), serialize_workload(w));
  const auto stats = w.split_stats();
  meta["versions"].push_back({{"version", w.version},
                              {"parent_version", w.parent_version ? json(*w.parent_version) : json()},
                              {"created_at", w.created_at.empty() ? utc_timestamp() : w.created_at},
                              {"size", stats.total()},
                              {"train", stats.train},
                              {"eval", stats.eval},
                              {"note", note}});
  util::atomic_write(dir / "meta.json", meta.dump(2) + "\n");
}

json WorkloadStore::meta(const std::string& id) const {
  ensure_imported(id);
  return read_meta(root_ / id);
}

json WorkloadStore::to_json() const {
  json out = json::array();
  for (const auto& id : ids()) out.push_back(meta(id));
  return out;
}

// ---- alignment ----

TargetDistribution TargetDistribution::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("target distribution must be an object of category weights");
  const json& weights = j.contains("weights") && j["weights"].is_object() ? j["weights"] : j;
  TargetDistribution t;
  double sum = 0.0;
  for (const auto& [key, value] : weights.items()) {
    std::string k = key;
    if (!k.empty() && (k[0] == 'c' || k[0] == 'C')) k = k.substr(1);
    int c = 0;
    try {
      std::size_t used = 0;
      c = std::stoi(k, &used);
      if (used != k.size()) c = 0;
    } catch (const std::exception&) {
      c = 0;
    }
    if (c < 1 || c > sql::kCategories) throw ConfigError("unknown category '" + key + "' in target distribution");
    if (!value.is_number()) throw ConfigError("weight for '" + key + "' is not a number");
    const double w = value.get<double>();
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("weight for '" + key + "' outside [0, 1]");
    t.weights[c] = w;
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("target weights sum to " + std::to_string(sum) + ", not 1");
  return t;
}

TargetDistribution TargetDistribution::load(const fs::path& path) {
  return from_json(json::parse(util::read_file(path)));
}

json TargetDistribution::to_json() const {
  json j = json::object();
  for (const auto& [c, w] : weights) j["c" + std::to_string(c)] = w;
  return j;
}

std::map<int, std::size_t> largest_remainder_quotas(const TargetDistribution& target, std::size_t n) {
  std::map<int, std::size_t> quotas;
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (const auto& [c, w] : target.weights) {
    const double exact = w * static_cast<double>(n);
    const auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
    quotas[c] = base;
    assigned += base;
    remainders.emplace_back(exact - static_cast<double>(base), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < n && i < remainders.size(); ++i, ++assigned) quotas[remainders[i].second]++;
  return quotas;
}

AlignmentResult align_workload(const Workload& w, const TargetDistribution& target, std::uint64_t seed) {
  const auto counts = w.category_counts();
  for (const auto& [c, weight] : target.weights)
    if (weight > 0.0 && counts[static_cast<std::size_t>(c)] == 0)
      throw InfeasibleAlignment("category c" + std::to_string(c) + " has target weight " + std::to_string(weight) +
                                " but no eval data points");

  const std::size_t total = w.eval_points().size();
  AlignmentResult result;
  for (std::size_t n = total; n > 0; --n) {
    auto q = largest_remainder_quotas(target, n);
    bool fits = true;
    for (const auto& [c, k] : q) fits = fits && k <= counts[static_cast<std::size_t>(c)];
    if (fits) {
      result.n = n;
      result.quotas = std::move(q);
      break;
    }
  }
  if (result.n == 0) throw InfeasibleAlignment("no non-empty subset matches the target distribution");

  std::set<std::string> keep;
  for (const auto& [c, quota] : result.quotas) {
    std::vector<const DataPoint*> members;
    for (const auto* dp : w.eval_points())
      if (dp->label.category == c) members.push_back(dp);
    util::Rng rng(util::derive_seed(seed, "align:c" + std::to_string(c)));
    rng.shuffle(members);
    for (std::size_t i = 0; i < quota; ++i) keep.insert(members[i]->id);
  }

  const auto tag = util::sha256_hex(target.to_json().dump() + "|" + std::to_string(seed) + "|" + w.workload_id + "|v" +
                                    std::to_string(w.version))
                       .substr(0, 8);
  Workload& out = result.workload;
  out.workload_id = w.workload_id + "_aligned_" + tag;
  out.version = 1;
  for (const auto& dp : w.data_points)
    if (dp.split == Split::train || keep.count(dp.id)) out.data_points.push_back(dp);
  return result;
}

// ---- augmentation ----

std::set<sql::TaxonomyLabel> select_weak_subcategories(const std::map<sql::TaxonomyLabel, SubcategoryScore>& scores,
                                                       double theta, std::size_t min_support) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  std::set<sql::TaxonomyLabel> out;
  for (const auto& [label, s] : scores)
    if (s.score < theta && s.support >= min_support) out.insert(label);
  return out;
}

std::uint64_t query_fingerprint(const std::string& sql_text, const data::DatabaseRef& db) {
  const auto info = db.schema.info();
  return sql::ast_fingerprint(sql::normalize(sql::parse_sql(sql_text), &info));
}

FingerprintIndex fingerprint_index(const Workload& w, const data::Catalog& catalog) {
  FingerprintIndex index;
  for (const auto& dp : w.data_points) {
    try {
      index[dp.db_id].insert(query_fingerprint(dp.gt_sql, catalog.get(dp.db_id)));
    } catch (const Error&) {
      // unnormalizable ground truths cannot collide with a validated candidate
    }
  }
  return index;
}

Verdict validate_candidate(const Candidate& c, sql::TaxonomyLabel target, const data::Catalog& catalog,
                           const FingerprintIndex& known, int timeout_ms) {
  Verdict v;
  if (!catalog.contains(c.db_id)) {
    v.reason = "unknown-db";
    v.detail = c.db_id;
    return v;
  }
  const auto& db = catalog.get(c.db_id);
  sql::QueryAst ast;
  try {
    if (c.question.empty()) throw ConfigError("candidate has no question");
    ast = sql::parse_sql(c.sql);
    const auto info = db.schema.info();
    v.fingerprint = sql::ast_fingerprint(sql::normalize(ast, &info));
  } catch (const Error& e) {
    v.reason = "parse-failure";
    v.detail = e.what();
    return v;
  }
  const auto label = sql::classify(ast);
  if (label != target) {
    v.reason = "label-mismatch";
    v.detail = label.subcategory_code();
    return v;
  }
  try {
    data::execute_query(db, c.sql, timeout_ms);
  } catch (const Error& e) {
    v.reason = "exec-failure";
    v.detail = e.what();
    return v;
  }
  if (auto it = known.find(c.db_id); it != known.end() && it->second.count(v.fingerprint)) {
    v.reason = "duplicate";
    v.detail = sql::fingerprint_hex(v.fingerprint);
    return v;
  }
  v.accepted = true;
  return v;
}

json SubcategoryFill::to_json() const {
  return {{"subcategory", label.subcategory_code()},
          {"db_id", db_id},
          {"requested", requested},
          {"accepted", accepted},
          {"attempts", attempts},
          {"rejections", rejections}};
}

AugmentResult augment_workload(const Workload& w, const std::set<sql::TaxonomyLabel>& weak, const AugmentOptions& opts,
                               gateway::Gateway& gw, const data::Catalog& catalog) {
  if (weak.empty()) throw ConfigError("no weak subcategories to augment");
  if (opts.per_subcategory == 0) throw ConfigError("per-subcategory count must be at least 1");

  std::vector<std::string> dbs;
  for (const auto& dp : w.data_points)
    if (catalog.contains(dp.db_id) && std::find(dbs.begin(), dbs.end(), dp.db_id) == dbs.end()) dbs.push_back(dp.db_id);
  std::sort(dbs.begin(), dbs.end());
  if (dbs.empty()) dbs = catalog.ids();
  if (dbs.empty()) throw ConfigError("catalog has no databases");

  AugmentResult result;
  result.workload = w;
  result.workload.version = w.version + 1;
  result.workload.parent_version = w.version;
  result.workload.created_at.clear();
  auto known = fingerprint_index(w, catalog);
  const std::string prefix = w.workload_id + "-v" + std::to_string(result.workload.version) + "-";

  for (const auto& label : weak) {
    const auto code = label.subcategory_code();
    util::Rng rng(util::derive_seed(opts.seed, "augment:" + code));
    SubcategoryFill fill;
    fill.label = label;
    fill.db_id = dbs[rng.below(dbs.size())];
    fill.requested = opts.per_subcategory;
    const auto& db = catalog.get(fill.db_id);

    std::vector<gateway::Exemplar> exemplars;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& dp : w.data_points)
        if (exemplars.size() < std::min<std::size_t>(opts.max_exemplars, 3) && dp.split == Split::train &&
            dp.label == label && ((dp.db_id == fill.db_id) == (pass == 0)))
          exemplars.push_back({dp.question, dp.gt_sql});

    const std::size_t budget = opts.budget_factor * opts.per_subcategory;
    while (fill.accepted < fill.requested && fill.attempts < budget) {
      gateway::AugmentTask task{label, fill.db_id, db.schema.text(), exemplars, static_cast<int>(fill.attempts)};
      ++fill.attempts;
      const auto reply = gw.complete(opts.generator, gateway::Prompt{task, 0});
      const auto pair = gateway::parse_candidate(reply.text);
      const Candidate cand{pair.question, pair.sql, fill.db_id};
      const auto verdict = validate_candidate(cand, label, catalog, known);
      if (!verdict.accepted) {
        fill.rejections[verdict.reason]++;
        continue;
      }
      known[fill.db_id].insert(verdict.fingerprint);
      DataPoint dp;
      std::string code_id = code;
      std::replace(code_id.begin(), code_id.end(), '.', '_');
      dp.id = prefix + code_id + "-" + std::to_string(++fill.accepted);
      dp.question = cand.question;
      dp.gt_sql = cand.sql;
      dp.db_id = cand.db_id;
      dp.split = Split::eval;
      dp.provenance = Provenance::augmented(opts.generator, opts.run_id);
      dp.label = label;
      result.added_ids.push_back(dp.id);
      result.workload.data_points.push_back(std::move(dp));
    }
    result.fills.push_back(std::move(fill));
  }
  return result;
}

}  // namespace sqleval::workload
