#include "sqleval/pipeline/config.hpp"

#include <algorithm>
#include <set>

#include <yaml-cpp/yaml.h>

#include "sqleval/errors.hpp"
#include "sqleval/pipeline/pipeline.hpp"
#include "sqleval/util/files.hpp"

namespace sqleval::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "run_id",        "workload",         "workload_id",  "workload_version", "catalog",          "models",
      "metrics",       "iterations",       "llm_id",       "temperature",      "tau",              "etc_floor_ms",
      "theta",         "scale_factors",    "alignment_target", "seed",         "concurrency",      "workers",
      "cache",         "em_mode",          "comparison",   "timing_repetitions", "timeout_ms",     "repair_depth",
      "augment_generator", "notes"};
  return keys;
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : n) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : n) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const auto text = n.Scalar();
  if (n.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True" || text == "TRUE") return true;
  if (text == "false" || text == "False" || text == "FALSE") return false;
  if (text == "~" || text == "null" || text == "Null" || text == "NULL") return nullptr;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(text, &used);
    if (used == text.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

}  // namespace

void RunConfig::validate() const {
  if (workload_id.empty()) throw ConfigError("config names no workload");
  if (models.empty()) throw ConfigError("config lists no models");
  std::set<std::string> ids;
  for (const auto& m : models)
    if (!ids.insert(m.model_id).second) throw ConfigError("duplicate model id '" + m.model_id + "'");
  if (metrics.empty()) throw ConfigError("metric subset must not be empty");
  if (std::set<metrics::Metric>(metrics.begin(), metrics.end()).size() != metrics.size())
    throw ConfigError("metric listed twice");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  for (const auto& m : models)
    if (!(m.temperature >= 0.0)) throw ConfigError("temperature of '" + m.model_id + "' must be non-negative");
  if (!(tau >= 0.0)) throw ConfigError("tau must be non-negative");
  if (!(etc_floor_ms >= 0.0)) throw ConfigError("etc_floor_ms must be non-negative");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must be within [0, 1]");
  if (scale_factors.empty()) throw ConfigError("scale_factors must not be empty");
  for (std::size_t i = 0; i < scale_factors.size(); ++i) {
    if (scale_factors[i] < 1) throw ConfigError("scale factors must be at least 1");
    if (i > 0 && scale_factors[i] <= scale_factors[i - 1])
      throw ConfigError("scale_factors must be strictly ascending");
  }
  if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (timing_repetitions < 1) throw ConfigError("timing_repetitions must be at least 1");
  if (timeout_ms < 1) throw ConfigError("timeout_ms must be positive");
  if (repair_depth < 0 || repair_depth > 3) throw ConfigError("repair_depth must be within 0..3");
  for (char c : run_id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
      throw ConfigError("run_id may only contain letters, digits, '-', '_' and '.'");
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().count(key)) throw ConfigError("unknown config field '" + key + "'");

  RunConfig cfg;
  cfg.run_id = get<std::string>(j, "run_id", "");
  if (j.contains("workload") && j["workload"].is_object()) {
    cfg.workload_id = get<std::string>(j["workload"], "id", "");
    if (j["workload"].contains("version") && !j["workload"]["version"].is_null())
      cfg.workload_version = get<int>(j["workload"], "version", 1);
  } else {
    cfg.workload_id = get<std::string>(j, "workload", get<std::string>(j, "workload_id", ""));
  }
  if (j.contains("workload_version") && !j["workload_version"].is_null())
    cfg.workload_version = get<int>(j, "workload_version", 1);
  cfg.catalog = get<std::string>(j, "catalog", "");
  cfg.llm_id = get<std::string>(j, "llm_id", "");
  cfg.temperature = get<double>(j, "temperature", 0.0);

  if (!j.contains("models") || !j["models"].is_array()) throw ConfigError("config needs a models list");
  for (const auto& m : j["models"]) {
    json entry = m;
    if (entry.is_string()) entry = json{{"model_id", m}, {"kind", m}};
    if (!entry.is_object()) throw ConfigError("model entry must be an object or a kind name");
    if (!entry.contains("llm_id")) entry["llm_id"] = cfg.llm_id;
    if (!entry.contains("temperature")) entry["temperature"] = cfg.temperature;
    try {
      cfg.models.push_back(gateway::AdapterSettings::from_json(entry));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad model entry: ") + e.what());
    }
  }

  if (j.contains("metrics")) {
    if (!j["metrics"].is_array()) throw ConfigError("metrics must be a list");
    for (const auto& m : j["metrics"]) {
      if (!m.is_string()) throw ConfigError("metric names must be strings");
      try {
        cfg.metrics.push_back(metrics::metric_from_string(m.get<std::string>()));
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  } else {
    cfg.metrics = metrics::all_metrics();
  }

  cfg.iterations = get<int>(j, "iterations", 1);
  cfg.tau = get<double>(j, "tau", cfg.tau);
  cfg.etc_floor_ms = get<double>(j, "etc_floor_ms", cfg.etc_floor_ms);
  cfg.theta = get<double>(j, "theta", cfg.theta);
  if (j.contains("scale_factors")) cfg.scale_factors = get<std::vector<int>>(j, "scale_factors", {1});
  if (j.contains("alignment_target") && !j["alignment_target"].is_null()) {
    const auto& t = j["alignment_target"];
    if (t.is_string()) {
      // A file path, or the name of a bundled target.
      fs::path p = t.get<std::string>();
      if (!fs::exists(p) && p.extension().empty()) p = default_data_dir() / "targets" / (p.string() + ".json");
      if (!fs::exists(p)) throw ConfigError("alignment target '" + t.get<std::string>() + "' not found");
      cfg.alignment_target = workload::TargetDistribution::load(p);
    } else {
      cfg.alignment_target = workload::TargetDistribution::from_json(t);
    }
  }
  cfg.seed = get<std::uint64_t>(j, "seed", 0);
  cfg.concurrency = get<int>(j, "concurrency", get<int>(j, "workers", cfg.concurrency));
  cfg.cache = get<bool>(j, "cache", true);
  if (j.contains("em_mode")) {
    try {
      cfg.em_mode = sql::match_mode_from_string(get<std::string>(j, "em_mode", "spider"));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("comparison")) {
    try {
      cfg.policy = metrics::policy_from_json(j["comparison"]);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad comparison policy: ") + e.what());
    }
  }
  cfg.timing_repetitions = get<int>(j, "timing_repetitions", cfg.timing_repetitions);
  cfg.timeout_ms = get<int>(j, "timeout_ms", cfg.timeout_ms);
  cfg.repair_depth = get<int>(j, "repair_depth", cfg.repair_depth);
  cfg.augment_generator = get<std::string>(j, "augment_generator", cfg.augment_generator);
  if (j.contains("notes") && j["notes"].is_string()) cfg.notes = j["notes"].get<std::string>();
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json models = json::array();
  for (const auto& m : cfg.models) models.push_back(m.to_json());
  json metric_names = json::array();
  for (auto m : cfg.metrics) metric_names.push_back(metrics::to_string(m));
  json j = {{"run_id", cfg.run_id},
            {"workload", {{"id", cfg.workload_id}, {"version", cfg.workload_version ? json(*cfg.workload_version) : json()}}},
            {"catalog", cfg.catalog},
            {"models", models},
            {"metrics", metric_names},
            {"iterations", cfg.iterations},
            {"llm_id", cfg.llm_id},
            {"temperature", cfg.temperature},
            {"tau", cfg.tau},
            {"etc_floor_ms", cfg.etc_floor_ms},
            {"theta", cfg.theta},
            {"scale_factors", cfg.scale_factors},
            {"alignment_target", cfg.alignment_target ? cfg.alignment_target->to_json() : json()},
            {"seed", cfg.seed},
            {"concurrency", cfg.concurrency},
            {"cache", cfg.cache},
            {"em_mode", sql::to_string(cfg.em_mode)},
            {"comparison", metrics::to_json(cfg.policy)},
            {"timing_repetitions", cfg.timing_repetitions},
            {"timeout_ms", cfg.timeout_ms},
            {"repair_depth", cfg.repair_depth},
            {"augment_generator", cfg.augment_generator}};
  if (cfg.notes) j["notes"] = *cfg.notes;
  return j;
}

json parse_config_text(const std::string& text, bool yaml) {
  if (!yaml) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
}

RunConfig load_config(const fs::path& file) {
  if (!fs::exists(file)) throw NotFound("config file " + file.string() + " not found");
  const auto text = util::read_file(file);
  const auto ext = file.extension().string();
  bool yaml = ext == ".yaml" || ext == ".yml";
  if (ext != ".json" && !yaml) {
    const auto first = text.find_first_not_of(" \t\r\n");
    yaml = first == std::string::npos || (text[first] != '{');
  }
  auto j = parse_config_text(text, yaml);
  // Relative file references resolve against the config's directory.
  const auto base = file.parent_path();
  if (j.is_object() && j.contains("alignment_target") && j["alignment_target"].is_string()) {
    fs::path p = j["alignment_target"].get<std::string>();
    if (p.is_relative() && fs::exists(base / p)) j["alignment_target"] = (base / p).string();
  }
  if (j.is_object() && j.contains("catalog") && j["catalog"].is_string() && !j["catalog"].get<std::string>().empty()) {
    fs::path p = j["catalog"].get<std::string>();
    if (p.is_relative()) j["catalog"] = (base / p).string();
  }
  return config_from_json(j);
}

}  // namespace sqleval::pipeline
