#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace sqleval::gateway {

struct GenerationRecord {
  std::string dp_id;
  std::string model_id;
  int iteration = 0;
  std::string sql_text;
  std::optional<std::int64_t> input_tokens;   // provider-reported
  std::optional<std::int64_t> output_tokens;  // provider-reported
  std::size_t prompt_chars = 0;
  std::size_t response_chars = 0;
  double latency_ms = 0.0;
  bool cached = false;
  std::optional<std::string> error;  // set when generation itself failed

  bool failed() const { return error.has_value(); }
  bool operator==(const GenerationRecord&) const = default;
};

inline nlohmann::json to_json(const GenerationRecord& r, bool with_latency = true) {
  nlohmann::json j = {{"dp_id", r.dp_id},
                      {"model_id", r.model_id},
                      {"iteration", r.iteration},
                      {"sql_text", r.sql_text},
                      {"input_tokens", r.input_tokens ? nlohmann::json(*r.input_tokens) : nlohmann::json()},
                      {"output_tokens", r.output_tokens ? nlohmann::json(*r.output_tokens) : nlohmann::json()},
                      {"prompt_chars", r.prompt_chars},
                      {"response_chars", r.response_chars},
                      {"cached", r.cached},
                      {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json()}};
  if (with_latency) j["latency_ms"] = r.latency_ms;
  return j;
}

inline GenerationRecord generation_from_json(const nlohmann::json& j) {
  GenerationRecord r;
  r.dp_id = j.at("dp_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.iteration = j.value("iteration", 0);
  r.sql_text = j.value("sql_text", "");
  if (j.contains("input_tokens") && !j["input_tokens"].is_null()) r.input_tokens = j["input_tokens"].get<std::int64_t>();
  if (j.contains("output_tokens") && !j["output_tokens"].is_null())
    r.output_tokens = j["output_tokens"].get<std::int64_t>();
  r.prompt_chars = j.value("prompt_chars", std::size_t{0});
  r.response_chars = j.value("response_chars", std::size_t{0});
  r.latency_ms = j.value("latency_ms", 0.0);
  r.cached = j.value("cached", false);
  if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
  return r;
}

}  // namespace sqleval::gateway
