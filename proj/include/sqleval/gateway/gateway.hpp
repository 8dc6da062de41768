#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqleval/gateway/prompt.hpp"
#include "sqleval/gateway/record.hpp"

namespace sqleval::gateway {

enum class AdapterKind { direct_llm, external_http, mock_oracle, mock_mutant, mock_template };

const char* to_string(AdapterKind k);
AdapterKind adapter_kind_from_string(const std::string& s);

enum class Mutation { column_swap, drop_order_by };

const char* to_string(Mutation m);
Mutation mutation_from_string(const std::string& s);

struct AdapterSettings {
  std::string model_id;
  AdapterKind kind = AdapterKind::mock_oracle;
  std::string endpoint;  // base URL for direct_llm (falls back to SQLEVAL_LLM_BASE_URL), full URL for external_http
  std::string llm_id;
  double temperature = 0.0;
  Mutation mutation = Mutation::column_swap;
  int icl_exemplars = 0;  // train-split exemplars per prompt, at most 3
  int max_in_flight = 8;
  std::string api_key_env = "SQLEVAL_LLM_API_KEY";
  int http_timeout_s = 120;

  static AdapterSettings from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Completion {
  std::string text;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
};

// dp_id -> ground-truth SQL, consulted by the mock oracle and mutants.
using AnswerKey = std::map<std::string, std::string>;

class ModelAdapter {
 public:
  explicit ModelAdapter(AdapterSettings s) : settings_(std::move(s)) {}
  virtual ~ModelAdapter() = default;
  ModelAdapter(const ModelAdapter&) = delete;
  ModelAdapter& operator=(const ModelAdapter&) = delete;

  const AdapterSettings& settings() const { return settings_; }
  const std::string& model_id() const { return settings_.model_id; }

  // Throws GatewayError for transport, auth or quota failures.
  virtual Completion complete(const Prompt& prompt) = 0;

 private:
  AdapterSettings settings_;
};

std::unique_ptr<ModelAdapter> make_adapter(AdapterSettings s, std::shared_ptr<const AnswerKey> answers = {});

// Applies a mutation to SQL text. Returns the input unchanged when the
// mutation has nothing to act on or the text does not parse.
std::string mutate_sql(const std::string& sql, Mutation m);

// Candidate pair proposed for augmentation.
struct CandidatePair {
  std::string question;
  std::string sql;
};

// Reads a {"question", "sql"} object from a reply; falls back to SQL
// extraction with an empty question.
CandidatePair parse_candidate(const std::string& reply);

// Subcategory codes the template mock can fill on the given database.
std::vector<sql::TaxonomyLabel> template_labels(const std::string& db_id);

std::string cache_key(const std::string& adapter_id, const std::string& llm_id, double temperature,
                      const std::string& prompt_text, int iteration = 0);

struct CachedCompletion {
  Completion completion;
  double latency_ms = 0.0;
};

// Content-addressed completion store. Thread-safe; with a directory every
// insert is also written to <dir>/<key>.json.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<CachedCompletion> find(const std::string& key);
  void insert(const std::string& key, const CachedCompletion& value);
  std::size_t size() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, CachedCompletion> entries_;
};

struct GatewayOptions {
  bool cache_enabled = true;
  std::filesystem::path cache_dir;  // empty keeps the cache in memory
  int attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
  int batch_limit = 8;
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions opts = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Throws ConfigError when the model id is already registered.
  void add_adapter(std::unique_ptr<ModelAdapter> adapter);
  bool has_adapter(const std::string& model_id) const;
  const ModelAdapter& adapter(const std::string& model_id) const;
  std::vector<std::string> model_ids() const;

  // Never throws on model failures; the record carries the error.
  GenerationRecord generate_sql(const std::string& model_id, const Prompt& prompt);
  std::vector<GenerationRecord> submit_batch(const std::string& model_id, const std::vector<Prompt>& prompts);

  // Cached, retried completion. Throws GatewayError once retries run out.
  Completion complete(const std::string& model_id, const Prompt& prompt, bool* cached = nullptr,
                      double* latency_ms = nullptr);

  // Adapter invocations that reached a model (cache hits excluded).
  std::uint64_t calls() const { return calls_.load(); }
  const GatewayOptions& options() const { return opts_; }

 private:
  struct Slot;
  Slot& slot(const std::string& model_id) const;

  GatewayOptions opts_;
  ResponseCache cache_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace sqleval::gateway
