#include "sqleval/gateway/gateway.hpp"

#include <cstdio>
#include <fstream>
#include <thread>

#include "sqleval/errors.hpp"
#include "sqleval/util/files.hpp"
#include "sqleval/util/hash.hpp"

namespace sqleval::gateway {

using nlohmann::json;
namespace fs = std::filesystem;

std::string cache_key(const std::string& adapter_id, const std::string& llm_id, double temperature,
                      const std::string& prompt_text, int iteration) {
  char temp[64];
  std::snprintf(temp, sizeof temp, "%.17g", temperature);
  // Length-prefixed fields so no two tuples share an encoding.
  std::string material;
  for (const std::string& field :
       {adapter_id, llm_id, std::string(temp), std::to_string(iteration), prompt_text}) {
    material += std::to_string(field.size());
    material += ':';
    material += field;
  }
  return util::sha256_hex(material);
}

namespace {

json to_json(const CachedCompletion& c) {
  return {{"text", c.completion.text},
          {"input_tokens", c.completion.input_tokens ? json(*c.completion.input_tokens) : json()},
          {"output_tokens", c.completion.output_tokens ? json(*c.completion.output_tokens) : json()},
          {"latency_ms", c.latency_ms}};
}

std::optional<CachedCompletion> cached_from_json(const json& j) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) return std::nullopt;
  CachedCompletion c;
  c.completion.text = j["text"].get<std::string>();
  if (j.contains("input_tokens") && j["input_tokens"].is_number_integer())
    c.completion.input_tokens = j["input_tokens"].get<std::int64_t>();
  if (j.contains("output_tokens") && j["output_tokens"].is_number_integer())
    c.completion.output_tokens = j["output_tokens"].get<std::int64_t>();
  c.latency_ms = j.value("latency_ms", 0.0);
  return c;
}

}  // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::optional<CachedCompletion> ResponseCache::find(const std::string& key) {
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;
  const auto file = dir_ / (key + ".json");
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  const auto j = json::parse(in, nullptr, false);
  auto c = cached_from_json(j);
  if (c) entries_.emplace(key, *c);
  return c;
}

void ResponseCache::insert(const std::string& key, const CachedCompletion& value) {
  std::lock_guard lock(mu_);
  if (!entries_.emplace(key, value).second) return;
  if (!dir_.empty()) util::atomic_write(dir_ / (key + ".json"), to_json(value).dump());
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// Per-adapter state: the adapter and its in-flight limit.
struct Gateway::Slot {
  std::unique_ptr<ModelAdapter> adapter;
  std::mutex mu;
  std::condition_variable cv;
  int in_flight = 0;

  class Permit {
   public:
    explicit Permit(Slot& s) : s_(s) {
      std::unique_lock lock(s_.mu);
      s_.cv.wait(lock, [&] { return s_.in_flight < s_.adapter->settings().max_in_flight; });
      ++s_.in_flight;
    }
    ~Permit() {
      {
        std::lock_guard lock(s_.mu);
        --s_.in_flight;
      }
      s_.cv.notify_one();
    }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    Slot& s_;
  };
};

Gateway::Gateway(GatewayOptions opts)
    : opts_(std::move(opts)), cache_(opts_.cache_dir.empty() ? ResponseCache() : ResponseCache(opts_.cache_dir)) {
  if (opts_.attempts < 1) throw ConfigError("gateway attempts must be positive");
  if (opts_.batch_limit < 1) throw ConfigError("batch limit must be positive");
}

Gateway::~Gateway() = default;

void Gateway::add_adapter(std::unique_ptr<ModelAdapter> adapter) {
  const auto id = adapter->model_id();
  if (slots_.count(id)) throw ConfigError("duplicate model id '" + id + "'");
  auto s = std::make_unique<Slot>();
  s->adapter = std::move(adapter);
  slots_.emplace(id, std::move(s));
}

bool Gateway::has_adapter(const std::string& model_id) const { return slots_.count(model_id) > 0; }

Gateway::Slot& Gateway::slot(const std::string& model_id) const {
  const auto it = slots_.find(model_id);
  if (it == slots_.end()) throw NotFound("unknown model '" + model_id + "'");
  return *it->second;
}

const ModelAdapter& Gateway::adapter(const std::string& model_id) const { return *slot(model_id).adapter; }

std::vector<std::string> Gateway::model_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : slots_) out.push_back(id);
  return out;
}

Completion Gateway::complete(const std::string& model_id, const Prompt& prompt, bool* cached, double* latency_ms) {
  auto& s = slot(model_id);
  const auto& cfg = s.adapter->settings();
  const auto key = cache_key(model_id, cfg.llm_id, cfg.temperature, cache_material(prompt), prompt.iteration);
  if (opts_.cache_enabled) {
    if (auto hit = cache_.find(key)) {
      if (cached) *cached = true;
      if (latency_ms) *latency_ms = hit->latency_ms;
      return hit->completion;
    }
  }
  if (cached) *cached = false;

  std::string last_error;
  for (int attempt = 0; attempt < opts_.attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(opts_.backoff_base * (1 << (attempt - 1)));
    try {
      Slot::Permit permit(s);
      ++calls_;
      const auto start = std::chrono::steady_clock::now();
      auto c = s.adapter->complete(prompt);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (opts_.cache_enabled) cache_.insert(key, {c, ms});
      if (latency_ms) *latency_ms = ms;
      return c;
    } catch (const GatewayError& e) {
      last_error = e.what();
    }
  }
  throw GatewayError(last_error);
}

GenerationRecord Gateway::generate_sql(const std::string& model_id, const Prompt& prompt) {
  GenerationRecord r;
  r.model_id = model_id;
  r.iteration = prompt.iteration;
  if (const auto* t = prompt.sql_task()) r.dp_id = t->dp_id;
  const auto text = prompt_text(prompt);
  r.prompt_chars = text.size();
  try {
    bool cached = false;
    double ms = 0.0;
    const auto c = complete(model_id, prompt, &cached, &ms);
    r.sql_text = extract_sql(c.text);
    r.response_chars = c.text.size();
    r.input_tokens = c.input_tokens;
    r.output_tokens = c.output_tokens;
    r.latency_ms = ms;
    r.cached = cached;
  } catch (const GatewayError& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<GenerationRecord> Gateway::submit_batch(const std::string& model_id, const std::vector<Prompt>& prompts) {
  slot(model_id);  // unknown ids fail before any work starts
  std::vector<GenerationRecord> out(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) out[i] = generate_sql(model_id, prompts[i]);
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(opts_.batch_limit), prompts.size());
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
  }
  return out;
}

}  // namespace sqleval::gateway
