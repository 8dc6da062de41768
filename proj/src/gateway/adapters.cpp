#include <httplib.h>

#include <cstdlib>
#include <regex>

#include "sqleval/errors.hpp"
#include "sqleval/gateway/gateway.hpp"
#include "sqleval/gateway/templates.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/sql/render.hpp"

namespace sqleval::gateway {

using nlohmann::json;

const char* to_string(AdapterKind k) {
  switch (k) {
    case AdapterKind::direct_llm: return "direct_llm";
    case AdapterKind::external_http: return "external_http";
    case AdapterKind::mock_oracle: return "mock_oracle";
    case AdapterKind::mock_mutant: return "mock_mutant";
    case AdapterKind::mock_template: return "mock_template";
  }
  return "?";
}

AdapterKind adapter_kind_from_string(const std::string& s) {
  for (auto k : {AdapterKind::direct_llm, AdapterKind::external_http, AdapterKind::mock_oracle, AdapterKind::mock_mutant,
                 AdapterKind::mock_template})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown adapter kind '" + s + "'");
}

const char* to_string(Mutation m) { return m == Mutation::column_swap ? "column_swap" : "drop_order_by"; }

Mutation mutation_from_string(const std::string& s) {
  if (s == "column_swap" || s == "swap") return Mutation::column_swap;
  if (s == "drop_order_by") return Mutation::drop_order_by;
  throw ConfigError("unknown mutation '" + s + "'");
}

AdapterSettings AdapterSettings::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model entry must be an object");
  AdapterSettings s;
  s.model_id = j.value("model_id", j.value("id", std::string()));
  if (s.model_id.empty()) throw ConfigError("model entry without model_id");
  s.kind = adapter_kind_from_string(j.value("kind", std::string("mock_oracle")));
  s.endpoint = j.value("endpoint", std::string());
  s.llm_id = j.value("llm_id", std::string());
  s.temperature = j.value("temperature", 0.0);
  if (j.contains("mutation")) s.mutation = mutation_from_string(j.at("mutation").get<std::string>());
  s.icl_exemplars = j.value("icl_exemplars", 0);
  if (s.icl_exemplars < 0 || s.icl_exemplars > 3) throw ConfigError("icl_exemplars must be within 0..3");
  s.max_in_flight = j.value("max_in_flight", 8);
  if (s.max_in_flight < 1) throw ConfigError("max_in_flight must be positive");
  s.api_key_env = j.value("api_key_env", s.api_key_env);
  s.http_timeout_s = j.value("http_timeout_s", s.http_timeout_s);
  return s;
}

json AdapterSettings::to_json() const {
  json j = {{"model_id", model_id},         {"kind", gateway::to_string(kind)}, {"endpoint", endpoint},
            {"llm_id", llm_id},             {"temperature", temperature},       {"icl_exemplars", icl_exemplars},
            {"max_in_flight", max_in_flight}};
  if (kind == AdapterKind::mock_mutant) j["mutation"] = gateway::to_string(mutation);
  return j;
}

std::string mutate_sql(const std::string& text, Mutation m) {
  sql::QueryAst ast;
  try {
    ast = sql::parse_sql(text);
  } catch (const Error&) {
    return text;
  }
  if (m == Mutation::drop_order_by) {
    if (ast.root.order_by.empty()) return text;
    ast.root.order_by.clear();
    return sql::render(ast);
  }
  // Swap the first two select items of every top-level set-op branch.
  std::vector<sql::SelectCore*> cores;
  std::vector<sql::QueryBody*> stack{&ast.root.body};
  while (!stack.empty()) {
    auto* b = stack.back();
    stack.pop_back();
    switch (b->kind) {
      case sql::QueryBody::Kind::select: cores.push_back(&b->select); break;
      case sql::QueryBody::Kind::set_op:
        stack.push_back(b->rhs.get());
        stack.push_back(b->lhs.get());
        break;
      case sql::QueryBody::Kind::nested: stack.push_back(&b->nested->body); break;
    }
  }
  for (auto* c : cores)
    if (c->items.size() < 2) return text;
  for (auto* c : cores) std::swap(c->items[0], c->items[1]);
  return sql::render(ast);
}

CandidatePair parse_candidate(const std::string& reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open != std::string::npos && close != std::string::npos && open < close) {
    const auto j = json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (j.is_object() && j.contains("sql") && j["sql"].is_string())
      return {j.value("question", std::string()), extract_sql(j["sql"].get<std::string>())};
  }
  return {"", extract_sql(reply)};
}

std::vector<sql::TaxonomyLabel> template_labels(const std::string& db_id) {
  std::vector<sql::TaxonomyLabel> out;
  for (const auto& t : detail::templates())
    if (t.db_id == db_id) out.push_back(sql::TaxonomyLabel::parse(t.label));
  return out;
}

namespace {

const std::string& answer_for(const AnswerKey* answers, const Prompt& p) {
  const auto* task = p.sql_task();
  if (!task) throw GatewayError("mock adapters only answer SQL tasks");
  if (!answers) throw GatewayError("mock adapter has no answer key");
  const auto it = answers->find(task->dp_id);
  if (it == answers->end()) throw GatewayError("no answer for data point '" + task->dp_id + "'");
  return it->second;
}

class OracleAdapter final : public ModelAdapter {
 public:
  OracleAdapter(AdapterSettings s, std::shared_ptr<const AnswerKey> a) : ModelAdapter(std::move(s)), answers_(std::move(a)) {}
  Completion complete(const Prompt& p) override { return {answer_for(answers_.get(), p), {}, {}}; }

 private:
  std::shared_ptr<const AnswerKey> answers_;
};

class MutantAdapter final : public ModelAdapter {
 public:
  MutantAdapter(AdapterSettings s, std::shared_ptr<const AnswerKey> a) : ModelAdapter(std::move(s)), answers_(std::move(a)) {}
  Completion complete(const Prompt& p) override {
    return {mutate_sql(answer_for(answers_.get(), p), settings().mutation), {}, {}};
  }

 private:
  std::shared_ptr<const AnswerKey> answers_;
};

std::string fill(std::string text, int n) {
  const std::string token = "{n}";
  for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos))
    text.replace(pos, token.size(), std::to_string(n));
  return text;
}

class TemplateAdapter final : public ModelAdapter {
 public:
  using ModelAdapter::ModelAdapter;
  Completion complete(const Prompt& p) override {
    const auto* task = p.augment_task();
    if (!task) throw GatewayError("mock_template only proposes augmentation candidates");
    const auto code = task->target.subcategory_code();
    for (const auto& t : detail::templates()) {
      if (t.db_id != task->db_id || t.label != code) continue;
      const int n = task->attempt + 1;
      const auto& sql_text = t.sql[static_cast<std::size_t>(task->attempt) % t.sql.size()];
      return {json{{"question", fill(t.question, n)}, {"sql", fill(sql_text, n)}}.dump(), {}, {}};
    }
    throw GatewayError("no template for " + code + " on '" + task->db_id + "'");
  }
};

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

Url split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("invalid endpoint URL '" + url + "'");
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

json post_json(const AdapterSettings& s, const Url& url, const std::string& path, const json& body,
               const httplib::Headers& headers) {
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(s.http_timeout_s);
  client.set_write_timeout(s.http_timeout_s);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw GatewayError(s.model_id + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw GatewayError(s.model_id + ": HTTP " + std::to_string(res->status));
  auto j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw GatewayError(s.model_id + ": response is not a JSON object");
  return j;
}

std::optional<std::int64_t> int_field(const json& j, const char* key) {
  if (j.is_object() && j.contains(key) && j[key].is_number_integer()) return j[key].get<std::int64_t>();
  return std::nullopt;
}

class DirectLlmAdapter final : public ModelAdapter {
 public:
  explicit DirectLlmAdapter(AdapterSettings s) : ModelAdapter(std::move(s)) {
    std::string base = settings().endpoint;
    if (base.empty()) {
      const char* env = std::getenv("SQLEVAL_LLM_BASE_URL");
      if (!env || !*env) throw ConfigError(model_id() + ": no endpoint and SQLEVAL_LLM_BASE_URL unset");
      base = env;
    }
    url_ = split_url(base);
  }

  Completion complete(const Prompt& p) override {
    httplib::Headers headers;
    if (const char* key = std::getenv(settings().api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
    const json body = {{"model", settings().llm_id},
                       {"temperature", settings().temperature},
                       {"messages",
                        json::array({{{"role", "system"}, {"content", system_text(p)}},
                                     {{"role", "user"}, {"content", user_text(p)}}})}};
    const auto j = post_json(settings(), url_, url_.path + "/chat/completions", body, headers);
    try {
      Completion c;
      c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("usage")) {
        c.input_tokens = int_field(j["usage"], "prompt_tokens");
        c.output_tokens = int_field(j["usage"], "completion_tokens");
      }
      return c;
    } catch (const json::exception& e) {
      throw GatewayError(model_id() + ": malformed completion: " + e.what());
    }
  }

 private:
  Url url_;
};

class ExternalHttpAdapter final : public ModelAdapter {
 public:
  explicit ExternalHttpAdapter(AdapterSettings s) : ModelAdapter(std::move(s)) {
    if (settings().endpoint.empty()) throw ConfigError(model_id() + ": external_http needs an endpoint");
    url_ = split_url(settings().endpoint);
  }

  Completion complete(const Prompt& p) override {
    const auto* task = p.sql_task();
    if (!task) throw GatewayError(model_id() + ": external models only answer SQL tasks");
    json exemplars = json::array();
    for (const auto& e : task->exemplars) exemplars.push_back({{"question", e.question}, {"sql", e.sql}});
    const json body = {{"question", task->question},
                       {"schema", task->schema_text},
                       {"db_id", task->db_id},
                       {"exemplars", exemplars},
                       {"iteration", p.iteration}};
    const auto j = post_json(settings(), url_, url_.path.empty() ? "/" : url_.path, body, {});
    if (!j.contains("sql") || !j["sql"].is_string()) throw GatewayError(model_id() + ": response without 'sql'");
    Completion c{j["sql"].get<std::string>(), {}, {}};
    if (j.contains("usage")) {
      c.input_tokens = int_field(j["usage"], "input_tokens");
      c.output_tokens = int_field(j["usage"], "output_tokens");
    }
    return c;
  }

 private:
  Url url_;
};

}  // namespace

std::unique_ptr<ModelAdapter> make_adapter(AdapterSettings s, std::shared_ptr<const AnswerKey> answers) {
  switch (s.kind) {
    case AdapterKind::direct_llm: return std::make_unique<DirectLlmAdapter>(std::move(s));
    case AdapterKind::external_http: return std::make_unique<ExternalHttpAdapter>(std::move(s));
    case AdapterKind::mock_oracle: return std::make_unique<OracleAdapter>(std::move(s), std::move(answers));
    case AdapterKind::mock_mutant: return std::make_unique<MutantAdapter>(std::move(s), std::move(answers));
    case AdapterKind::mock_template: return std::make_unique<TemplateAdapter>(std::move(s));
  }
  throw ConfigError("unknown adapter kind");
}

}  // namespace sqleval::gateway
