#include <httplib.h>

#include "sqleval/api/service.hpp"
#include "sqleval/reporting/reporting.hpp"
#include "sqleval/util/files.hpp"

namespace sqleval::api {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

// Maps the library's exception types onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const Conflict& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const MissingMetric& e) {
    send_error(res, 404, "missing_metric", e.what());
  } catch (const ConfigError& e) {
    send_error(res, 400, "invalid_config", e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, "invalid_request", e.what());
  } catch (const InfeasibleAlignment& e) {
    send_error(res, 400, "infeasible_alignment", e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "invalid_json", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw ValidationError("request body is empty", {});
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("request body is not JSON: ") + e.what(), {});
  }
}

std::uint64_t query_number(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw ValidationError(std::string("query parameter '") + key + "' must be a non-negative integer", {});
}

json model_catalog() {
  return json::array({
      {{"kind", "mock_oracle"}, {"description", "returns the ground-truth SQL"}, {"requires", json::array()}},
      {{"kind", "mock_mutant"},
       {"description", "returns a mutated ground truth"},
       {"options", {{"mutation", {"column_swap", "drop_order_by"}}}},
       {"requires", json::array()}},
      {{"kind", "mock_template"},
       {"description", "proposes templated augmentation candidates"},
       {"requires", json::array()}},
      {{"kind", "direct_llm"},
       {"description", "chat-completions endpoint"},
       {"requires", {"endpoint or SQLEVAL_LLM_BASE_URL", "api key env var (default SQLEVAL_LLM_API_KEY)"}},
       {"configured", std::getenv("SQLEVAL_LLM_BASE_URL") != nullptr}},
      {{"kind", "external_http"},
       {"description", "external text-to-SQL system over HTTP"},
       {"requires", {"endpoint"}}},
  });
}

}  // namespace

struct ApiServer::Impl {
  RunService& svc;
  ServerOptions opts;
  httplib::Server http;

  Impl(RunService& s, ServerOptions o) : svc(s), opts(std::move(o)) { routes(); }

  void routes() {
    http.set_default_headers({{"Access-Control-Allow-Origin", opts.cors_origin},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    http.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, res.status, res.status == 404 ? "not_found" : "error", "no route for " + req.method + " " + req.path);
      return httplib::Server::HandlerResponse::Handled;
    });

    http.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

    http.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto id = svc.submit(pipeline::config_from_json(parse_body(req)));
        send_json(res, 202, {{"run_id", id}, {"state", "queued"}});
      });
    });
    http.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        json out = json::array();
        for (const auto& s : svc.list()) out.push_back(s.to_json());
        send_json(res, 200, out);
      });
    });
    http.Get(R"(/runs/([^/]+)/status)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, svc.status(req.matches[1]).to_json()); });
    });
    http.Get(R"(/runs/([^/]+)/logs)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto after = query_number(req, "after", 0);
        const auto wait = std::min<std::uint64_t>(query_number(req, "wait_ms", 0),
                                                  static_cast<std::uint64_t>(opts.max_long_poll.count()));
        std::string body;
        std::uint64_t last = after;
        for (const auto& e : svc.logs(req.matches[1], after, std::chrono::milliseconds(wait))) {
          body += pipeline::to_json(e).dump() + "\n";
          last = e.seq;
        }
        res.status = 200;
        res.set_header("X-Last-Seq", std::to_string(last));
        res.set_content(body, "application/x-ndjson");
      });
    });
    http.Get(R"(/runs/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(svc.report(req.matches[1]), "application/json");
      });
    });
    http.Get(R"(/runs/([^/]+)/records)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        svc.require_finished(id);
        const auto& ws = svc.workspace();
        const auto stored = pipeline::load_run(ws.runs_dir(), id);
        const auto w = ws.store(ws.catalog(stored.config.catalog)).load(stored.workload.id, stored.workload.version);
        json out = json::array();
        for (const auto& r : stored.records) {
          auto j = pipeline::to_json(r);
          if (const auto* dp = w.find(r.dp_id)) {
            j["question"] = dp->question;
            j["gt_sql"] = dp->gt_sql;
          }
          out.push_back(std::move(j));
        }
        send_json(res, 200, out);
      });
    });
    http.Get(R"(/runs/([^/]+)/plots/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        svc.require_finished(id);
        const auto kind = reporting::plot_kind_from_string(req.matches[2]);
        metrics::Metric metric;
        try {
          metric = metrics::metric_from_string(req.matches[3]);
        } catch (const std::exception&) {
          throw NotFound("unknown metric '" + std::string(req.matches[3]) + "'");
        }
        send_json(res, 200, reporting::to_json(reporting::plot_for_run(svc.workspace().runs_dir(), id, kind, metric)));
      });
    });
    http.Get("/workloads", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, svc.workspace().store().to_json()); });
    });
    http.Post(R"(/workloads/([^/]+)/augment)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        pipeline::AugmentRequest ar;
        ar.run_id = body.at("run_id").get<std::string>();
        ar.threshold = body.value("threshold", ar.threshold);
        ar.per_subcategory = body.value("per_subcat", body.value("per_subcategory", ar.per_subcategory));
        if (body.contains("model") && body["model"].is_string()) ar.model = body["model"].get<std::string>();
        if (body.contains("generator") && body["generator"].is_string())
          ar.generator = body["generator"].get<std::string>();
        const auto out = svc.augment(req.matches[1], ar);
        json weak = json::array();
        for (const auto& l : out.weak) weak.push_back(l.subcategory_code());
        json fills = json::array();
        for (const auto& f : out.result.fills) fills.push_back(f.to_json());
        send_json(res, 202,
                  {{"workload_id", out.result.workload.workload_id},
                   {"version", out.result.workload.version},
                   {"parent_version", out.result.workload.parent_version ? json(*out.result.workload.parent_version)
                                                                         : json()},
                   {"weak", weak},
                   {"added_ids", out.result.added_ids},
                   {"fills", fills}});
      });
    });
    http.Get("/catalog", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, svc.workspace().catalog().to_json()); });
    });
    http.Get("/models", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, model_catalog()); });
  }
};

ApiServer::ApiServer(RunService& service, ServerOptions opts) : impl_(std::make_unique<Impl>(service, std::move(opts))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->http.bind_to_any_port(host);
    if (p < 0) throw IoError("cannot bind " + host);
    return p;
  }
  if (!impl_->http.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::serve() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace sqleval::api
