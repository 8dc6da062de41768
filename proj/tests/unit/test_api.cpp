#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "sqleval/api/service.hpp"
#include "sqleval/util/files.hpp"
#include "support/workdir.hpp"

using namespace sqleval;
using nlohmann::json;

namespace {

// Blocks every completion until released.
class GatedAdapter final : public gateway::ModelAdapter {
 public:
  GatedAdapter(gateway::AdapterSettings s, const std::atomic<bool>& open) : ModelAdapter(std::move(s)), open_(open) {}
  gateway::Completion complete(const gateway::Prompt&) override {
    while (!open_) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return {"SELECT 1", 1, 1};
  }

 private:
  const std::atomic<bool>& open_;
};

struct Harness {
  testing::TempDir dir{"api"};
  pipeline::Workspace ws{dir.path(), testing::data_dir()};
  std::atomic<bool> gate{false};
  api::RunService service;
  api::ApiServer server;
  int port = 0;
  std::thread thread;
  httplib::Client client;

  Harness()
      : service(ws, options()),
        server(service),
        port(server.bind("127.0.0.1", 0)),
        thread([this] { server.serve(); }),
        client("127.0.0.1", port) {
    client.set_read_timeout(std::chrono::seconds(30));
    for (int i = 0; i < 200 && !client.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~Harness() {
    gate = true;
    server.stop();
    thread.join();
    service.shutdown();
  }

  api::ServiceOptions options() {
    api::ServiceOptions o;
    o.control.adapter_factory = [this](const gateway::AdapterSettings& s) -> std::unique_ptr<gateway::ModelAdapter> {
      if (s.model_id == "gated") return std::make_unique<GatedAdapter>(s, gate);
      return nullptr;
    };
    return o;
  }

  json post(const std::string& path, const json& body, int expect) {
    auto res = client.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    INFO(res->body);
    CHECK(res->status == expect);
    return res->body.empty() ? json() : json::parse(res->body);
  }
  json get(const std::string& path, int expect = 200) {
    auto res = client.Get(path);
    REQUIRE(res);
    INFO(res->body);
    CHECK(res->status == expect);
    return json::parse(res->body);
  }

  json wait_done(const std::string& id) {
    for (int i = 0; i < 3000; ++i) {
      const auto s = get("/runs/" + id + "/status");
      const auto state = s.at("state").get<std::string>();
      if (state == "completed" || state == "failed") return s;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    FAIL("run did not finish");
    return {};
  }
};

json oracle_config(const std::string& workload = "demo_easy") {
  return {{"workload", workload},
          {"models", json::array({{{"model_id", "oracle"}, {"kind", "mock_oracle"}}})},
          {"metrics", {"EA", "EM", "CC"}}};
}

json gated_config() {
  return {{"workload", "demo_easy"},
          {"models", json::array({{{"model_id", "gated"}, {"kind", "external_http"}}})},
          {"metrics", {"EA"}},
          {"cache", false}};
}

std::vector<json> ndjson(const std::string& text) {
  std::vector<json> out;
  std::size_t start = 0;
  for (auto nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', start)) {
    out.push_back(json::parse(text.substr(start, nl - start)));
    start = nl + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("api: submitted runs complete and expose report, records and plots") {
  Harness h;
  CHECK(h.get("/health")["status"] == "ok");
  const auto accepted = h.post("/runs", oracle_config(), 202);
  const auto id = accepted.at("run_id").get<std::string>();
  CHECK(accepted["state"] == "queued");
  const auto status = h.wait_done(id);
  CHECK(status["state"] == "completed");
  CHECK(status["progress"]["done"] == status["progress"]["total"]);

  auto res = h.client.Get("/runs/" + id + "/report");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == util::read_file(h.ws.runs_dir() / id / "report.json"));
  const auto report = json::parse(res->body);
  CHECK(report["run_id"] == id);

  const auto records = h.get("/runs/" + id + "/records");
  REQUIRE(records.size() == 20);
  for (const auto& r : records) {
    CHECK(r.contains("question"));
    CHECK(r["generation"]["sql_text"] == r["gt_sql"]);
  }

  const auto plot = h.get("/runs/" + id + "/plots/model_comparison/EA");
  CHECK(plot["kind"] == "model_comparison");
  CHECK(plot["series"].size() == 1);
  h.get("/runs/" + id + "/plots/pie/EA", 404);
  h.get("/runs/" + id + "/plots/scaling/XX", 404);

  const auto list = h.get("/runs");
  REQUIRE(list.size() == 1);
  CHECK(list[0]["run_id"] == id);

  const auto workloads = h.get("/workloads");
  CHECK(workloads.size() >= 3);
  const auto catalog = h.get("/catalog");
  CHECK(catalog.size() >= 1);
  CHECK(catalog[0].contains("db_id"));
  const auto models = h.get("/models");
  bool has_oracle = false;
  for (const auto& m : models) has_oracle |= m["kind"] == "mock_oracle";
  CHECK(has_oracle);

  auto opts = h.client.Options("/runs");
  REQUIRE(opts);
  CHECK(opts->status == 204);
  CHECK(opts->get_header_value("Access-Control-Allow-Origin") == "*");
}

TEST_CASE("api: log batches are disjoint, contiguous and match the persisted log") {
  Harness h;
  const auto id = h.post("/runs", oracle_config("demo_medium"), 202).at("run_id").get<std::string>();
  std::vector<json> seen;
  std::uint64_t cursor = 0;
  for (int i = 0; i < 2000; ++i) {
    auto res = h.client.Get("/runs/" + id + "/logs?after=" + std::to_string(cursor) + "&wait_ms=200");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto batch = ndjson(res->body);
    for (const auto& e : batch) {
      CHECK(e["seq"].get<std::uint64_t>() == cursor + 1);
      cursor = e["seq"].get<std::uint64_t>();
      seen.push_back(e);
    }
    CHECK(std::stoull(res->get_header_value("X-Last-Seq")) == cursor);
    const auto state = h.get("/runs/" + id + "/status")["state"];
    if (batch.empty() && (state == "completed" || state == "failed")) break;
  }
  REQUIRE(!seen.empty());
  CHECK(seen.front()["event"] == "queued");
  const auto disk = ndjson(util::read_file(h.ws.runs_dir() / id / "logs.ndjson"));
  CHECK(disk == seen);

  // Served from disk for a run this process did not execute.
  api::RunService fresh(h.ws);
  const auto replay = fresh.logs(id, 3, std::chrono::milliseconds(0));
  REQUIRE(replay.size() == seen.size() - 3);
  CHECK(replay.front().seq == 4);
  CHECK(fresh.status(id).state == api::RunState::completed);
}

TEST_CASE("api: invalid requests map to 4xx with code and message") {
  Harness h;
  auto bad = h.post("/runs", {{"workload", "demo_easy"}, {"models", json::array()}}, 400);
  CHECK(bad["code"] == "invalid_config");
  CHECK(!bad["message"].get<std::string>().empty());
  CHECK(h.post("/runs", {{"workload", "nope"}, {"models", {"mock_oracle"}}}, 400)["code"] == "invalid_config");
  CHECK(h.post("/runs", {{"workload", "demo_easy"}, {"models", {"mock_oracle"}}, {"bogus", 1}}, 400)["code"] ==
        "invalid_config");
  auto res = h.client.Post("/runs", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body).contains("message"));

  CHECK(h.get("/runs/run-missing/status", 404)["code"] == "not_found");
  h.get("/runs/run-missing/report", 404);
  h.get("/nowhere", 404);
  auto logs = h.client.Get("/runs/run-missing/logs");
  REQUIRE(logs);
  CHECK(logs->status == 404);
  auto cursor = h.client.Get("/runs/run-missing/logs?after=abc");
  REQUIRE(cursor);
  CHECK(cursor->status == 400);

  const auto id = h.post("/runs", oracle_config(), 202).at("run_id").get<std::string>();
  h.wait_done(id);
  auto dup = oracle_config();
  dup["run_id"] = id;
  CHECK(h.post("/runs", dup, 400)["code"] == "invalid_config");
  // The oracle run has nothing below the threshold.
  const auto none = h.post("/workloads/demo_easy/augment", {{"run_id", id}, {"threshold", 0.0}, {"per_subcat", 3}}, 400);
  CHECK(none["message"].get<std::string>().find("no weak subcategories") != std::string::npos);
  h.post("/workloads/demo_medium/augment", {{"run_id", id}, {"threshold", 0.5}, {"per_subcat", 3}}, 400);
  h.post("/workloads/demo_easy/augment", {{"run_id", "run-missing"}, {"threshold", 0.5}, {"per_subcat", 3}}, 404);
}

TEST_CASE("api: runs execute in submission order and augment waits for completion") {
  Harness h;
  const auto first = h.post("/runs", gated_config(), 202).at("run_id").get<std::string>();
  const auto second = h.post("/runs", oracle_config(), 202).at("run_id").get<std::string>();
  for (int i = 0; i < 500 && h.get("/runs/" + first + "/status")["state"] != "running"; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK(h.get("/runs/" + first + "/status")["state"] == "running");
  CHECK(h.get("/runs/" + second + "/status")["state"] == "queued");

  CHECK(h.post("/workloads/demo_easy/augment", {{"run_id", first}, {"threshold", 0.5}, {"per_subcat", 3}}, 409)["code"] ==
        "conflict");
  h.get("/runs/" + first + "/report", 409);
  h.get("/runs/" + second + "/plots/scaling/EA", 409);

  h.gate = true;
  const auto s1 = h.wait_done(first);
  const auto s2 = h.wait_done(second);
  CHECK(s1["state"] == "completed");
  CHECK(s2["state"] == "completed");
  CHECK(s1["finished_at"].get<std::string>() <= s2["started_at"].get<std::string>());

  // "SELECT 1" is wrong everywhere, so every subcategory is weak.
  const auto out = h.post("/workloads/demo_easy/augment", {{"run_id", first}, {"threshold", 0.5}, {"per_subcat", 1}}, 202);
  CHECK(out["workload_id"] == "demo_easy");
  CHECK(out["version"] == 2);
  CHECK(out["parent_version"] == 1);
  CHECK(!out["weak"].empty());
  CHECK(out["added_ids"].size() == out["weak"].size());
  bool listed = false;
  for (const auto& w : h.get("/workloads"))
    if (w["workload_id"] == "demo_easy") listed = w["versions"].size() == 2;
  CHECK(listed);
}
