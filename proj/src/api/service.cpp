#include <algorithm>

#include "sqleval/api/service.hpp"
#include "sqleval/reporting/reporting.hpp"
#include "sqleval/util/files.hpp"

namespace sqleval::api {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(RunState s) {
  switch (s) {
    case RunState::queued: return "queued";
    case RunState::running: return "running";
    case RunState::completed: return "completed";
    case RunState::failed: return "failed";
  }
  return "?";
}

json RunStatus::to_json() const {
  json j = {{"run_id", run_id},
            {"state", api::to_string(state)},
            {"progress", {{"done", done}, {"total", total}}},
            {"queued_at", queued_at.empty() ? json() : json(queued_at)},
            {"started_at", started_at.empty() ? json() : json(started_at)},
            {"finished_at", finished_at.empty() ? json() : json(finished_at)},
            {"workload_id", workload_id}};
  if (!error.empty()) j["error"] = error;
  return j;
}

RunService::RunService(const pipeline::Workspace& ws, ServiceOptions opts)
    : ws_(ws), opts_(std::move(opts)), worker_([this](std::stop_token st) { worker_loop(st); }) {}

RunService::~RunService() { shutdown(); }

std::string RunService::submit(pipeline::RunConfig cfg) {
  cfg.validate();
  try {
    ws_.store(ws_.catalog(cfg.catalog)).versions(cfg.workload_id);
  } catch (const NotFound& e) {
    throw ConfigError(e.what());
  }
  auto e = std::make_shared<Entry>();
  {
    std::lock_guard lock(mu_);
    if (worker_.get_stop_token().stop_requested()) throw Conflict("service is shutting down");
    if (cfg.run_id.empty()) {
      do cfg.run_id = pipeline::new_run_id();
      while (entries_.count(cfg.run_id) || fs::exists(ws_.runs_dir() / cfg.run_id));
    }
    if (entries_.count(cfg.run_id) || fs::exists(ws_.runs_dir() / cfg.run_id))
      throw ConfigError("run '" + cfg.run_id + "' already exists");
    e->config = cfg;
    e->status.run_id = cfg.run_id;
    e->status.workload_id = cfg.workload_id;
    e->status.queued_at = workload::utc_timestamp();
    entries_[cfg.run_id] = e;
    queue_.push_back(e);
  }
  e->log.info("queued", "run " + cfg.run_id + " queued", {{"run_id", cfg.run_id}});
  cv_.notify_all();
  return cfg.run_id;
}

std::shared_ptr<RunService::Entry> RunService::find(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(run_id);
  return it == entries_.end() ? nullptr : it->second;
}

namespace {

RunStatus status_from_disk(const fs::path& runs_dir, const std::string& run_id) {
  const auto file = runs_dir / run_id / "run.json";
  if (run_id.empty() || run_id.front() == '.' || run_id.find('/') != std::string::npos || !fs::exists(file))
    throw NotFound("run '" + run_id + "' not found");
  const auto j = json::parse(util::read_file(file));
  RunStatus s;
  s.run_id = run_id;
  const bool interrupted = j.value("status", "") == "interrupted";
  s.state = interrupted ? RunState::failed : RunState::completed;
  if (interrupted) s.error = "interrupted";
  const auto& stats = j.at("stats");
  s.done = stats.value("tasks_done", std::size_t{0});
  s.total = stats.value("tasks_total", std::size_t{0});
  s.started_at = stats.value("started_at", "");
  s.finished_at = stats.value("finished_at", "");
  s.workload_id = j.at("workload").value("id", "");
  return s;
}

}  // namespace

RunStatus RunService::status(const std::string& run_id) const {
  if (auto e = find(run_id)) {
    std::lock_guard lock(mu_);
    return e->status;
  }
  return status_from_disk(ws_.runs_dir(), run_id);
}

std::vector<RunStatus> RunService::list() const {
  std::map<std::string, RunStatus> out;
  for (const auto& id : pipeline::list_runs(ws_.runs_dir())) {
    try {
      out[id] = status_from_disk(ws_.runs_dir(), id);
    } catch (const std::exception&) {
    }
  }
  std::lock_guard lock(mu_);
  for (const auto& [id, e] : entries_) out[id] = e->status;
  std::vector<RunStatus> v;
  for (auto& [id, s] : out) v.push_back(std::move(s));
  return v;
}

std::vector<pipeline::LogEvent> RunService::logs(const std::string& run_id, std::uint64_t after,
                                                 std::chrono::milliseconds wait) const {
  if (auto e = find(run_id)) return e->log.after(after, wait);
  status_from_disk(ws_.runs_dir(), run_id);
  std::vector<pipeline::LogEvent> out;
  for (auto& ev : pipeline::parse_ndjson_log(util::read_file(ws_.runs_dir() / run_id / "logs.ndjson")))
    if (ev.seq > after) out.push_back(std::move(ev));
  return out;
}

void RunService::require_finished(const std::string& run_id) const {
  const auto s = status(run_id);
  if (s.state == RunState::queued || s.state == RunState::running)
    throw Conflict("run '" + run_id + "' is " + to_string(s.state));
  if (!fs::exists(ws_.runs_dir() / run_id / "report.json"))
    throw NotFound("run '" + run_id + "' failed without a report: " + s.error);
}

std::string RunService::report(const std::string& run_id) const {
  require_finished(run_id);
  return util::read_file(ws_.runs_dir() / run_id / "report.json");
}

pipeline::AugmentOutcome RunService::augment(const std::string& workload_id, const pipeline::AugmentRequest& req) {
  require_finished(req.run_id);
  const auto s = status(req.run_id);
  if (s.state != RunState::completed) throw Conflict("run '" + req.run_id + "' did not complete");
  const auto run = json::parse(util::read_file(ws_.runs_dir() / req.run_id / "run.json"));
  const auto evaluated = run.at("workload").at("id").get<std::string>();
  if (evaluated != workload_id)
    throw ValidationError("run '" + req.run_id + "' evaluated workload '" + evaluated + "', not '" + workload_id + "'",
                          {});
  std::lock_guard lock(augment_mu_);
  return pipeline::augment_from_run(ws_, req, nullptr, opts_.control);
}

void RunService::wait_idle() const {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void RunService::shutdown() {
  if (!worker_.joinable()) return;
  {
    std::lock_guard lock(mu_);
    worker_.request_stop();
    cancel_ = true;
    for (auto& e : queue_) {
      e->status.state = RunState::failed;
      e->status.error = "service stopped before the run started";
      e->log.close();
    }
    queue_.clear();
  }
  cv_.notify_all();
  worker_.join();
}

void RunService::worker_loop(std::stop_token stop) {
  for (;;) {
    std::shared_ptr<Entry> e;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop.stop_requested() || !queue_.empty(); });
      if (stop.stop_requested()) return;
      e = queue_.front();
      queue_.pop_front();
      busy_ = true;
      e->status.state = RunState::running;
      e->status.started_at = workload::utc_timestamp();
    }
    execute(*e);
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    cv_.notify_all();
  }
}

void RunService::execute(Entry& e) {
  auto ctl = opts_.control;
  ctl.log = &e.log;
  ctl.cancel = &cancel_;
  ctl.progress = [&](std::size_t done, std::size_t total) {
    std::lock_guard lock(mu_);
    e.status.done = done;
    e.status.total = total;
  };
  RunState final_state = RunState::completed;
  std::string error;
  try {
    const auto result = pipeline::run_evaluation(e.config, ws_, ctl);
    pipeline::ArtifactHook hook;
    if (opts_.write_plots) {
      hook = [&](const fs::path& dir, const pipeline::RunReport& report) {
        auto versions = reporting::reports_by_version(ws_.runs_dir(), report.workload_id);
        versions[report.workload_version] = report;
        reporting::write_plots(dir, report, versions);
      };
    }
    pipeline::persist_run(result, e.log, ws_.runs_dir(), hook);
    if (result.stats.interrupted) {
      final_state = RunState::failed;
      error = "interrupted";
    }
  } catch (const std::exception& ex) {
    final_state = RunState::failed;
    error = ex.what();
    e.log.emit("error", "run_failed", error);
  }
  {
    std::lock_guard lock(mu_);
    e.status.state = final_state;
    e.status.error = error;
    e.status.finished_at = workload::utc_timestamp();
  }
  e.log.close();
}

}  // namespace sqleval::api
