#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sqleval/errors.hpp"
#include "sqleval/pipeline/pipeline.hpp"

namespace sqleval::api {

// Request conflicts with the current state, e.g. augmenting from a run that
// has not finished.
class Conflict : public Error {
 public:
  using Error::Error;
};

enum class RunState { queued, running, completed, failed };

const char* to_string(RunState s);

struct RunStatus {
  std::string run_id;
  RunState state = RunState::queued;
  std::size_t done = 0;
  std::size_t total = 0;
  std::string queued_at;
  std::string started_at;
  std::string finished_at;
  std::string error;
  std::string workload_id;

  nlohmann::json to_json() const;
};

struct ServiceOptions {
  // Adapter factory and gateway settings handed to every run.
  pipeline::RunControl control;
  bool write_plots = true;
};

// Runs queue FIFO and execute one at a time on a background worker. Runs
// persisted by earlier processes are served from disk as completed.
class RunService {
 public:
  RunService(const pipeline::Workspace& ws, ServiceOptions opts = {});
  ~RunService();
  RunService(const RunService&) = delete;
  RunService& operator=(const RunService&) = delete;

  // Validates and queues; returns the run id. Throws ConfigError.
  std::string submit(pipeline::RunConfig cfg);

  RunStatus status(const std::string& run_id) const;  // NotFound
  std::vector<RunStatus> list() const;

  // Events after `after`, waiting up to `wait` while the run is live.
  std::vector<pipeline::LogEvent> logs(const std::string& run_id, std::uint64_t after,
                                       std::chrono::milliseconds wait) const;

  // report.json text; Conflict while the run is queued or running.
  std::string report(const std::string& run_id) const;
  void require_finished(const std::string& run_id) const;

  pipeline::AugmentOutcome augment(const std::string& workload_id, const pipeline::AugmentRequest& req);

  // Blocks until the queue is empty and nothing runs.
  void wait_idle() const;
  // Cancels the running run, drops queued ones and joins the worker.
  void shutdown();

  const pipeline::Workspace& workspace() const { return ws_; }

 private:
  struct Entry {
    RunStatus status;
    pipeline::RunConfig config;
    pipeline::RunLog log;
  };

  void worker_loop(std::stop_token stop);
  void execute(Entry& e);
  std::shared_ptr<Entry> find(const std::string& run_id) const;

  const pipeline::Workspace& ws_;
  ServiceOptions opts_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
  std::deque<std::shared_ptr<Entry>> queue_;
  bool busy_ = false;
  std::atomic<bool> cancel_{false};
  std::mutex augment_mu_;
  std::jthread worker_;
};

struct ServerOptions {
  std::string cors_origin = "*";
  std::chrono::milliseconds max_long_poll{30000};
};

// HTTP/JSON facade over a RunService. Errors are {code, message} bodies.
class ApiServer {
 public:
  ApiServer(RunService& service, ServerOptions opts = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds; port 0 picks a free one. Returns the bound port. Throws IoError.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sqleval::api
