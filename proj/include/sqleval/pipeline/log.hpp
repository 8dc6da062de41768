#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace sqleval::pipeline {

struct LogEvent {
  std::uint64_t seq = 0;  // 1-based, contiguous
  std::string ts;
  std::string level;  // info, warn, error
  std::string event;
  std::string message;
  nlohmann::json fields = nlohmann::json::object();
};

nlohmann::json to_json(const LogEvent& e);
LogEvent log_event_from_json(const nlohmann::json& j);

// Append-only event channel shared by the pipeline and its readers.
class RunLog {
 public:
  using Sink = std::function<void(const LogEvent&)>;

  void set_sink(Sink sink);

  void emit(std::string level, std::string event, std::string message,
            nlohmann::json fields = nlohmann::json::object());
  void info(std::string event, std::string message, nlohmann::json fields = nlohmann::json::object()) {
    emit("info", std::move(event), std::move(message), std::move(fields));
  }
  void warn(std::string event, std::string message, nlohmann::json fields = nlohmann::json::object()) {
    emit("warn", std::move(event), std::move(message), std::move(fields));
  }

  // Events with seq > after. Blocks up to `wait` when none are available
  // yet and the log is still open.
  std::vector<LogEvent> after(std::uint64_t after, std::chrono::milliseconds wait = std::chrono::milliseconds(0)) const;
  std::uint64_t last_seq() const;

  // Wakes waiting readers; later emits are still accepted.
  void close();
  bool closed() const;

  std::string ndjson() const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<LogEvent> events_;
  Sink sink_;
  bool closed_ = false;
};

std::vector<LogEvent> parse_ndjson_log(const std::string& text);

}  // namespace sqleval::pipeline
