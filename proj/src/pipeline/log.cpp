#include "sqleval/pipeline/log.hpp"

#include <sstream>

#include "sqleval/workload/workload.hpp"

namespace sqleval::pipeline {

using nlohmann::json;

json to_json(const LogEvent& e) {
  return {{"seq", e.seq},         {"ts", e.ts},           {"level", e.level},
          {"event", e.event},     {"message", e.message}, {"fields", e.fields}};
}

LogEvent log_event_from_json(const json& j) {
  LogEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.ts = j.value("ts", "");
  e.level = j.value("level", "info");
  e.event = j.value("event", "");
  e.message = j.value("message", "");
  e.fields = j.value("fields", json::object());
  return e;
}

void RunLog::set_sink(Sink sink) {
  std::lock_guard lock(mu_);
  sink_ = std::move(sink);
}

void RunLog::emit(std::string level, std::string event, std::string message, json fields) {
  Sink sink;
  LogEvent e;
  {
    std::lock_guard lock(mu_);
    e.seq = events_.size() + 1;
    e.ts = workload::utc_timestamp();
    e.level = std::move(level);
    e.event = std::move(event);
    e.message = std::move(message);
    e.fields = std::move(fields);
    events_.push_back(e);
    sink = sink_;
  }
  cv_.notify_all();
  if (sink) sink(e);
}

std::vector<LogEvent> RunLog::after(std::uint64_t after, std::chrono::milliseconds wait) const {
  std::unique_lock lock(mu_);
  if (wait.count() > 0)
    cv_.wait_for(lock, wait, [&] { return closed_ || events_.size() > after; });
  if (after >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::uint64_t RunLog::last_seq() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

void RunLog::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool RunLog::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::string RunLog::ndjson() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : events_) out += to_json(e).dump() + "\n";
  return out;
}

std::vector<LogEvent> parse_ndjson_log(const std::string& text) {
  std::vector<LogEvent> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(log_event_from_json(json::parse(line)));
  return out;
}

}  // namespace sqleval::pipeline
