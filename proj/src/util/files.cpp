#include "sqleval/util/files.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "sqleval/errors.hpp"

namespace fs = std::filesystem;

namespace sqleval::util {

namespace {

std::string temp_suffix() {
  static std::atomic<unsigned> counter{0};
  std::ostringstream s;
  s << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000 << "."
    << counter++;
  return s.str();
}

}  // namespace

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void atomic_write(const fs::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  const fs::path tmp = p.string() + temp_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + p.string());
  }
}

void publish_directory(const fs::path& staging, const fs::path& target) {
  std::error_code ec;
  if (fs::exists(target)) {
    const fs::path old = target.string() + temp_suffix();
    fs::rename(target, old, ec);
    if (ec) throw IoError("cannot move aside " + target.string() + ": " + ec.message());
    fs::rename(staging, target, ec);
    if (ec) throw IoError("cannot publish " + target.string() + ": " + ec.message());
    fs::remove_all(old, ec);
    return;
  }
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  fs::rename(staging, target, ec);
  if (ec) throw IoError("cannot publish " + target.string() + ": " + ec.message());
}

}  // namespace sqleval::util
