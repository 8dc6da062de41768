#pragma once

#include <filesystem>
#include <string>

namespace sqleval::util {

std::string read_file(const std::filesystem::path& p);

// Writes to a sibling temp file, then renames over the target.
void atomic_write(const std::filesystem::path& p, const std::string& content);

// Replaces `target` with the directory `staging` in one rename where the
// platform allows it.
void publish_directory(const std::filesystem::path& staging, const std::filesystem::path& target);

}  // namespace sqleval::util
