#pragma once

#include <string>
#include <string_view>

namespace sqleval::util {

std::string sha256_hex(std::string_view data);

}  // namespace sqleval::util
