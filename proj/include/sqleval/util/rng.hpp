#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sqleval::util {

// mt19937_64 with its own range reductions, so sequences are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// Stable seed derivation: mixes a base seed with a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

}  // namespace sqleval::util
