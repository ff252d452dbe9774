#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace amoc {

// Seeded generator with portable draws. The standard <random> distributions
// are implementation-defined, so uniform/normal/index draws are computed here
// from raw mt19937_64 output to keep corpora and models identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a parent seed and a label, so that
// results do not depend on the order in which work items are processed.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

}  // namespace amoc
