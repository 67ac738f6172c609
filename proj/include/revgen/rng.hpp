#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace revgen {

/// Seeded generator with platform-independent derived distributions.
/// std::uniform_int_distribution and std::shuffle are implementation-defined,
/// so anything that must replay byte-identically goes through this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). `n` must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a key (e.g. a paper id) into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);

}  // namespace revgen
