#include "revgen/rng.hpp"

#include <limits>

#include "revgen/text.hpp"

namespace revgen {

std::size_t Rng::uniform_index(std::size_t n) {
  // Rejection sampling keeps the result unbiased and platform-independent.
  const std::uint64_t range = n;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
  std::uint64_t h = text::fnv1a64(key, 0xcbf29ce484222325ULL ^ (base * 0x9E3779B97F4A7C15ULL));
  // splitmix64 finalizer
  h += 0x9E3779B97F4A7C15ULL;
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
  return h ^ (h >> 31);
}

}  // namespace revgen
