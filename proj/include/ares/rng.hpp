#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ares {

// Seeded generator with reproducible draws.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are not (their algorithms vary
// between library vendors), so the derived draws below are implemented
// here and count as part of the determinism contract:
//   uniform()        53 high bits of one engine output, in [0, 1)
//   uniform_index(n) rejection sampling over one or more engine outputs
//   normal()         Box-Muller over exactly two uniform() draws
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t uniform_index(std::size_t n);
  double normal();

  // Order-free child stream: the seed depends only on (parent, index).
  static Rng child(std::uint64_t parent_seed, std::uint64_t index) {
    return Rng(child_seed(parent_seed, index));
  }
  static std::uint64_t child_seed(std::uint64_t parent_seed, std::uint64_t index);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Fisher-Yates using uniform_index, so permutations are portable.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace ares
