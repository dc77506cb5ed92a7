#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace decop {

/// Deterministic, platform-independent RNG (SplitMix64). std::shuffle and the
/// std distributions are implementation-defined across standard libraries, so
/// everything that must reproduce across toolchains goes through this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent child stream, e.g. one per bootstrap iteration.
  Rng fork(std::uint64_t index) const {
    Rng child(state_ ^ (0xd6e8feb86659fd93ULL * (index + 1)));
    child.next();
    return child;
  }

 private:
  std::uint64_t state_;
};

/// FNV-1a over arbitrary strings, mixed through SplitMix64. Used to key
/// per-trial simulated-model decisions so they are pure functions of
/// (seed, trial_id, stream).
inline std::uint64_t hash_key(std::uint64_t seed, std::string_view s, std::uint64_t stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= stream + 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

inline double hash_unit(std::uint64_t seed, std::string_view s, std::uint64_t stream) {
  return static_cast<double>(hash_key(seed, s, stream) >> 11) * 0x1.0p-53;
}

}  // namespace decop
