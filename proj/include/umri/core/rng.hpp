#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace umri {

// splitmix64; used to derive independent sub-seeds from (seed, tag) pairs so
// every random quantity in the pipeline is a pure function of the run seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, stable across platforms
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
  return mix_seed(seed ^ mix_seed(hash_tag(tag)) ^ mix_seed(index * 0x9e3779b9ull + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double std = 1.0) {
    return std::normal_distribution<double>(mean, std)(engine_);
  }

  // normal resampled until within [mean - 2 std, mean + 2 std]
  double truncated_normal(double mean, double std) {
    for (;;) {
      const double v = normal(mean, std);
      if (v >= mean - 2.0 * std && v <= mean + 2.0 * std) return v;
    }
  }

  std::uint64_t next_u64() { return engine_(); }

  // Fisher-Yates; deterministic given the engine state.
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> dist(0, i - 1);
      std::swap(v[i - 1], v[dist(engine_)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace umri
