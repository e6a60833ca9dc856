#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace nerfdyn {

// splitmix64; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_chain(std::uint64_t seed, std::uint64_t a) { return mix64(seed ^ mix64(a)); }
inline std::uint64_t seed_chain(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return seed_chain(seed_chain(seed, a), b);
}
inline std::uint64_t tag64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  return h;
}

// Deterministic random stream. mt19937 is fully specified by the standard;
// the distribution transforms below are written out explicitly so results are
// identical across standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    gen_.seed(seq);
  }

  std::uint32_t next_u32() { return gen_(); }

  // [0, 1)
  float uniform() { return static_cast<float>(gen_() * (1.0 / 4294967296.0)); }
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>((static_cast<std::uint64_t>(gen_()) * static_cast<std::uint64_t>(n)) >> 32);
  }

  // Standard normal via Box-Muller, pair-cached.
  float normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - gen_() * (1.0 / 4294967296.0);  // (0, 1]
    double u2 = gen_() * (1.0 / 4294967296.0);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = static_cast<float>(r * std::sin(a));
    has_spare_ = true;
    return static_cast<float>(r * std::cos(a));
  }

  float normal(float mean, float stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937 gen_;
  bool has_spare_ = false;
  float spare_ = 0.0f;
};

}  // namespace nerfdyn
