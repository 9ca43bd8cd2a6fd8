#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace numlex {

// All randomness in a run flows from one root seed. Named sub-streams keep
// independent consumers (masking, init, shuffles, generators) decoupled, so
// e.g. prefetching batches out of order cannot change the draw sequence.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  static uint64_t derive(uint64_t root, std::string_view stream, uint64_t index = 0) {
    // FNV-1a over the stream name, then splitmix-style finalization.
    uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
      h ^= static_cast<uint8_t>(c);
      h *= 1099511628211ull;
    }
    uint64_t z = root + 0x9e3779b97f4a7c15ull * (h ^ (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static Rng substream(uint64_t root, std::string_view stream, uint64_t index = 0) {
    return Rng(derive(root, stream, index));
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  // Inclusive bounds.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace numlex
