#pragma once

#include <cstdint>

namespace usrecon {

// SplitMix64 finalizer. Fast, stateless, good enough bit mixing for sampling
// streams and reproducible shuffles.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double to_unit_double(uint64_t bits) {
  // 53 high bits -> [0, 1)
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Small sequential generator for shuffles and parameter init where a stream
// identity is not needed.
struct SplitMix {
  uint64_t state;

  explicit SplitMix(uint64_t seed) : state(seed) {}
  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return to_unit_double(next()); }
  // Uniform in [0, n)
  uint64_t uniform_int(uint64_t n) { return next() % n; }
};

// Counter-based stream: the draw for a given key never depends on evaluation
// order, so concurrent or re-chunked evaluation reproduces bit-identical
// samples.
struct CounterRng {
  uint64_t seed = 0;

  uint64_t key(uint64_t frame, uint64_t pixel, uint64_t epoch,
               uint64_t draw) const {
    uint64_t k = splitmix64(seed ^ 0x7c1592ad3c21ff4bull);
    k = splitmix64(k ^ (frame + 0x51ull));
    k = splitmix64(k ^ (pixel + 0x9e77ull));
    k = splitmix64(k ^ (epoch + 0x2545ull));
    k = splitmix64(k ^ (draw + 0xb5ull));
    return k;
  }
  double uniform(uint64_t frame, uint64_t pixel, uint64_t epoch,
                 uint64_t draw) const {
    return to_unit_double(key(frame, pixel, epoch, draw));
  }
};

// Fisher-Yates with an explicit generator; identical output on every platform.
template <typename Vec>
void deterministic_shuffle(Vec& v, SplitMix& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform_int(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace usrecon
