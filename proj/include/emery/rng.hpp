#pragma once

#include <cmath>
#include <cstdint>

namespace emery {

// splitmix64 step (Vigna's fixed-increment variant of SplittableRandom).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64_next(s);
}

// Counter-based stream derivation: the (seed, stream) pair maps to a fresh
// generator state, so path i gets the same randomness no matter how work is
// sliced across threads.
inline std::uint64_t split_stream(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0xA0761D6478BD642FULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // (0, 1]
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::acos(-1.0) * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace emery
