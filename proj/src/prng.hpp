#pragma once

#include <cstdint>

namespace tcat {

// splitmix64. The 8-byte little-endian state is the serialized PRNG state
// committed in checkpoint auxiliary data.
class Splitmix64 {
 public:
  explicit Splitmix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1): top 24 bits scaled by 2^-24, exact in binary32.
  float next_unit_f32() { return static_cast<float>(next() >> 40) * (1.0f / 16777216.0f); }

  // Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double next_unit_f64() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Uniform in [0, bound); bound >= 1. Modulo bias is acceptable for the
  // bounds used here (all far below 2^32).
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

  // The idx-th output of the stream seeded with `seed`, in O(1). Used to
  // derive independent child seeds.
  static std::uint64_t output_at(std::uint64_t seed, std::uint64_t idx) {
    return mix(seed + (idx + 1) * 0x9E3779B97F4A7C15ULL);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

}  // namespace tcat
