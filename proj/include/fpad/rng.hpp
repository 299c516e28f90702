#ifndef FPAD_RNG_HPP
#define FPAD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fpad {

// Deterministic pseudo-random stream.
//
// Algorithm: splitmix64 (Steele/Lea/Flood) over a 64-bit state for raw
// draws; uniforms take the top 53 bits, normals use Box-Muller. Substreams
// are derived by hashing a label (FNV-1a) into the parent's seed, so the
// same (root seed, label path) always yields the same sequence regardless
// of how many draws the parent has made since construction.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed), seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Child stream independent of this stream's draw position.
  RngStream split(std::string_view label) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return RngStream(mix(seed_ ^ h));
  }

  RngStream split(std::uint64_t index) const {
    return RngStream(mix(seed_ ^ (0x9e3779b97f4a7c15ULL * (index + 1))));
  }

  // Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free modulo bias is negligible for the n used here, but
    // do it properly anyway.
    std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (no cached spare; two uniforms per draw
  // keeps the draw count predictable).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::uint64_t seed_;  // seed at construction; splits derive from this
};

}  // namespace fpad

#endif  // FPAD_RNG_HPP
