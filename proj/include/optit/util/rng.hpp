#pragma once
#include <array>
#include <cstdint>
#include <span>

#include "optit/util/require.hpp"

namespace optit {

// Counter-based 64-bit generator. Every draw is a hash of (key, counter), and
// child streams are derived from the key alone, so results do not depend on
// thread scheduling or on how many draws a parent has made before splitting.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : key_(fmix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  std::uint64_t next_u64() { return draw(key_, ctr_++); }

  // Independent derived stream identified by `id`.
  Rng stream(std::uint64_t id) const {
    Rng r(0);
    r.key_ = draw(key_ ^ 0xa0761d6478bd642full, id);
    r.ctr_ = 0;
    return r;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Multiply-shift; bias is O(n / 2^64).
  std::uint32_t below(std::uint32_t n) {
    require(n > 0, "Rng::below: n must be positive");
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Sample an index from a (possibly unnormalized) nonnegative weight vector.
  int categorical(std::span<const double> w) {
    require(!w.empty(), "Rng::categorical: empty weights");
    double total = 0;
    for (double x : w) total += x;
    require(total > 0, "Rng::categorical: weights sum to zero");
    double target = uniform() * total;
    double acc = 0;
    int last_positive = 0;
    for (int i = 0; i < static_cast<int>(w.size()); ++i) {
      if (w[i] > 0) last_positive = i;
      acc += w[i];
      if (target < acc) return i;
    }
    return last_positive;
  }

 private:
  static std::uint64_t fmix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
  }
  static std::uint64_t draw(std::uint64_t key, std::uint64_t ctr) {
    std::uint64_t z = key + ctr * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace optit
