#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wit {

/// Deterministic per-replication substream: the stream for (seed, rep) is a
/// pure function of both, so worker scheduling cannot reorder draws.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream)
      : gen_(mix(seed, stream)) {}

  double uniform() {  // (0,1)
    const std::uint64_t bits = gen_() >> 11;  // 53 random bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double normal() {  // Box-Muller, one spare cached
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform(), v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double th = 2.0 * M_PI * v;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

 private:
  static std::uint64_t splitmix(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix(s);
    s ^= 0x9e3779b97f4a7c15ull * (stream + 1);
    std::uint64_t b = splitmix(s);
    return a ^ (b + 0x632be59bd9b4e019ull);
  }

  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wit
