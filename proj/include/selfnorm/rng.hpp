#pragma once

#include <cmath>
#include <cstdint>

namespace selfnorm {

// SplitMix64 finalizer; also used to derive stream seeds.
inline std::uint64_t splitmix64(std::uint64_t &state)
{
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed of the independent substream for path `path` of a run seeded with
// `seed`. Two rounds of SplitMix64 keep nearby (seed, path) pairs apart.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path)
{
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (path * 0xD1B54A32D192ED03ULL);
  return splitmix64(t);
}

// xoshiro256** seeded through SplitMix64, with the sampling primitives the
// process generators need. Normal variates use the polar method so streams
// do not depend on the standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed)
  {
    std::uint64_t sm = seed;
    for (auto &w : s_)
      w = splitmix64(sm);
  }

  std::uint64_t next()
  {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  // +1 or -1 with probability 1/2 each.
  double sign() { return (next() >> 63) ? 1.0 : -1.0; }

  double normal()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2 * uniform() - 1;
      v = 2 * uniform() - 1;
      q = u * u + v * v;
    } while (q >= 1 || q == 0);
    const double f = std::sqrt(-2 * std::log(q) / q);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double exponential() { return -std::log(uniform()); }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0;
};

} // namespace selfnorm
