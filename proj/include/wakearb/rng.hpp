#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wakearb {

// One splitmix64 step. Used for seed derivation only; the heavy lifting is
// done by mt19937_64 (which the standard pins bit-exactly, unlike the
// std distributions -- hence the hand-rolled draws below).
inline uint64_t splitmix64_step(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Fold any number of tags into a base seed. Deterministic, order-sensitive.
inline uint64_t derive_seed(uint64_t base) {
  uint64_t s = base;
  return splitmix64_step(s);
}

template <typename... Rest>
inline uint64_t derive_seed(uint64_t base, uint64_t tag, Rest... rest) {
  uint64_t s = base + 0x9e3779b97f4a7c15ull * (tag + 1);
  return derive_seed(splitmix64_step(s), rest...);
}

// Small deterministic RNG facade. Identical output on every platform for a
// given seed, which the reproducibility guarantees lean on.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller, one spare cached
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // uniform integer in [0, bound), rejection sampled (no modulo bias)
  uint64_t integer(uint64_t bound) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % bound;
  }

  uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wakearb
