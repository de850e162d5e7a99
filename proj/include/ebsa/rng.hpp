#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "ebsa/numkit.hpp"

namespace ebsa {

// Reproducible standard-normal stream.  mt19937_64 output is fixed by the
// C++ standard, and the Box-Muller transform below avoids the
// implementation-defined std::normal_distribution, so a given seed yields
// the same draws on every build of this code base.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (static_cast<double>(gen_()) + 1.0) * 0x1p-64;
    const double u2 = static_cast<double>(gen_()) * 0x1p-64;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

  Vector draw(std::size_t n) {
    Vector v(n);
    for (auto& e : v) e = next();
    return v;
  }

  double uniform() { return static_cast<double>(gen_()) * 0x1p-64; }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Stream seed for (base seed, problem name, repetition index).  Mixing keeps
/// repetitions independent and insensitive to the order problems are run in.
inline std::uint64_t mix_seed(std::uint64_t base, const std::string& name, std::uint64_t rep) {
  return splitmix64(base ^ fnv1a64(name) ^ (0x9E3779B97F4A7C15ull * (rep + 1)));
}

}  // namespace ebsa
