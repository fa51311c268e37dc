#pragma once

#include <cstdint>

namespace dae {

// xoshiro256** seeded through SplitMix64. The stream for a given seed is fixed by the
// algorithm, so sampled values reproduce across platforms and implementations.
//
// Derived quantities use these exact recipes:
//   uniform()      ((next() >> 11) + 0.5) * 2^-53, strictly inside (0, 1)
//   normal()       Box-Muller on two uniforms u1, u2: sqrt(-2 ln u1) * cos(2 pi u2) is returned
//                  first and sqrt(-2 ln u1) * sin(2 pi u2) is cached for the next call
//   below(n)       floor(uniform() * n)
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  std::uint64_t below(std::uint64_t n);

  // Independent stream keyed by (seed, stream), e.g. one per epoch or replica.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace dae
