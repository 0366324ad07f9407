#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <gmpxx.h>

#include "sfk/extreal.hpp"

namespace sfk::test {

// Hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  Rational rational(int num_hi = 12, int den_hi = 6) {
    Rational q(integer(0, num_hi), integer(1, den_hi));
    q.canonicalize();
    return q;
  }

  // 0, small rationals, inf.
  ExtReal weight(double inf_rate = 0.15) {
    if (coin(inf_rate)) return ExtReal::inf();
    if (coin(0.2)) return ExtReal(0);
    return ExtReal::exact(rational());
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace sfk::test
