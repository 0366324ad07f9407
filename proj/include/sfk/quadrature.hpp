#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sfk/extreal.hpp"
#include "sfk/set.hpp"

namespace sfk {

struct QuadOptions {
  double tol = 1e-9;  // absolute
  int max_depth = 60;
  std::size_t max_evals = 4'000'000;
};

struct QuadResult {
  ExtReal value;  // exact zero when every sample was exactly zero
  double error = 0.0;
  bool capped = false;  // evaluation budget or depth exhausted somewhere
};

// Adaptive Simpson over the intervals of `region` (atoms are Lebesgue-null), split at `hints`.
// Unbounded ends use x = a + t/(1-t).
QuadResult integrate_lebesgue(const std::function<ExtReal(double)>& g, const RealSet& region,
                              const std::vector<double>& hints, const QuadOptions& opts);

// Plain double-valued adaptive Simpson on a finite interval, for oracles and CDFs.
double simpson(const std::function<double(double)>& g, double a, double b, double tol, int max_depth = 60);

}  // namespace sfk
