#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sfk/kernel.hpp"

namespace sfk {

// Randomness sources: uniform[0,1], counting(Nat) x uniform[0,1], Lebesgue on [0,inf), Lebesgue on R.
enum class Source : std::uint8_t { Unit01, NatUnit, HalfLine, RealLine };

const char* source_name(Source s);
std::optional<Source> parse_source(std::string_view name);
SpaceExpr source_space(Source s);
MeasureExpr source_measure(Source s);

// Generalized inverse CDF r |-> inf{t : F(t) > r} of one subprobability measure, bottom for
// r at or beyond the total mass. NotSubprobability for heavier measures.
class InverseCdf {
 public:
  explicit InverseCdf(const MeasureExpr& m, double tol = 1e-9, const EvalConfig& cfg = {});
  Point at(double r) const;
  const ExtReal& mass() const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

struct Randomiser {
  Source source = Source::Unit01;
  FnExpr det;  // S * source-space -> T, partial
  double tol = 1e-9;
  KernelExpr kernel;
};

// Inverse-CDF randomisation of a probability kernel. Atoms are ordered by Point order and
// r in [F(t-), F(t)) maps to t.
Randomiser randomise_prob(const KernelExpr& k, double tol = 1e-9, const EvalConfig& cfg = {});
// As above with r >= k(s)(T) mapping to bottom.
Randomiser randomise_subprob(const KernelExpr& k, double tol = 1e-9, const EvalConfig& cfg = {});
// Slice n of the source drives the n-th subprobability piece of k(s).
Randomiser randomise_sfinite(const KernelExpr& k, Source target, double tol = 1e-9, const EvalConfig& cfg = {});

// s |-> det(s, -)_* source.
KernelExpr randomised_kernel(const Randomiser& r);

// (n, p) |-> n + p and its inverse (floor, id - floor).
Point iso_nat_unit_to_halfline(const Point& p);
Point iso_halfline_to_nat_unit(const Point& p);
// [n, n+1) -> [2n, 2n+1) by r + floor(r); [-n-1, -n) -> [2n+1, 2n+2) by r - 3 floor(r) - 1.
double iso_real_to_halfline(double r);
double iso_halfline_to_real(double y);
Point iso_real_to_halfline(const Point& p);
Point iso_halfline_to_real(const Point& p);
// Exact images of bounded sets.
RealSet image_real_to_halfline(const RealSet& s);
RealSet image_halfline_to_real(const RealSet& s);

// A total map R -> T pushing Lebesgue measure to sigma. FiniteTotalMass when sigma(T) < inf.
FnExpr total_randomise(const MeasureExpr& sigma, double tol = 1e-9, const EvalConfig& cfg = {});

// splitmix64 of seed and range start.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t start);
// n draws of det(s, u) with u from the source; NatUnit-based sources pick the slice by a
// Geometric(1/2) draw.
std::vector<Point> sample_via(const Randomiser& r, const Point& s, std::uint64_t seed, std::uint64_t n);
Point draw_source(Source src, std::mt19937_64& rng);

}  // namespace sfk
