#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sfk/kernel.hpp"

namespace sfk {

// Brute-force reference semantics on finite spaces with exact weights.
struct DenseMeasure {
  SpaceExpr space;
  std::vector<Point> points;  // enumerate(space)
  std::vector<ExtReal> w;

  static DenseMeasure zeros(const SpaceExpr& space);
  ExtReal at(const Point& p) const;
  ExtReal of(const SetExpr& a) const;
  ExtReal total() const;
  std::string str() const;
  friend bool operator==(const DenseMeasure& a, const DenseMeasure& b);
};

struct DenseKernel {
  SpaceExpr dom;
  SpaceExpr cod;
  std::vector<DenseMeasure> rows;  // indexed like enumerate(dom)

  static DenseKernel identity(const SpaceExpr& space);
  friend bool operator==(const DenseKernel& a, const DenseKernel& b);
};

DenseKernel o_compose(const DenseKernel& k, const DenseKernel& l);
// Both iterated sums of the product kernel x |-> k(x) (x) l(x).
DenseKernel o_prod_yz(const DenseKernel& k, const DenseKernel& l);
DenseKernel o_prod_zy(const DenseKernel& k, const DenseKernel& l);
// Product of k : X ~> Y with l : X*Y ~> Z.
DenseKernel o_prod_l(const DenseKernel& k, const DenseKernel& l);

// Pointwise derivative d nu'/d nu; NotZeroInftyAbsCont when nu' is not 0-inf-absolutely continuous.
std::vector<ExtReal> o_rn(const DenseMeasure& nu_prime, const DenseMeasure& nu);
DenseMeasure o_score(const DenseMeasure& nu, const std::vector<ExtReal>& d);

struct DenseParts {
  DenseMeasure abs_cont;
  DenseMeasure inf_singular;
  DenseMeasure singular;
};
DenseParts o_decompose(const DenseMeasure& k, const DenseMeasure& l);

struct DenseDisintegration {
  DenseKernel kernel;  // X ~> Theta
  DenseMeasure marginal;
  std::vector<bool> arbitrary;  // rows at marginal-zero points
};
// Rows of a joint on X*Theta normalised by the first marginal.
DenseDisintegration o_disintegrate(const DenseMeasure& joint);

// Conversions to and from the main representation.
MeasureExpr to_measure(const DenseMeasure& m);
KernelExpr to_kernel(const DenseKernel& k);
std::optional<DenseMeasure> dense_of(const MeasureExpr& m);
std::optional<DenseKernel> dense_of(const KernelExpr& k);

// Weights from {0, small rationals, inf}; inf with probability inf_rate.
ExtReal random_weight(std::mt19937_64& rng, double inf_rate = 0.1, double zero_rate = 0.2);
SpaceExpr random_fin_space(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 6);
DenseMeasure random_dense(std::mt19937_64& rng, const SpaceExpr& space, double inf_rate = 0.1);
DenseKernel random_dense_kernel(std::mt19937_64& rng, const SpaceExpr& dom, const SpaceExpr& cod, double inf_rate = 0.1);

}  // namespace sfk
