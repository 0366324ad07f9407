#pragma once

#include <optional>
#include <string>

#include "sfk/kernel.hpp"

namespace sfk {

struct MeasureRn {
  FnExpr derivative;  // on Y
  SetExpr infty_region;
};

struct RnResult {
  FnExpr derivative;  // on X*Y
  SetExpr infty_region;
};

// d nu' / d nu. NotZeroInftyAbsCont unless nu' is 0-inf-absolutely continuous w.r.t. nu.
MeasureRn rn_derivative(const MeasureExpr& nu_prime, const MeasureExpr& nu, const EvalConfig& cfg = {});
RnResult rn_derivative(const KernelExpr& nu_prime, const KernelExpr& nu, const EvalConfig& cfg = {});

// The almost-everywhere infinity-uniqueness criterion for two derivatives.
bool rn_equal(const FnExpr& f, const FnExpr& g, const MeasureExpr& nu, const EvalConfig& cfg = {});
bool rn_equal(const FnExpr& f, const FnExpr& g, const KernelExpr& nu, const EvalConfig& cfg = {});

struct MeasureParts {
  MeasureExpr abs_cont;
  MeasureExpr inf_singular;
  MeasureExpr singular;
  SetExpr singular_witness;  // singular part lives here, l does not charge it
  SetExpr inf_region;        // inf-singular part lives here, inside l's top set
};

struct LebesgueParts {
  KernelExpr abs_cont;
  KernelExpr inf_singular;
  KernelExpr singular;
  SetExpr singular_witness;  // on X*Y
  SetExpr inf_region;
};

MeasureParts lebesgue_decompose(const MeasureExpr& k, const MeasureExpr& l, const EvalConfig& cfg = {});
LebesgueParts lebesgue_decompose(const KernelExpr& k, const KernelExpr& l, const EvalConfig& cfg = {});

// k is inf-singular w.r.t. l: k << l, k has only trivial 0-inf-sets, and k lives in a 0-inf-set of l.
bool inf_singular(const MeasureExpr& k, const MeasureExpr& l, const EvalConfig& cfg = {});

struct Disintegration {
  KernelExpr kernel;  // Z*Y ~> X
  std::string support_check;
  bool exact = false;
};

// Kernel Y ~> X with nu (x) k = mu along phi, for measures on a single point of Z.
Disintegration disintegrate(const MeasureExpr& mu, const MeasureExpr& nu, const FnExpr& phi,
                            const EvalConfig& cfg = {});
Disintegration disintegrate(const KernelExpr& mu, const KernelExpr& nu, const FnExpr& phi, const EvalConfig& cfg = {});

// y |-> integral of joint(y, -) against inner_ref, for a joint density on Y*X'.
FnExpr marginal_density(const FnExpr& joint, const SpaceExpr& space, const MeasureExpr& inner_ref,
                        const EvalConfig& cfg = {});

}  // namespace sfk
