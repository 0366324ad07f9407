#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfk/density.hpp"
#include "sfk/measure.hpp"

namespace sfk {

class KernelExpr;

// Countable kernel sum. tail(x, A, n) bounds sum_{i>=n} gen(i)(x, A); A may be null.
struct KernelSeqSpec {
  std::function<KernelExpr(std::uint64_t)> gen;
  std::function<ExtReal(const Point&, const SetExpr*, std::uint64_t)> tail;
  std::optional<std::uint64_t> length;
  bool disjoint = false;
  std::string text;
};

// Kernels given directly by a measure-valued function, used for derived results.
struct KernelFnSpec {
  std::function<MeasureExpr(const Point&)> at;
  MeasureClass cls = MeasureClass::SFinite;
  std::string text;
};

// Kernels X ~> Y as terms. Every constructor yields an s-finite kernel.
class KernelExpr {
 public:
  enum class Kind : std::uint8_t {
    Zero,
    Det,
    Const,
    Param,
    Compose,
    Push,
    Pull,
    Score,
    Sum,
    SeqSum,
    ProdL,
    ProdR,
    Fn,
  };

  KernelExpr();  // zero kernel unit ~> unit

  static KernelExpr zero(const SpaceExpr& dom, const SpaceExpr& cod);
  static KernelExpr det(const FnExpr& f, const SpaceExpr& dom);
  static KernelExpr constant(const MeasureExpr& m, const SpaceExpr& dom);
  // Named family whose parameters are functions of x:
  // normal, uniform, beta, bernoulli, binomial, poisson, dirac.
  static KernelExpr param(const std::string& family, std::vector<FnExpr> args, const SpaceExpr& dom);
  static KernelExpr compose(const KernelExpr& k, const KernelExpr& l);
  static KernelExpr push(const KernelExpr& k, const FnExpr& f);
  static KernelExpr pull(const FnExpr& g, const KernelExpr& k, const SpaceExpr& dom);
  static KernelExpr score(const KernelExpr& k, const FnExpr& f);
  static KernelExpr sum(const std::vector<KernelExpr>& ks);
  static KernelExpr seq_sum(const SpaceExpr& dom, const SpaceExpr& cod, std::shared_ptr<const KernelSeqSpec> spec);
  static KernelExpr prod_l(const KernelExpr& k, const KernelExpr& l);
  static KernelExpr prod_r(const KernelExpr& k, const KernelExpr& l);
  static KernelExpr from_fn(const SpaceExpr& dom, const SpaceExpr& cod, std::shared_ptr<const KernelFnSpec> spec);

  Kind kind() const;
  const SpaceExpr& dom() const;
  const SpaceExpr& cod() const;
  const FnExpr& fn() const;
  const MeasureExpr& measure() const;
  const std::string& family() const;
  const std::vector<FnExpr>& params() const;
  const std::vector<KernelExpr>& children() const;
  const KernelExpr& child(std::size_t i = 0) const { return children().at(i); }
  const KernelSeqSpec& seq() const;
  const KernelFnSpec& fn_spec() const;

  std::string str() const;

 private:
  struct Node;
  explicit KernelExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

const char* kernel_kind_name(KernelExpr::Kind k);

// The measure k(x, -).
MeasureExpr eval_kernel(const KernelExpr& k, const Point& x);

// V |-> integral of l(y, V) against m(dy).
MeasureExpr bind_measure(const MeasureExpr& m, const KernelExpr& l);

// The measure when k does not depend on its argument (decided syntactically).
std::optional<MeasureExpr> constant_measure(const KernelExpr& k);

// (x, y) |-> l(x): a kernel X*Y ~> Z from l : X ~> Z.
KernelExpr lift(const KernelExpr& l, const SpaceExpr& y);

MeasureClass classify_kernel(const KernelExpr& k, const EvalConfig& cfg = {});

// Measure-level singularity and absolute continuity on the density-form fragment.
std::optional<SetExpr> singular_witness(const MeasureExpr& k, const MeasureExpr& l, const EvalConfig& cfg = {});
enum class AbsMode : std::uint8_t { Plain, ZeroInfty };
bool measure_abs_continuous(const MeasureExpr& k, const MeasureExpr& l, AbsMode mode, const EvalConfig& cfg = {});

// A set A on X*Y with k supported in A and l supported in its complement, when derivable.
std::optional<SetExpr> mutually_singular(const KernelExpr& k, const KernelExpr& l, const EvalConfig& cfg = {});
bool abs_continuous(const KernelExpr& k, const KernelExpr& l, AbsMode mode, const EvalConfig& cfg = {});

// k = score(kernel, factor) with factor valued in {1, inf} and kernel sigma-finite.
struct KernelOneInfty {
  KernelExpr kernel;
  FnExpr factor;  // on X*Y
};
KernelOneInfty factorize_one_infty(const KernelExpr& k, const EvalConfig& cfg = {});

// A sigma-finite kernel X ~> Nat*Y with piece i on the slice {i}*Y; pushing along proj2 gives k.
struct SigmaFinitePresentation {
  KernelExpr kernel;
  FnExpr projection;
};
SigmaFinitePresentation sigma_finite_presentation(const KernelExpr& k, const EvalConfig& cfg = {});

// Rows (x, k(x)) of a kernel on a finite domain; nullopt for infinite domains.
std::optional<std::vector<std::pair<Point, MeasureExpr>>> finite_rows(const KernelExpr& k);
// Per-point sets or functions on Y assembled into one on X*Y.
SetExpr lift_set(const SpaceExpr& dom, const SpaceExpr& cod, const std::vector<std::pair<Point, SetExpr>>& rows);
FnExpr lift_fn(const SpaceExpr& dom, const SpaceExpr& cod, const std::vector<std::pair<Point, FnExpr>>& rows);
// f(x, y) written as a function of y, when f ignores x.
std::optional<FnExpr> drop_first(const FnExpr& f);

}  // namespace sfk
