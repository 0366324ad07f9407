#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfk/extreal.hpp"
#include "sfk/set.hpp"
#include "sfk/space.hpp"

namespace sfk {

enum class FnOp : std::uint8_t {
  Id,
  Const,
  Lit,
  Proj1,
  Proj2,
  Pair,
  InjL,
  InjR,
  Case,
  Compose,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Min,
  Max,
  Neg,
  Abs,
  Floor,
  Exp,
  Log,
  Sqrt,
  NatOfFloor,
  Indicator,
  RestrictTo,
  IfSet,
  PdfNormal,
  PdfBeta,
  PmfPoisson,
  PmfBinomial,
  Table,
  Layer,
  External,
};

class FnExpr;

// Opaque primitive supplied by other modules (inverse CDFs, piecewise samplers).
class FnExternal {
 public:
  virtual ~FnExternal() = default;
  virtual Point apply(const Point& p) const = 0;
  virtual std::string str() const = 0;
  virtual SpaceExpr codomain(const SpaceExpr& domain) const = 0;
  virtual bool total() const { return false; }
  // nullopt when the preimage is not computable.
  virtual std::optional<SetExpr> preimage(const SpaceExpr& domain, const SetExpr& target) const;
};

// Measurable partial functions as terms. Compose(f, g) is f after g.
class FnExpr {
 public:
  FnExpr();  // Id

  static FnExpr id();
  static FnExpr constant(const Point& p, const SpaceExpr& space);
  static FnExpr lit(const Rational& q);
  static FnExpr lit(const ExtReal& w);
  static FnExpr lit_inf();
  static FnExpr proj1();
  static FnExpr proj2();
  static FnExpr pair(const FnExpr& a, const FnExpr& b);
  static FnExpr inj_l(const SpaceExpr& right);
  static FnExpr inj_r(const SpaceExpr& left);
  static FnExpr case_of(const FnExpr& on_left, const FnExpr& on_right);
  static FnExpr compose(const FnExpr& outer, const FnExpr& inner);
  static FnExpr binary(FnOp op, const FnExpr& a, const FnExpr& b);
  static FnExpr unary(FnOp op, const FnExpr& arg = FnExpr());
  static FnExpr indicator(const SetExpr& s);
  static FnExpr restrict_to(const SetExpr& s);
  static FnExpr if_set(const SetExpr& s, const FnExpr& then_f, const FnExpr& else_f);
  static FnExpr pdf_normal(const FnExpr& at, const FnExpr& mean, const FnExpr& sd);
  static FnExpr pdf_beta(const FnExpr& at, const FnExpr& a, const FnExpr& b);
  static FnExpr pmf_poisson(const FnExpr& at, const FnExpr& rate);
  static FnExpr pmf_binomial(const FnExpr& at, const FnExpr& n, const FnExpr& p);
  static FnExpr table(std::vector<std::pair<Point, ExtReal>> entries, const ExtReal& dflt);
  static FnExpr layer(const ExtReal& k, const FnExpr& f);
  static FnExpr external(std::shared_ptr<const FnExternal> ext);

  static FnExpr add(const FnExpr& a, const FnExpr& b) { return binary(FnOp::Add, a, b); }
  static FnExpr sub(const FnExpr& a, const FnExpr& b) { return binary(FnOp::Sub, a, b); }
  static FnExpr mul(const FnExpr& a, const FnExpr& b) { return binary(FnOp::Mul, a, b); }
  static FnExpr div(const FnExpr& a, const FnExpr& b) { return binary(FnOp::Div, a, b); }

  FnOp op() const;
  const std::vector<FnExpr>& args() const;
  const FnExpr& arg(std::size_t i) const { return args().at(i); }
  const SetExpr& set() const;
  const Point& point() const;
  const SpaceExpr& space() const;
  bool lit_is_inf() const;
  const Rational& lit_value() const;
  const std::vector<std::pair<Point, ExtReal>>& table_entries() const;
  const ExtReal& weight() const;  // Table default, Layer offset
  const FnExternal& ext() const;

  bool is_id() const { return op() == FnOp::Id; }
  std::string str() const;

  friend bool operator==(const FnExpr& a, const FnExpr& b) { return a.str() == b.str(); }

  struct Node;

 private:
  explicit FnExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

const char* fn_op_name(FnOp op);

// Pointwise evaluation; returns Point::bottom() where f is undefined.
Point eval_fn(const FnExpr& f, const Point& p);
// Value of a [0,inf]-valued function: bottom counts as 0, negative reals are NumericDomain.
ExtReal as_weight(const Point& v);
ExtReal eval_weight(const FnExpr& f, const Point& p);

SpaceExpr codomain(const FnExpr& f, const SpaceExpr& domain);
bool is_total(const FnExpr& f);

// f^{-1}(target). Unsupported outside the structured sub-language.
SetExpr preimage(const FnExpr& f, const SpaceExpr& domain, const SetExpr& target);
std::optional<SetExpr> try_preimage(const FnExpr& f, const SpaceExpr& domain, const SetExpr& target);

FnExpr simplify(const FnExpr& f, const SpaceExpr& domain);
// The section y -> f(x, y) of a function on a product space.
FnExpr section(const FnExpr& f, const SpaceExpr& domain, const Point& x);

// Zero and infinity regions of a [0,inf]-valued function. When ae is set the regions are
// exact only up to a Lebesgue-null set of real coordinates.
struct ValueClasses {
  SetExpr zero;
  SetExpr inf;
  bool ae = false;
};
ValueClasses value_classes(const FnExpr& f, const SpaceExpr& domain);

// Partition of the domain into sets on which f is constant, when derivable.
using ConstantPieces = std::vector<std::pair<SetExpr, ExtReal>>;
std::optional<ConstantPieces> constant_pieces(const FnExpr& f, const SpaceExpr& domain);

// Points where a function of one real variable may jump or lose smoothness.
std::vector<double> real_breakpoints(const FnExpr& f);

}  // namespace sfk
