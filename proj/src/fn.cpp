#include "sfk/fn.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>

#include "sfk/errors.hpp"

namespace sfk {

std::optional<SetExpr> FnExternal::preimage(const SpaceExpr&, const SetExpr&) const { return std::nullopt; }

struct FnExpr::Node {
  FnOp op = FnOp::Id;
  std::vector<FnExpr> args;
  std::optional<SetExpr> set;
  Point point;
  SpaceExpr space;
  Rational q{0};
  bool inf = false;
  std::vector<std::pair<Point, ExtReal>> entries;
  ExtReal w;
  std::shared_ptr<const FnExternal> ext;
  mutable std::once_flag text_once;
  mutable std::string text;
};

namespace {

bool is_binary(FnOp op) {
  switch (op) {
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
    case FnOp::Div:
    case FnOp::Pow:
    case FnOp::Min:
    case FnOp::Max: return true;
    default: return false;
  }
}

bool is_unary(FnOp op) {
  switch (op) {
    case FnOp::Neg:
    case FnOp::Abs:
    case FnOp::Floor:
    case FnOp::Exp:
    case FnOp::Log:
    case FnOp::Sqrt:
    case FnOp::NatOfFloor: return true;
    default: return false;
  }
}

bool is_density(FnOp op) {
  return op == FnOp::PdfNormal || op == FnOp::PdfBeta || op == FnOp::PmfPoisson || op == FnOp::PmfBinomial;
}

}  // namespace

const char* fn_op_name(FnOp op) {
  switch (op) {
    case FnOp::Id: return "id";
    case FnOp::Const: return "const";
    case FnOp::Lit: return "lit";
    case FnOp::Proj1: return "fst";
    case FnOp::Proj2: return "snd";
    case FnOp::Pair: return "pair";
    case FnOp::InjL: return "inl";
    case FnOp::InjR: return "inr";
    case FnOp::Case: return "case";
    case FnOp::Compose: return "compose";
    case FnOp::Add: return "add";
    case FnOp::Sub: return "sub";
    case FnOp::Mul: return "mul";
    case FnOp::Div: return "div";
    case FnOp::Pow: return "pow";
    case FnOp::Min: return "min";
    case FnOp::Max: return "max";
    case FnOp::Neg: return "neg";
    case FnOp::Abs: return "abs";
    case FnOp::Floor: return "floor";
    case FnOp::Exp: return "exp";
    case FnOp::Log: return "log";
    case FnOp::Sqrt: return "sqrt";
    case FnOp::NatOfFloor: return "nat-of-floor";
    case FnOp::Indicator: return "indicator";
    case FnOp::RestrictTo: return "restrict";
    case FnOp::IfSet: return "ifset";
    case FnOp::PdfNormal: return "pdf-normal";
    case FnOp::PdfBeta: return "pdf-beta";
    case FnOp::PmfPoisson: return "pmf-poisson";
    case FnOp::PmfBinomial: return "pmf-binomial";
    case FnOp::Table: return "table";
    case FnOp::Layer: return "layer";
    case FnOp::External: return "external";
  }
  return "?";
}

// ---------------------------------------------------------------- construction

FnExpr::FnExpr() : FnExpr(id()) {}

FnExpr::FnExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

namespace {

std::shared_ptr<FnExpr::Node> make(FnOp op) {
  auto n = std::make_shared<FnExpr::Node>();
  n->op = op;
  return n;
}

}  // namespace

FnExpr FnExpr::id() {
  static const std::shared_ptr<const Node> node = make(FnOp::Id);
  return FnExpr(node);
}

FnExpr FnExpr::constant(const Point& p, const SpaceExpr& space) {
  check_fits(p, space);
  auto n = make(FnOp::Const);
  n->point = p;
  n->space = space;
  return FnExpr(n);
}

FnExpr FnExpr::lit(const Rational& q) {
  auto n = make(FnOp::Lit);
  n->q = q;
  return FnExpr(n);
}

FnExpr FnExpr::lit(const ExtReal& w) {
  if (w.is_inf()) return lit_inf();
  return lit(w.to_rational());
}

FnExpr FnExpr::lit_inf() {
  auto n = make(FnOp::Lit);
  n->inf = true;
  return FnExpr(n);
}

FnExpr FnExpr::proj1() {
  static const std::shared_ptr<const Node> node = make(FnOp::Proj1);
  return FnExpr(node);
}

FnExpr FnExpr::proj2() {
  static const std::shared_ptr<const Node> node = make(FnOp::Proj2);
  return FnExpr(node);
}

FnExpr FnExpr::pair(const FnExpr& a, const FnExpr& b) {
  auto n = make(FnOp::Pair);
  n->args = {a, b};
  return FnExpr(n);
}

FnExpr FnExpr::inj_l(const SpaceExpr& right) {
  auto n = make(FnOp::InjL);
  n->space = right;
  return FnExpr(n);
}

FnExpr FnExpr::inj_r(const SpaceExpr& left) {
  auto n = make(FnOp::InjR);
  n->space = left;
  return FnExpr(n);
}

FnExpr FnExpr::case_of(const FnExpr& on_left, const FnExpr& on_right) {
  auto n = make(FnOp::Case);
  n->args = {on_left, on_right};
  return FnExpr(n);
}

FnExpr FnExpr::compose(const FnExpr& outer, const FnExpr& inner) {
  if (inner.is_id()) return outer;
  if (outer.is_id()) return inner;
  auto n = make(FnOp::Compose);
  n->args = {outer, inner};
  return FnExpr(n);
}

FnExpr FnExpr::binary(FnOp op, const FnExpr& a, const FnExpr& b) {
  if (!is_binary(op)) fail(Errc::TypeMismatch, std::string("not a binary operation: ") + fn_op_name(op));
  auto n = make(op);
  n->args = {a, b};
  return FnExpr(n);
}

FnExpr FnExpr::unary(FnOp op, const FnExpr& arg) {
  if (!is_unary(op)) fail(Errc::TypeMismatch, std::string("not a unary operation: ") + fn_op_name(op));
  auto n = make(op);
  n->args = {arg};
  return FnExpr(n);
}

FnExpr FnExpr::indicator(const SetExpr& s) {
  auto n = make(FnOp::Indicator);
  n->set = s;
  return FnExpr(n);
}

FnExpr FnExpr::restrict_to(const SetExpr& s) {
  auto n = make(FnOp::RestrictTo);
  n->set = s;
  return FnExpr(n);
}

FnExpr FnExpr::if_set(const SetExpr& s, const FnExpr& then_f, const FnExpr& else_f) {
  auto n = make(FnOp::IfSet);
  n->set = s;
  n->args = {then_f, else_f};
  return FnExpr(n);
}

FnExpr FnExpr::pdf_normal(const FnExpr& at, const FnExpr& mean, const FnExpr& sd) {
  auto n = make(FnOp::PdfNormal);
  n->args = {at, mean, sd};
  return FnExpr(n);
}

FnExpr FnExpr::pdf_beta(const FnExpr& at, const FnExpr& a, const FnExpr& b) {
  auto n = make(FnOp::PdfBeta);
  n->args = {at, a, b};
  return FnExpr(n);
}

FnExpr FnExpr::pmf_poisson(const FnExpr& at, const FnExpr& rate) {
  auto n = make(FnOp::PmfPoisson);
  n->args = {at, rate};
  return FnExpr(n);
}

FnExpr FnExpr::pmf_binomial(const FnExpr& at, const FnExpr& count, const FnExpr& p) {
  auto n = make(FnOp::PmfBinomial);
  n->args = {at, count, p};
  return FnExpr(n);
}

FnExpr FnExpr::table(std::vector<std::pair<Point, ExtReal>> entries, const ExtReal& dflt) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i - 1].first == entries[i].first)
      fail(Errc::TypeMismatch, "duplicate table entry " + entries[i].first.str());
  auto n = make(FnOp::Table);
  n->entries = std::move(entries);
  n->w = dflt;
  return FnExpr(n);
}

FnExpr FnExpr::layer(const ExtReal& k, const FnExpr& f) {
  if (k.is_inf()) fail(Errc::NumericDomain, "layer offset must be finite");
  auto n = make(FnOp::Layer);
  n->w = k;
  n->args = {f};
  return FnExpr(n);
}

FnExpr FnExpr::external(std::shared_ptr<const FnExternal> ext) {
  auto n = make(FnOp::External);
  n->ext = std::move(ext);
  return FnExpr(n);
}

FnOp FnExpr::op() const { return node_->op; }
const std::vector<FnExpr>& FnExpr::args() const { return node_->args; }

const SetExpr& FnExpr::set() const {
  if (!node_->set) fail(Errc::TypeMismatch, std::string(fn_op_name(op())) + " carries no set");
  return *node_->set;
}

const Point& FnExpr::point() const { return node_->point; }
const SpaceExpr& FnExpr::space() const { return node_->space; }
bool FnExpr::lit_is_inf() const { return node_->inf; }
const Rational& FnExpr::lit_value() const { return node_->q; }
const std::vector<std::pair<Point, ExtReal>>& FnExpr::table_entries() const { return node_->entries; }
const ExtReal& FnExpr::weight() const { return node_->w; }

const FnExternal& FnExpr::ext() const {
  if (!node_->ext) fail(Errc::TypeMismatch, "not an external function");
  return *node_->ext;
}

std::string FnExpr::str() const {
  std::call_once(node_->text_once, [this] {
    const Node& n = *node_;
    std::string s;
    auto args_str = [&n](std::string head) {
      for (const auto& a : n.args) head += " " + a.str();
      return head + ")";
    };
    switch (n.op) {
      case FnOp::Id:
      case FnOp::Proj1:
      case FnOp::Proj2: s = fn_op_name(n.op); break;
      case FnOp::Const: s = "(const " + n.point.str() + " " + n.space.str() + ")"; break;
      case FnOp::Lit: s = n.inf ? "inf" : rational_str(n.q); break;
      case FnOp::InjL:
      case FnOp::InjR: s = std::string("(") + fn_op_name(n.op) + " " + n.space.str() + ")"; break;
      case FnOp::Indicator:
      case FnOp::RestrictTo: s = std::string("(") + fn_op_name(n.op) + " " + n.set->str() + ")"; break;
      case FnOp::IfSet: s = args_str("(ifset " + n.set->str()); break;
      case FnOp::Table: {
        s = "(table " + n.w.str();
        for (const auto& [p, w] : n.entries) s += " (" + p.str() + " " + w.str() + ")";
        s += ")";
        break;
      }
      case FnOp::Layer: s = "(layer " + n.w.str() + " " + n.args[0].str() + ")"; break;
      case FnOp::External: s = n.ext->str(); break;
      default:
        if (is_unary(n.op) && n.args[0].is_id()) s = fn_op_name(n.op);
        else s = args_str(std::string("(") + fn_op_name(n.op));
    }
    n.text = std::move(s);
  });
  return node_->text;
}

// ---------------------------------------------------------------- evaluation

namespace {

struct Num {
  enum class K { Nat, Weight, Real } k = K::Real;
  std::uint64_t n = 0;
  ExtReal w;
  double r = 0.0;
};

Num to_num(const Point& p) {
  Num x;
  switch (p.kind()) {
    case Point::Kind::Nat:
      x.k = Num::K::Nat;
      x.n = p.nat();
      break;
    case Point::Kind::Weight:
      x.k = Num::K::Weight;
      x.w = p.weight();
      break;
    case Point::Kind::Real:
      x.k = Num::K::Real;
      x.r = p.real();
      break;
    default: fail(Errc::TypeMismatch, "not a number: " + p.str());
  }
  return x;
}

double num_d(const Num& x) {
  switch (x.k) {
    case Num::K::Nat: return static_cast<double>(x.n);
    case Num::K::Weight:
      if (x.w.is_inf()) fail(Errc::NumericDomain, "inf in real arithmetic");
      return x.w.to_double();
    case Num::K::Real: return x.r;
  }
  return 0.0;
}

ExtReal num_w(const Num& x) {
  if (x.k == Num::K::Nat) return ExtReal::exact(Rational(static_cast<unsigned long>(x.n)));
  return x.w;
}

Point real_point(double r) {
  if (!std::isfinite(r)) fail(Errc::NumericDomain, "non-finite real result");
  return Point::real(r);
}

std::optional<long> small_integer(const Rational& q) {
  if (q.get_den() != 1 || !q.get_num().fits_slong_p()) return std::nullopt;
  return q.get_num().get_si();
}

ExtReal weight_pow(const ExtReal& x, const ExtReal& y) {
  if (y.is_zero()) return ExtReal(1);
  if (x.is_zero()) return ExtReal(0);
  if (x.is_inf()) return ExtReal::inf();
  if (y.is_inf()) {
    if (x < ExtReal(1)) return ExtReal(0);
    if (x == ExtReal(1)) return ExtReal(1);
    return ExtReal::inf();
  }
  if (x.is_exact() && y.is_exact()) {
    if (auto e = small_integer(y.rational()); e && *e <= 4096) {
      mpz_class num, den;
      mpz_pow_ui(num.get_mpz_t(), x.rational().get_num().get_mpz_t(), static_cast<unsigned long>(*e));
      mpz_pow_ui(den.get_mpz_t(), x.rational().get_den().get_mpz_t(), static_cast<unsigned long>(*e));
      Rational q(num, den);
      q.canonicalize();
      return ExtReal::exact(q);
    }
  }
  double r = std::pow(x.to_double(), y.to_double());
  if (std::isinf(r)) return ExtReal::inf();
  return ExtReal::approx(r);
}

Point eval_binary(FnOp op, const Point& pa, const Point& pb) {
  Num a = to_num(pa), b = to_num(pb);
  if (a.k == Num::K::Nat && b.k == Num::K::Nat) {
    switch (op) {
      case FnOp::Add: return Point::nat(a.n + b.n);
      case FnOp::Mul: return Point::nat(a.n * b.n);
      case FnOp::Min: return Point::nat(std::min(a.n, b.n));
      case FnOp::Max: return Point::nat(std::max(a.n, b.n));
      case FnOp::Sub: return real_point(static_cast<double>(a.n) - static_cast<double>(b.n));
      default: break;
    }
  }
  if (a.k != Num::K::Real && b.k != Num::K::Real) {
    ExtReal x = num_w(a), y = num_w(b);
    switch (op) {
      case FnOp::Add: return Point::weight(x + y);
      case FnOp::Mul: return Point::weight(x * y);
      case FnOp::Div: return Point::weight(ext_div(x, y));
      case FnOp::Min: return Point::weight(ext_min(x, y));
      case FnOp::Max: return Point::weight(ext_max(x, y));
      case FnOp::Pow: return Point::weight(weight_pow(x, y));
      case FnOp::Sub:
        if (y <= x) return Point::weight(ext_sub(x, y));
        if (y.is_inf()) fail(Errc::NumericDomain, "finite minus inf");
        if (x.is_exact() && y.is_exact()) return real_point(Rational(x.rational() - y.rational()).get_d());
        return real_point(x.to_double() - y.to_double());
      default: break;
    }
  }
  double x = num_d(a), y = num_d(b);
  switch (op) {
    case FnOp::Add: return real_point(x + y);
    case FnOp::Sub: return real_point(x - y);
    case FnOp::Mul: return real_point(x * y);
    case FnOp::Div:
      if (y == 0.0) return Point::bottom();
      return real_point(x / y);
    case FnOp::Pow: {
      double r = std::pow(x, y);
      if (std::isnan(r)) fail(Errc::NumericDomain, "pow(" + double_str(x) + ", " + double_str(y) + ")");
      return real_point(r);
    }
    case FnOp::Min: return real_point(std::min(x, y));
    case FnOp::Max: return real_point(std::max(x, y));
    default: break;
  }
  fail(Errc::TypeMismatch, std::string("bad binary op ") + fn_op_name(op));
}

ExtReal exact_sqrt(const ExtReal& w) {
  if (w.is_inf()) return w;
  if (w.is_exact()) {
    const Rational& q = w.rational();
    if (mpz_perfect_square_p(q.get_num().get_mpz_t()) && mpz_perfect_square_p(q.get_den().get_mpz_t())) {
      mpz_class n, d;
      mpz_sqrt(n.get_mpz_t(), q.get_num().get_mpz_t());
      mpz_sqrt(d.get_mpz_t(), q.get_den().get_mpz_t());
      return ExtReal::exact(Rational(n, d));
    }
  }
  return ExtReal::approx(std::sqrt(w.to_double()));
}

Point eval_unary(FnOp op, const Point& v) {
  Num x = to_num(v);
  switch (op) {
    case FnOp::Neg: return real_point(-num_d(x));
    case FnOp::Abs:
      if (x.k == Num::K::Real) return real_point(std::fabs(x.r));
      return v;
    case FnOp::Floor:
      if (x.k == Num::K::Real) return real_point(std::floor(x.r));
      if (x.k == Num::K::Nat) return v;
      return Point::weight(ext_floor(x.w));
    case FnOp::Exp:
      if (x.k == Num::K::Real) return real_point(std::exp(x.r));
      if (x.k == Num::K::Weight && x.w.is_inf()) return v;
      {
        double r = std::exp(num_d(x));
        return Point::weight(std::isinf(r) ? ExtReal::inf() : ExtReal::approx(r));
      }
    case FnOp::Log: {
      double d = num_d(x);
      if (!(d > 0.0)) fail(Errc::NumericDomain, "log of " + double_str(d));
      return real_point(std::log(d));
    }
    case FnOp::Sqrt:
      if (x.k == Num::K::Real) {
        if (x.r < 0.0) fail(Errc::NumericDomain, "sqrt of " + double_str(x.r));
        return real_point(std::sqrt(x.r));
      }
      return Point::weight(exact_sqrt(num_w(x)));
    case FnOp::NatOfFloor:
      if (x.k == Num::K::Nat) return v;
      if (x.k == Num::K::Weight) {
        if (x.w.is_inf()) return Point::bottom();
        Rational f = ext_floor(x.w).to_rational();
        if (!f.get_num().fits_ulong_p()) fail(Errc::NumericDomain, "natural out of range");
        return Point::nat(f.get_num().get_ui());
      }
      if (x.r < 0.0) return Point::bottom();
      if (x.r >= 1.8e19) fail(Errc::NumericDomain, "natural out of range");
      return Point::nat(static_cast<std::uint64_t>(std::floor(x.r)));
    default: break;
  }
  fail(Errc::TypeMismatch, std::string("bad unary op ") + fn_op_name(op));
}

std::uint64_t as_count(const Point& p) {
  Num x = to_num(p);
  if (x.k == Num::K::Nat) return x.n;
  double d = num_d(x);
  if (d < 0.0 || d != std::floor(d) || d > 1e15) fail(Errc::NumericDomain, "not a count: " + p.str());
  return static_cast<std::uint64_t>(d);
}

ExtReal eval_density(FnOp op, const std::vector<Point>& v) {
  switch (op) {
    case FnOp::PdfNormal: {
      double x = num_d(to_num(v[0])), m = num_d(to_num(v[1])), s = num_d(to_num(v[2]));
      if (!(s > 0.0)) fail(Errc::NumericDomain, "normal scale must be positive");
      double z = (x - m) / s;
      return ExtReal::approx(std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi)));
    }
    case FnOp::PdfBeta: {
      double x = num_d(to_num(v[0])), a = num_d(to_num(v[1])), b = num_d(to_num(v[2]));
      if (!(a > 0.0) || !(b > 0.0)) fail(Errc::NumericDomain, "beta parameters must be positive");
      if (x < 0.0 || x > 1.0) return ExtReal(0);
      auto edge = [](double shape, double other) -> ExtReal {
        if (shape < 1.0) return ExtReal::inf();
        if (shape > 1.0) return ExtReal(0);
        return ExtReal::approx(other);  // density of Beta(1, other) at its edge
      };
      if (x == 0.0) return edge(a, b);
      if (x == 1.0) return edge(b, a);
      return ExtReal::approx(boost::math::ibeta_derivative(a, b, x));
    }
    case FnOp::PmfPoisson: {
      std::uint64_t k = as_count(v[0]);
      double rate = num_d(to_num(v[1]));
      if (rate < 0.0) fail(Errc::NumericDomain, "poisson rate must be nonnegative");
      if (rate == 0.0) return ExtReal(k == 0 ? 1 : 0);
      return ExtReal::approx(boost::math::pdf(boost::math::poisson_distribution<double>(rate), static_cast<double>(k)));
    }
    case FnOp::PmfBinomial: {
      std::uint64_t k = as_count(v[0]), n = as_count(v[1]);
      Num p = to_num(v[2]);
      if (k > n) return ExtReal(0);
      if (p.k == Num::K::Weight && p.w.is_exact() && p.w.is_finite()) {
        const Rational& q = p.w.rational();
        if (q > 1) fail(Errc::NumericDomain, "binomial probability above 1");
        mpz_class c;
        mpz_bin_uiui(c.get_mpz_t(), n, k);
        Rational r = Rational(c);
        for (std::uint64_t i = 0; i < k; ++i) r *= q;
        for (std::uint64_t i = k; i < n; ++i) r *= (1 - q);
        return ExtReal::exact(r);
      }
      double pr = num_d(p);
      if (pr < 0.0 || pr > 1.0) fail(Errc::NumericDomain, "binomial probability outside [0,1]");
      return ExtReal::approx(boost::math::pdf(
          boost::math::binomial_distribution<double>(static_cast<double>(n), pr), static_cast<double>(k)));
    }
    default: break;
  }
  fail(Errc::TypeMismatch, "not a density");
}

}  // namespace

Point eval_fn(const FnExpr& f, const Point& p) {
  const auto& a = f.args();
  switch (f.op()) {
    case FnOp::Id: return p;
    case FnOp::Const: return f.point();
    case FnOp::Lit:
      if (f.lit_is_inf()) return Point::weight(ExtReal::inf());
      if (sgn(f.lit_value()) >= 0) return Point::weight(ExtReal::exact(f.lit_value()));
      return Point::real(f.lit_value().get_d());
    case FnOp::Proj1: return p.first();
    case FnOp::Proj2: return p.second();
    case FnOp::Pair: {
      Point x = eval_fn(a[0], p);
      if (x.is_bottom()) return x;
      Point y = eval_fn(a[1], p);
      if (y.is_bottom()) return y;
      return Point::pair(std::move(x), std::move(y));
    }
    case FnOp::InjL: return Point::inl(p);
    case FnOp::InjR: return Point::inr(p);
    case FnOp::Case:
      if (p.kind() == Point::Kind::Inl) return eval_fn(a[0], p.inner());
      if (p.kind() == Point::Kind::Inr) return eval_fn(a[1], p.inner());
      fail(Errc::TypeMismatch, "case on non-injection " + p.str());
    case FnOp::Compose: {
      Point inner = eval_fn(a[1], p);
      if (inner.is_bottom()) return inner;
      return eval_fn(a[0], inner);
    }
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
    case FnOp::Div:
    case FnOp::Pow:
    case FnOp::Min:
    case FnOp::Max: {
      Point x = eval_fn(a[0], p);
      if (x.is_bottom()) return x;
      if (f.op() == FnOp::Mul && x.kind() == Point::Kind::Weight && x.weight().is_zero()) return x;
      Point y = eval_fn(a[1], p);
      if (y.is_bottom()) return y;
      return eval_binary(f.op(), x, y);
    }
    case FnOp::Neg:
    case FnOp::Abs:
    case FnOp::Floor:
    case FnOp::Exp:
    case FnOp::Log:
    case FnOp::Sqrt:
    case FnOp::NatOfFloor: {
      Point x = eval_fn(a[0], p);
      if (x.is_bottom()) return x;
      return eval_unary(f.op(), x);
    }
    case FnOp::Indicator: return Point::weight(ExtReal(f.set().member(p) ? 1 : 0));
    case FnOp::RestrictTo: return f.set().member(p) ? p : Point::bottom();
    case FnOp::IfSet: return eval_fn(f.set().member(p) ? a[0] : a[1], p);
    case FnOp::PdfNormal:
    case FnOp::PdfBeta:
    case FnOp::PmfPoisson:
    case FnOp::PmfBinomial: {
      std::vector<Point> v;
      for (const auto& g : a) {
        v.push_back(eval_fn(g, p));
        if (v.back().is_bottom()) return v.back();
      }
      return Point::weight(eval_density(f.op(), v));
    }
    case FnOp::Table: {
      const auto& e = f.table_entries();
      auto it = std::lower_bound(e.begin(), e.end(), p, [](const auto& entry, const Point& x) { return entry.first < x; });
      if (it != e.end() && it->first == p) return Point::weight(it->second);
      return Point::weight(f.weight());
    }
    case FnOp::Layer: {
      Point x = eval_fn(a[0], p);
      ExtReal v = as_weight(x);
      const ExtReal& k = f.weight();
      if (v <= k) return Point::weight(ExtReal(0));
      if (v.is_inf() || ext_add(k, ExtReal(1)) <= v) return Point::weight(ExtReal(1));
      return Point::weight(ext_sub(v, k));
    }
    case FnOp::External: return f.ext().apply(p);
  }
  fail(Errc::TypeMismatch, "unknown function op");
}

ExtReal as_weight(const Point& v) {
  switch (v.kind()) {
    case Point::Kind::Bottom: return ExtReal(0);
    case Point::Kind::Weight: return v.weight();
    case Point::Kind::Nat: return ExtReal::exact(Rational(static_cast<unsigned long>(v.nat())));
    case Point::Kind::Real:
      if (v.real() < 0.0) fail(Errc::NumericDomain, "negative weight " + v.str());
      return ExtReal::approx(v.real());
    default: fail(Errc::TypeMismatch, "not a weight: " + v.str());
  }
}

ExtReal eval_weight(const FnExpr& f, const Point& p) { return as_weight(eval_fn(f, p)); }

// ---------------------------------------------------------------- typing

namespace {

SpaceExpr numeric_join(FnOp op, const SpaceExpr& a, const SpaceExpr& b) {
  if (!a.is_numeric() || !b.is_numeric())
    fail(Errc::TypeMismatch, std::string(fn_op_name(op)) + " on " + a.str() + " and " + b.str());
  using K = SpaceExpr::Kind;
  if (a.kind() == K::Nat && b.kind() == K::Nat) {
    if (op == FnOp::Add || op == FnOp::Mul || op == FnOp::Min || op == FnOp::Max) return a;
    if (op == FnOp::Sub) return SpaceExpr::real();
    return SpaceExpr::ext();
  }
  if (a.kind() == K::Real || b.kind() == K::Real) return SpaceExpr::real();
  return SpaceExpr::ext();
}

}  // namespace

SpaceExpr codomain(const FnExpr& f, const SpaceExpr& domain) {
  using K = SpaceExpr::Kind;
  const auto& a = f.args();
  switch (f.op()) {
    case FnOp::Id: return domain;
    case FnOp::Const: return f.space();
    case FnOp::Lit: return (f.lit_is_inf() || sgn(f.lit_value()) >= 0) ? SpaceExpr::ext() : SpaceExpr::real();
    case FnOp::Proj1:
      if (domain.kind() != K::Prod) fail(Errc::TypeMismatch, "fst on " + domain.str());
      return domain.left();
    case FnOp::Proj2:
      if (domain.kind() != K::Prod) fail(Errc::TypeMismatch, "snd on " + domain.str());
      return domain.right();
    case FnOp::Pair: return SpaceExpr::prod(codomain(a[0], domain), codomain(a[1], domain));
    case FnOp::InjL: return SpaceExpr::sum(domain, f.space());
    case FnOp::InjR: return SpaceExpr::sum(f.space(), domain);
    case FnOp::Case: {
      if (domain.kind() != K::Sum) fail(Errc::TypeMismatch, "case on " + domain.str());
      SpaceExpr l = codomain(a[0], domain.left()), r = codomain(a[1], domain.right());
      if (l == r) return l;
      return numeric_join(FnOp::Add, l, r);
    }
    case FnOp::Compose: return codomain(a[0], codomain(a[1], domain));
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
    case FnOp::Div:
    case FnOp::Pow:
    case FnOp::Min:
    case FnOp::Max: return numeric_join(f.op(), codomain(a[0], domain), codomain(a[1], domain));
    case FnOp::Neg:
    case FnOp::Log: {
      SpaceExpr c = codomain(a[0], domain);
      if (!c.is_numeric()) fail(Errc::TypeMismatch, std::string(fn_op_name(f.op())) + " on " + c.str());
      return SpaceExpr::real();
    }
    case FnOp::Abs:
    case FnOp::Floor:
    case FnOp::Exp:
    case FnOp::Sqrt: {
      SpaceExpr c = codomain(a[0], domain);
      if (!c.is_numeric()) fail(Errc::TypeMismatch, std::string(fn_op_name(f.op())) + " on " + c.str());
      if (c.kind() == K::Nat && (f.op() == FnOp::Exp || f.op() == FnOp::Sqrt)) return SpaceExpr::ext();
      return c;
    }
    case FnOp::NatOfFloor: {
      SpaceExpr c = codomain(a[0], domain);
      if (!c.is_numeric()) fail(Errc::TypeMismatch, "nat-of-floor on " + c.str());
      return SpaceExpr::nat();
    }
    case FnOp::Indicator:
      if (!(f.set().space() == domain)) fail(Errc::TypeMismatch, "indicator set not on " + domain.str());
      return SpaceExpr::ext();
    case FnOp::RestrictTo:
      if (!(f.set().space() == domain)) fail(Errc::TypeMismatch, "restriction set not on " + domain.str());
      return domain;
    case FnOp::IfSet: {
      if (!(f.set().space() == domain)) fail(Errc::TypeMismatch, "ifset set not on " + domain.str());
      SpaceExpr l = codomain(a[0], domain), r = codomain(a[1], domain);
      if (l == r) return l;
      return numeric_join(FnOp::Add, l, r);
    }
    case FnOp::PdfNormal:
    case FnOp::PdfBeta:
    case FnOp::PmfPoisson:
    case FnOp::PmfBinomial:
      for (const auto& g : a)
        if (!codomain(g, domain).is_numeric()) fail(Errc::TypeMismatch, "density argument is not numeric");
      return SpaceExpr::ext();
    case FnOp::Table:
      for (const auto& [p, w] : f.table_entries()) check_fits(p, domain);
      return SpaceExpr::ext();
    case FnOp::Layer: codomain(a[0], domain); return SpaceExpr::ext();
    case FnOp::External: return f.ext().codomain(domain);
  }
  fail(Errc::TypeMismatch, "unknown function op");
}

bool is_total(const FnExpr& f) {
  const auto& a = f.args();
  switch (f.op()) {
    case FnOp::Div:
    case FnOp::NatOfFloor:
    case FnOp::RestrictTo: return false;
    case FnOp::External: return f.ext().total();
    default:
      return std::all_of(a.begin(), a.end(), [](const FnExpr& g) { return is_total(g); });
  }
}

// ---------------------------------------------------------------- preimage

namespace {

struct PreimageUnsupported {};

[[noreturn]] void unsupported() { throw PreimageUnsupported{}; }

std::optional<Rational> const_value(const FnExpr& g) {
  if (g.op() == FnOp::Lit) {
    if (g.lit_is_inf()) return std::nullopt;
    return g.lit_value();
  }
  if (g.op() == FnOp::Const) {
    const Point& p = g.point();
    switch (p.kind()) {
      case Point::Kind::Nat: return Rational(static_cast<unsigned long>(p.nat()));
      case Point::Kind::Real: return Rational(p.real());
      case Point::Kind::Weight:
        if (p.weight().is_inf()) return std::nullopt;
        return p.weight().to_rational();
      default: return std::nullopt;
    }
  }
  return std::nullopt;
}

bool const_is_inf(const FnExpr& g) {
  if (g.op() == FnOp::Lit) return g.lit_is_inf();
  if (g.op() == FnOp::Const) return g.point().kind() == Point::Kind::Weight && g.point().weight().is_inf();
  return false;
}

RealSet nonneg() { return RealSet::interval(Rational(0), std::nullopt, true, false); }

// Union of [n, n+1) over the integers n in s.
RealSet integer_cells(const RealSet& s) {
  const auto& b = s.breaks();
  RealSet out;
  auto add_range = [&out](std::optional<mpz_class> lo, std::optional<mpz_class> hi) {
    if (lo && hi && *lo > *hi) return;
    RealSet::Bound l = lo ? RealSet::Bound(Rational(*lo)) : std::nullopt;
    RealSet::Bound h = hi ? RealSet::Bound(Rational(*hi + 1)) : std::nullopt;
    out = out.unite(RealSet::interval(l, h, true, false));
  };
  auto floor_q = [](const Rational& q) {
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
  };
  auto ceil_q = [](const Rational& q) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
  };
  for (std::size_t k = 0; k <= b.size(); ++k) {
    if (!s.segment_in(k)) continue;
    std::optional<mpz_class> lo, hi;
    if (k > 0) lo = floor_q(b[k - 1]) + 1;
    if (k < b.size()) hi = ceil_q(b[k]) - 1;
    add_range(lo, hi);
  }
  for (std::size_t k = 0; k < b.size(); ++k)
    if (s.point_in(k) && b[k].get_den() == 1) add_range(b[k].get_num(), b[k].get_num());
  return out;
}

RealSet nat_cells(const SetExpr& s) {
  RealSet cells;
  for (auto n : s.nat_elems()) {
    Rational q(static_cast<unsigned long>(n));
    cells = cells.unite(RealSet::interval(q, Rational(q + 1), true, false));
  }
  if (s.nat_is_cofinite()) return nonneg().minus(cells);
  return cells;
}

// Image of t under an increasing map g; breakpoints at or below drop_upto are discarded
// (t must not meet (-inf, drop_upto]).
RealSet push_increasing(const RealSet& t, const std::function<Rational(const Rational&)>& g,
                        const std::optional<Rational>& drop_upto) {
  const auto& b = t.breaks();
  std::size_t start = 0;
  if (drop_upto)
    while (start < b.size() && b[start] <= *drop_upto) ++start;
  std::vector<Rational> nb;
  std::vector<bool> seg{t.segment_in(start)}, pts;
  for (std::size_t i = start; i < b.size(); ++i) {
    Rational v = g(b[i]);
    if (!nb.empty() && !(nb.back() < v)) {
      // Rounded images collided; keep the wider membership.
      pts.back() = pts.back() || t.point_in(i) || seg.back();
      seg.back() = t.segment_in(i + 1);
      continue;
    }
    nb.push_back(v);
    pts.push_back(t.point_in(i));
    seg.push_back(t.segment_in(i + 1));
  }
  return RealSet::from_raw(std::move(nb), std::move(seg), std::move(pts));
}

Rational approx_rational(double d) {
  if (!std::isfinite(d)) fail(Errc::NumericDomain, "non-finite breakpoint");
  return Rational(d);
}

// Bring a target set onto the codomain space where the numeric readings agree.
SetExpr coerce_target(const SetExpr& s, const SpaceExpr& cod) {
  if (s.space() == cod) return s;
  using K = SpaceExpr::Kind;
  if (cod.kind() == K::Real && s.space().kind() == K::Ext) return SetExpr::real(s.real_set());
  if (cod.kind() == K::Ext && s.space().kind() == K::Real) return SetExpr::ext(s.real_set(), false);
  if (cod.kind() == K::Real && s.space().kind() == K::Nat) {
    // Naturals as reals: finite sets become atoms; cofinite sets are not representable.
    if (s.nat_is_cofinite()) unsupported();
    std::vector<Rational> qs;
    for (auto n : s.nat_elems()) qs.push_back(Rational(static_cast<unsigned long>(n)));
    return SetExpr::real(RealSet::points(qs));
  }
  fail(Errc::TypeMismatch, "target set on " + s.space().str() + " but codomain is " + cod.str());
}

SetExpr pre(const FnExpr& f, const SpaceExpr& dom, const SetExpr& target);

SetExpr pre_value(const Point& v, const SpaceExpr& dom, const SetExpr& target) {
  bool in = target.member(v);
  return in ? SetExpr::full(dom) : SetExpr::empty(dom);
}

SetExpr pre_affine(const FnExpr& f, const SpaceExpr& dom, const SetExpr& target) {
  const FnExpr& a = f.arg(0);
  const FnExpr& b = f.arg(1);
  auto ca = const_value(a), cb = const_value(b);
  bool const_left = ca.has_value() || const_is_inf(a);
  const FnExpr& h = const_left ? b : a;
  if (!const_left && !cb && !const_is_inf(b)) unsupported();
  SpaceExpr hc = codomain(h, dom);
  SpaceExpr fc = codomain(f, dom);
  using K = SpaceExpr::Kind;
  FnOp op = f.op();

  if (fc.kind() == K::Real && hc.kind() == K::Real) {
    std::optional<Rational> c = const_left ? ca : cb;
    if (!c) unsupported();
    const RealSet& s = target.real_set();
    RealSet r;
    switch (op) {
      case FnOp::Add: r = s.affine_image(1, -*c); break;
      case FnOp::Sub: r = const_left ? s.affine_image(-1, *c) : s.affine_image(1, *c); break;
      case FnOp::Mul:
        if (sgn(*c) == 0) return pre(h, dom, SetExpr::full(hc)).intersect(s.contains(Rational(0)) ? SetExpr::full(dom) : SetExpr::empty(dom));
        r = s.affine_image(1 / *c, 0);
        break;
      case FnOp::Div:
        if (const_left || sgn(*c) == 0) unsupported();
        r = s.affine_image(*c, 0);
        break;
      default: unsupported();
    }
    return pre(h, dom, SetExpr::real(r));
  }
  if (fc.kind() == K::Ext && hc.kind() == K::Ext) {
    if (op != FnOp::Add && op != FnOp::Mul) unsupported();
    const RealSet& s = target.real_set();
    bool has_inf = target.ext_has_inf();
    if (const_left ? const_is_inf(a) : const_is_inf(b)) {
      if (op == FnOp::Add) return has_inf ? pre(h, dom, SetExpr::full(hc)) : SetExpr::empty(dom);
      RealSet fin = s.contains(Rational(0)) ? RealSet::point(0) : RealSet::empty();
      RealSet pos = has_inf ? RealSet::interval(Rational(0), std::nullopt, false, false) : RealSet::empty();
      return pre(h, dom, SetExpr::ext(fin.unite(pos), has_inf));
    }
    Rational c = const_left ? *ca : *cb;
    if (op == FnOp::Add) return pre(h, dom, SetExpr::ext(s.affine_image(1, -c), has_inf));
    if (sgn(c) == 0) return pre(h, dom, SetExpr::full(hc)).intersect(s.contains(Rational(0)) ? SetExpr::full(dom) : SetExpr::empty(dom));
    return pre(h, dom, SetExpr::ext(s.affine_image(1 / c, 0), has_inf));
  }
  unsupported();
}

SetExpr pre(const FnExpr& f, const SpaceExpr& dom, const SetExpr& target_in) {
  using K = SpaceExpr::Kind;
  const auto& a = f.args();
  SpaceExpr cod = codomain(f, dom);
  // Floor-type maps accept natural-number targets directly.
  bool nat_target_ok = (f.op() == FnOp::Floor || f.op() == FnOp::NatOfFloor) && target_in.space().kind() == K::Nat;
  SetExpr target = nat_target_ok ? target_in : coerce_target(target_in, cod);
  switch (f.op()) {
    case FnOp::Id: return target;
    case FnOp::Const: return pre_value(f.point(), dom, target);
    case FnOp::Lit: return pre_value(eval_fn(f, Point::unit()), dom, target);
    case FnOp::Proj1: return SetExpr::rect(target, SetExpr::full(dom.right()));
    case FnOp::Proj2: return SetExpr::rect(SetExpr::full(dom.left()), target);
    case FnOp::Pair: {
      SetExpr acc = SetExpr::empty(dom);
      for (const auto& c : target.cells())
        acc = acc.unite(pre(a[0], dom, *c.first).intersect(pre(a[1], dom, *c.second)));
      return acc;
    }
    case FnOp::InjL: return target.sum_left();
    case FnOp::InjR: return target.sum_right();
    case FnOp::Case: return SetExpr::sum(pre(a[0], dom.left(), target), pre(a[1], dom.right(), target));
    case FnOp::Compose: {
      SpaceExpr mid = codomain(a[1], dom);
      return pre(a[1], dom, pre(a[0], mid, target));
    }
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
    case FnOp::Div: return pre_affine(f, dom, target);
    case FnOp::Neg: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() != K::Real) unsupported();
      return pre(a[0], dom, SetExpr::real(target.real_set().affine_image(-1, 0)));
    }
    case FnOp::Abs: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() != K::Real) return pre(a[0], dom, target);
      RealSet t = target.real_set().intersect(nonneg());
      return pre(a[0], dom, SetExpr::real(t.unite(t.affine_image(-1, 0))));
    }
    case FnOp::Floor: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() == K::Nat) return pre(a[0], dom, coerce_target(target, c));
      if (c.kind() != K::Real) unsupported();
      RealSet cells = target.space().kind() == K::Nat ? nat_cells(target) : integer_cells(target.real_set());
      return pre(a[0], dom, SetExpr::real(cells));
    }
    case FnOp::NatOfFloor: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() == K::Nat) return pre(a[0], dom, target);
      if (c.kind() != K::Real) unsupported();
      return pre(a[0], dom, SetExpr::real(nat_cells(target)));
    }
    case FnOp::Sqrt: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() != K::Real) unsupported();
      RealSet t = target.real_set().intersect(nonneg());
      return pre(a[0], dom, SetExpr::real(push_increasing(t, [](const Rational& q) { return Rational(q * q); }, std::nullopt)));
    }
    case FnOp::Exp: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() != K::Real) unsupported();
      RealSet pos = RealSet::interval(Rational(0), std::nullopt, false, false);
      RealSet t = target.real_set().intersect(pos);
      RealSet r = push_increasing(t, [](const Rational& q) { return approx_rational(std::log(q.get_d())); }, Rational(0));
      return pre(a[0], dom, SetExpr::real(r));
    }
    case FnOp::Log: {
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() != K::Real) unsupported();
      RealSet r = push_increasing(target.real_set(), [](const Rational& q) { return approx_rational(std::exp(q.get_d())); }, std::nullopt);
      RealSet pos = RealSet::interval(Rational(0), std::nullopt, false, false);
      return pre(a[0], dom, SetExpr::real(r.intersect(pos)));
    }
    case FnOp::Indicator: {
      bool has0 = target.member(Point::weight(ExtReal(0)));
      bool has1 = target.member(Point::weight(ExtReal(1)));
      if (has0 && has1) return SetExpr::full(dom);
      if (has1) return f.set();
      if (has0) return f.set().complement();
      return SetExpr::empty(dom);
    }
    case FnOp::RestrictTo: return target.intersect(f.set());
    case FnOp::IfSet:
      return f.set().intersect(pre(a[0], dom, target)).unite(f.set().complement().intersect(pre(a[1], dom, target)));
    case FnOp::Table: {
      std::vector<Point> in;
      std::vector<Point> listed;
      for (const auto& [p, w] : f.table_entries()) {
        listed.push_back(p);
        if (target.member(Point::weight(w))) in.push_back(p);
      }
      SetExpr r = SetExpr::points(dom, in);
      if (target.member(Point::weight(f.weight()))) r = r.unite(SetExpr::points(dom, listed).complement());
      return r;
    }
    case FnOp::External: {
      auto r = f.ext().preimage(dom, target);
      if (!r) unsupported();
      return *r;
    }
    default: unsupported();
  }
}

}  // namespace

SetExpr preimage(const FnExpr& f, const SpaceExpr& domain, const SetExpr& target) {
  try {
    return pre(f, domain, target);
  } catch (const PreimageUnsupported&) {
    fail(Errc::Unsupported, "preimage not computable for " + f.str());
  }
}

std::optional<SetExpr> try_preimage(const FnExpr& f, const SpaceExpr& domain, const SetExpr& target) {
  try {
    return pre(f, domain, target);
  } catch (const PreimageUnsupported&) {
    return std::nullopt;
  } catch (const Error& e) {
    if (e.code() == Errc::Unsupported) return std::nullopt;
    throw;
  }
}

// ---------------------------------------------------------------- simplification

namespace {

std::optional<FnExpr> fold_lits(FnOp op, const FnExpr& a, const FnExpr& b) {
  if (a.op() != FnOp::Lit || b.op() != FnOp::Lit) return std::nullopt;
  if ((!a.lit_is_inf() && sgn(a.lit_value()) < 0) || (!b.lit_is_inf() && sgn(b.lit_value()) < 0))
    return std::nullopt;
  if (op == FnOp::Sub || op == FnOp::Pow) return std::nullopt;
  try {
    Point v = eval_binary(op, eval_fn(a, Point()), eval_fn(b, Point()));
    if (v.kind() == Point::Kind::Weight && v.weight().is_exact()) return FnExpr::lit(v.weight());
  } catch (const Error&) {
  }
  return std::nullopt;
}

FnExpr make_binary(FnOp op, const FnExpr& a, const FnExpr& b) {
  if (auto r = fold_lits(op, a, b)) return *r;
  return FnExpr::binary(op, a, b);
}

FnExpr rebuild(const FnExpr& f, std::vector<FnExpr> args) {
  switch (f.op()) {
    case FnOp::Pair: return FnExpr::pair(args[0], args[1]);
    case FnOp::Case: return FnExpr::case_of(args[0], args[1]);
    case FnOp::IfSet: return FnExpr::if_set(f.set(), args[0], args[1]);
    case FnOp::PdfNormal: return FnExpr::pdf_normal(args[0], args[1], args[2]);
    case FnOp::PdfBeta: return FnExpr::pdf_beta(args[0], args[1], args[2]);
    case FnOp::PmfPoisson: return FnExpr::pmf_poisson(args[0], args[1]);
    case FnOp::PmfBinomial: return FnExpr::pmf_binomial(args[0], args[1], args[2]);
    case FnOp::Layer: return FnExpr::layer(f.weight(), args[0]);
    default:
      if (is_binary(f.op())) return make_binary(f.op(), args[0], args[1]);
      if (is_unary(f.op())) return FnExpr::unary(f.op(), args[0]);
      return f;
  }
}

FnExpr push_compose(const FnExpr& o, const FnExpr& i, const SpaceExpr& dom);

FnExpr simp(const FnExpr& f, const SpaceExpr& dom) {
  const auto& a = f.args();
  switch (f.op()) {
    case FnOp::Compose: {
      FnExpr inner = simp(a[1], dom);
      SpaceExpr mid = codomain(inner, dom);
      FnExpr outer = simp(a[0], mid);
      return push_compose(outer, inner, dom);
    }
    case FnOp::Pair: {
      FnExpr x = simp(a[0], dom), y = simp(a[1], dom);
      if (x.op() == FnOp::Const && y.op() == FnOp::Const)
        return FnExpr::constant(Point::pair(x.point(), y.point()), SpaceExpr::prod(x.space(), y.space()));
      return FnExpr::pair(x, y);
    }
    case FnOp::Case:
      return FnExpr::case_of(simp(a[0], dom.left()), simp(a[1], dom.right()));
    case FnOp::IfSet: {
      if (f.set().is_full()) return simp(a[0], dom);
      if (f.set().is_empty()) return simp(a[1], dom);
      FnExpr x = simp(a[0], dom), y = simp(a[1], dom);
      if (x == y) return x;
      return FnExpr::if_set(f.set(), x, y);
    }
    case FnOp::Mul: {
      FnExpr x = simp(a[0], dom), y = simp(a[1], dom);
      auto is_one = [](const FnExpr& g) { return g.op() == FnOp::Lit && !g.lit_is_inf() && g.lit_value() == 1; };
      if (is_one(x) && codomain(y, dom).kind() == SpaceExpr::Kind::Ext) return y;
      if (is_one(y) && codomain(x, dom).kind() == SpaceExpr::Kind::Ext) return x;
      return FnExpr::mul(x, y);
    }
    default: {
      if (a.empty()) return f;
      std::vector<FnExpr> args;
      for (const auto& g : a) args.push_back(simp(g, dom));
      return rebuild(f, std::move(args));
    }
  }
}

FnExpr push_compose(const FnExpr& o, const FnExpr& i, const SpaceExpr& dom) {
  if (i.is_id()) return o;
  if (o.is_id()) return i;
  const auto& a = o.args();
  switch (o.op()) {
    case FnOp::Const:
    case FnOp::Lit:
      if (is_total(i)) return o;
      break;
    case FnOp::Proj1:
    case FnOp::Proj2: {
      bool first = o.op() == FnOp::Proj1;
      if (i.op() == FnOp::Pair && is_total(i.arg(first ? 1 : 0))) return i.arg(first ? 0 : 1);
      if (i.op() == FnOp::Const) {
        const Point& p = i.point();
        return FnExpr::constant(first ? p.first() : p.second(), first ? i.space().left() : i.space().right());
      }
      break;
    }
    case FnOp::Pair: {
      FnExpr x = push_compose(a[0], i, dom), y = push_compose(a[1], i, dom);
      if (x.op() == FnOp::Const && y.op() == FnOp::Const)
        return FnExpr::constant(Point::pair(x.point(), y.point()), SpaceExpr::prod(x.space(), y.space()));
      return FnExpr::pair(x, y);
    }
    case FnOp::Compose: return push_compose(a[0], push_compose(a[1], i, dom), dom);
    case FnOp::Case:
      if (i.op() == FnOp::InjL) return a[0];
      if (i.op() == FnOp::InjR) return a[1];
      break;
    case FnOp::Indicator:
      if (is_total(i))
        if (auto s = try_preimage(i, dom, o.set())) return FnExpr::indicator(*s);
      break;
    case FnOp::IfSet:
      if (is_total(i))
        if (auto s = try_preimage(i, dom, o.set()))
          return FnExpr::if_set(*s, push_compose(a[0], i, dom), push_compose(a[1], i, dom));
      break;
    case FnOp::Table:
    case FnOp::RestrictTo:
    case FnOp::External:
    case FnOp::InjL:
    case FnOp::InjR:
    case FnOp::Id: break;
    default: {
      if (is_binary(o.op()) || is_unary(o.op()) || is_density(o.op()) || o.op() == FnOp::Layer) {
        std::vector<FnExpr> args;
        for (const auto& g : a) args.push_back(push_compose(g, i, dom));
        return rebuild(o, std::move(args));
      }
    }
  }
  // Evaluate fully constant compositions.
  if (i.op() == FnOp::Const) {
    Point v = eval_fn(o, i.point());
    if (!v.is_bottom()) return FnExpr::constant(v, codomain(o, i.space()));
  }
  return FnExpr::compose(o, i);
}

}  // namespace

FnExpr simplify(const FnExpr& f, const SpaceExpr& domain) { return simp(f, domain); }

FnExpr section(const FnExpr& f, const SpaceExpr& domain, const Point& x) {
  if (domain.kind() != SpaceExpr::Kind::Prod) fail(Errc::TypeMismatch, "section of a function on " + domain.str());
  FnExpr at = FnExpr::pair(FnExpr::constant(x, domain.left()), FnExpr::id());
  return simplify(FnExpr::compose(f, at), domain.right());
}

// ---------------------------------------------------------------- value classes

namespace {

SetExpr bottom_region(const FnExpr& f, const SpaceExpr& dom, bool& ae) {
  if (is_total(f)) return SetExpr::empty(dom);
  if (auto s = try_preimage(f, dom, SetExpr::full(codomain(f, dom)))) return s->complement();
  ae = true;
  return SetExpr::empty(dom);
}

ValueClasses generic_classes(const FnExpr& f, const SpaceExpr& dom) {
  ValueClasses vc{SetExpr::empty(dom), SetExpr::empty(dom), false};
  SpaceExpr cod = codomain(f, dom);
  SetExpr bot = bottom_region(f, dom, vc.ae);
  if (!cod.is_numeric()) fail(Errc::TypeMismatch, "not a weight function: " + f.str());
  SetExpr zero_target = SetExpr::singleton(cod, cod.kind() == SpaceExpr::Kind::Nat ? Point::nat(0)
                                                    : cod.kind() == SpaceExpr::Kind::Real ? Point::real(0.0)
                                                                                          : Point::weight(ExtReal(0)));
  if (auto z = try_preimage(f, dom, zero_target)) {
    vc.zero = z->unite(bot);
  } else {
    vc.zero = bot;
    vc.ae = true;
  }
  if (cod.kind() == SpaceExpr::Kind::Ext) {
    if (auto i = try_preimage(f, dom, SetExpr::ext(RealSet::empty(), true))) vc.inf = *i;
    else vc.ae = true;
  }
  return vc;
}

ValueClasses classes(const FnExpr& f, const SpaceExpr& dom) {
  const auto& a = f.args();
  auto full = SetExpr::full(dom);
  auto empty = SetExpr::empty(dom);
  switch (f.op()) {
    case FnOp::Lit:
    case FnOp::Const: {
      ExtReal w = as_weight(eval_fn(f, Point()));
      return {w.is_zero() ? full : empty, w.is_inf() ? full : empty, false};
    }
    case FnOp::Indicator: return {f.set().complement(), empty, false};
    case FnOp::IfSet: {
      ValueClasses x = classes(a[0], dom), y = classes(a[1], dom);
      SetExpr s = f.set(), c = f.set().complement();
      return {s.intersect(x.zero).unite(c.intersect(y.zero)), s.intersect(x.inf).unite(c.intersect(y.inf)),
              x.ae || y.ae};
    }
    case FnOp::Add:
    case FnOp::Mul:
    case FnOp::Div:
    case FnOp::Min:
    case FnOp::Max: {
      if (codomain(f, dom).kind() != SpaceExpr::Kind::Ext) return generic_classes(f, dom);
      ValueClasses x = classes(a[0], dom), y = classes(a[1], dom);
      ValueClasses r{empty, empty, x.ae || y.ae};
      switch (f.op()) {
        case FnOp::Add:
          r.zero = x.zero.intersect(y.zero);
          r.inf = x.inf.unite(y.inf);
          break;
        case FnOp::Mul:
          r.zero = x.zero.unite(y.zero);
          r.inf = x.inf.unite(y.inf).minus(r.zero);
          break;
        case FnOp::Div:
          r.zero = x.zero.unite(y.inf.minus(x.inf));
          r.inf = x.inf.minus(y.inf).unite(y.zero.minus(x.zero));
          break;
        case FnOp::Min:
          r.zero = x.zero.unite(y.zero);
          r.inf = x.inf.intersect(y.inf);
          break;
        default:
          r.zero = x.zero.intersect(y.zero);
          r.inf = x.inf.unite(y.inf);
      }
      if (!is_total(a[0]) || !is_total(a[1])) {
        r.zero = r.zero.unite(bottom_region(a[0], dom, r.ae)).unite(bottom_region(a[1], dom, r.ae));
        r.inf = r.inf.minus(r.zero);
      }
      return r;
    }
    case FnOp::Compose: {
      SpaceExpr mid = codomain(a[1], dom);
      ValueClasses o = classes(a[0], mid);
      auto z = try_preimage(a[1], dom, o.zero);
      auto i = try_preimage(a[1], dom, o.inf);
      if (!z || !i) return generic_classes(f, dom);
      bool ae = o.ae;
      return {z->unite(bottom_region(a[1], dom, ae)), *i, ae};
    }
    case FnOp::PdfNormal: {
      bool ae = false;
      SetExpr bot = empty;
      for (const auto& g : a) bot = bot.unite(bottom_region(g, dom, ae));
      return {bot, empty, ae};
    }
    case FnOp::PdfBeta: {
      RealSet open01 = RealSet::interval(Rational(0), Rational(1), false, false);
      auto z = try_preimage(a[0], dom, SetExpr::real(open01.complement()));
      if (!z) return {empty, empty, true};
      return {*z, empty, true};
    }
    case FnOp::PmfPoisson: {
      bool ae = false;
      return {bottom_region(a[0], dom, ae), empty, ae};
    }
    case FnOp::PmfBinomial: {
      auto n = const_value(a[1]);
      if (!n || n->get_den() != 1 || !n->get_num().fits_ulong_p()) return {empty, empty, true};
      std::vector<std::uint64_t> upto;
      for (unsigned long k = 0; k <= n->get_num().get_ui(); ++k) upto.push_back(k);
      SpaceExpr c = codomain(a[0], dom);
      if (c.kind() != SpaceExpr::Kind::Nat) return {empty, empty, true};
      auto z = try_preimage(a[0], dom, SetExpr::nat_cofinite(upto));
      if (!z) return {empty, empty, true};
      return {*z, empty, true};
    }
    case FnOp::Layer: {
      SpaceExpr c = codomain(a[0], dom);
      SetExpr low = SetExpr::ext(RealSet::interval(std::nullopt, f.weight().to_rational(), false, true), false);
      if (c.kind() == SpaceExpr::Kind::Ext)
        if (auto z = try_preimage(a[0], dom, low)) return {*z, empty, false};
      return {empty, empty, true};
    }
    default: return generic_classes(f, dom);
  }
}

}  // namespace

ValueClasses value_classes(const FnExpr& f, const SpaceExpr& domain) { return classes(f, domain); }

// ---------------------------------------------------------------- constant pieces

namespace {

constexpr std::size_t kMaxPieces = 512;

ConstantPieces merge_pieces(ConstantPieces in) {
  ConstantPieces out;
  for (auto& [s, v] : in) {
    if (s.is_empty()) continue;
    bool merged = false;
    for (auto& [t, w] : out)
      if (w.identical(v)) {
        t = t.unite(s);
        merged = true;
        break;
      }
    if (!merged) out.emplace_back(std::move(s), v);
  }
  return out;
}

std::optional<ConstantPieces> pieces(const FnExpr& f, const SpaceExpr& dom) {
  const auto& a = f.args();
  switch (f.op()) {
    case FnOp::Lit:
    case FnOp::Const: {
      Point v = eval_fn(f, Point());
      if (v.kind() == Point::Kind::Real && v.real() < 0.0) return std::nullopt;
      if (!v.is_bottom() && !(v.kind() == Point::Kind::Weight || v.kind() == Point::Kind::Nat || v.kind() == Point::Kind::Real))
        return std::nullopt;
      return ConstantPieces{{SetExpr::full(dom), as_weight(v)}};
    }
    case FnOp::Indicator:
      return merge_pieces({{f.set(), ExtReal(1)}, {f.set().complement(), ExtReal(0)}});
    case FnOp::IfSet: {
      auto x = pieces(a[0], dom);
      if (!x) return std::nullopt;
      auto y = pieces(a[1], dom);
      if (!y) return std::nullopt;
      ConstantPieces out;
      for (const auto& [s, v] : *x) out.emplace_back(s.intersect(f.set()), v);
      SetExpr c = f.set().complement();
      for (const auto& [s, v] : *y) out.emplace_back(s.intersect(c), v);
      return merge_pieces(std::move(out));
    }
    case FnOp::Table: {
      ConstantPieces out;
      std::vector<Point> listed;
      for (const auto& [p, w] : f.table_entries()) {
        listed.push_back(p);
        out.emplace_back(SetExpr::singleton(dom, p), w);
      }
      out.emplace_back(SetExpr::points(dom, listed).complement(), f.weight());
      return merge_pieces(std::move(out));
    }
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
    case FnOp::Div:
    case FnOp::Min:
    case FnOp::Max: {
      auto x = pieces(a[0], dom);
      if (!x) return std::nullopt;
      auto y = pieces(a[1], dom);
      if (!y) return std::nullopt;
      ConstantPieces out;
      try {
        for (const auto& [s, v] : *x)
          for (const auto& [t, w] : *y) {
            SetExpr st = s.intersect(t);
            if (st.is_empty()) continue;
            Point r = eval_binary(f.op(), Point::weight(v), Point::weight(w));
            if (r.is_bottom() || r.kind() != Point::Kind::Weight) return std::nullopt;
            out.emplace_back(std::move(st), r.weight());
            if (out.size() > kMaxPieces) return std::nullopt;
          }
      } catch (const Error&) {
        return std::nullopt;
      }
      return merge_pieces(std::move(out));
    }
    case FnOp::Layer: {
      auto x = pieces(a[0], dom);
      if (!x) return std::nullopt;
      ConstantPieces out;
      FnExpr probe = FnExpr::layer(f.weight(), FnExpr::id());
      for (const auto& [s, v] : *x) out.emplace_back(s, eval_weight(probe, Point::weight(v)));
      return merge_pieces(std::move(out));
    }
    case FnOp::Compose: {
      SpaceExpr mid;
      try {
        mid = codomain(a[1], dom);
      } catch (const Error&) {
        return std::nullopt;
      }
      auto o = pieces(a[0], mid);
      if (!o) return std::nullopt;
      ConstantPieces out;
      SetExpr covered = SetExpr::empty(dom);
      for (const auto& [s, v] : *o) {
        auto p = try_preimage(a[1], dom, s);
        if (!p) return std::nullopt;
        covered = covered.unite(*p);
        out.emplace_back(*p, v);
      }
      out.emplace_back(covered.complement(), ExtReal(0));
      return merge_pieces(std::move(out));
    }
    default: return std::nullopt;
  }
}

}  // namespace

std::optional<ConstantPieces> constant_pieces(const FnExpr& f, const SpaceExpr& domain) {
  try {
    return pieces(f, domain);
  } catch (const Error& e) {
    if (e.code() == Errc::Unsupported) return std::nullopt;
    throw;
  }
}

std::vector<double> real_breakpoints(const FnExpr& f) {
  std::vector<double> out;
  std::function<void(const FnExpr&)> walk = [&](const FnExpr& g) {
    switch (g.op()) {
      case FnOp::Indicator:
      case FnOp::RestrictTo:
      case FnOp::IfSet:
        if (g.set().space().kind() == SpaceExpr::Kind::Real)
          for (const auto& q : g.set().real_set().breaks()) out.push_back(q.get_d());
        break;
      case FnOp::Table:
        for (const auto& [p, w] : g.table_entries())
          if (p.kind() == Point::Kind::Real) out.push_back(p.real());
        break;
      case FnOp::PdfBeta:
        out.push_back(0.0);
        out.push_back(1.0);
        break;
      case FnOp::PdfNormal:
        if (g.arg(0).is_id() && g.arg(1).op() == FnOp::Lit && g.arg(2).op() == FnOp::Lit && !g.arg(1).lit_is_inf() &&
            !g.arg(2).lit_is_inf()) {
          double m = g.arg(1).lit_value().get_d(), s = g.arg(2).lit_value().get_d();
          for (int k = -8; k <= 8; k += 2) out.push_back(m + k * s);
        }
        break;
      default: break;
    }
    if (g.op() != FnOp::Compose)
      for (const auto& x : g.args()) walk(x);
    else
      walk(g.arg(1));
  };
  walk(f);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace sfk
