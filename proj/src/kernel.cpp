#include "sfk/kernel.hpp"

#include <algorithm>

#include "sfk/errors.hpp"

namespace sfk {

struct KernelExpr::Node {
  Kind kind = Kind::Zero;
  SpaceExpr dom;
  SpaceExpr cod;
  FnExpr fn;
  MeasureExpr measure;
  std::string family;
  std::vector<FnExpr> params;
  std::vector<KernelExpr> children;
  std::shared_ptr<const KernelSeqSpec> seq;
  std::shared_ptr<const KernelFnSpec> fn_spec;
};

namespace {

void require_space(const SpaceExpr& got, const SpaceExpr& want, const char* what) {
  if (!(got == want)) fail(Errc::TypeMismatch, std::string(what) + ": expected " + want.str() + ", got " + got.str());
}

SpaceExpr family_codomain(const std::string& family, const std::vector<FnExpr>& args, const SpaceExpr& dom) {
  auto arity = [&](std::size_t n) {
    if (args.size() != n) fail(Errc::TypeMismatch, family + " takes " + std::to_string(n) + " parameters");
  };
  if (family == "normal" || family == "uniform" || family == "beta") {
    arity(2);
    return SpaceExpr::real();
  }
  if (family == "bernoulli" || family == "poisson") {
    arity(1);
    return SpaceExpr::nat();
  }
  if (family == "binomial") {
    arity(2);
    return SpaceExpr::nat();
  }
  if (family == "dirac") {
    arity(1);
    return codomain(args[0], dom);
  }
  fail(Errc::Unsupported, "unknown kernel family " + family);
}

Rational point_rational(const Point& p) {
  switch (p.kind()) {
    case Point::Kind::Nat: return Rational(static_cast<unsigned long>(p.nat()));
    case Point::Kind::Real: return Rational(p.real());
    case Point::Kind::Weight:
      if (p.weight().is_inf()) fail(Errc::NumericDomain, "infinite distribution parameter");
      return p.weight().to_rational();
    default: fail(Errc::TypeMismatch, "not a number: " + p.str());
  }
}

ExtReal point_weight(const Point& p) {
  if (p.kind() == Point::Kind::Real) {
    if (p.real() < 0) fail(Errc::NumericDomain, "negative parameter " + p.str());
    return ExtReal::exact(Rational(p.real()));
  }
  return as_weight(p);
}

MeasureExpr family_measure(const std::string& family, const std::vector<Point>& v, const SpaceExpr& cod) {
  if (family == "normal") return normal(point_rational(v[0]).get_d(), point_rational(v[1]).get_d());
  if (family == "uniform") return uniform(point_rational(v[0]), point_rational(v[1]));
  if (family == "beta") return beta_dist(point_rational(v[0]).get_d(), point_rational(v[1]).get_d());
  if (family == "bernoulli") return bernoulli(point_weight(v[0]));
  if (family == "poisson") return poisson(point_rational(v[0]).get_d());
  if (family == "binomial") {
    Rational n = point_rational(v[0]);
    if (n < 0 || n.get_den() != 1) fail(Errc::NumericDomain, "binomial needs a natural count");
    return binomial(n.get_num().get_ui(), point_weight(v[1]));
  }
  if (family == "dirac") return dirac(v[0], cod);
  fail(Errc::Unsupported, "unknown kernel family " + family);
}

// Integration of l against m: V |-> int m(dy) l(y, V).
MeasureExpr bind(const MeasureExpr& m, const KernelExpr& l) {
  if (m.kind() == MeasureExpr::Kind::Zero) return MeasureExpr::zero(l.cod());
  if (l.kind() == KernelExpr::Kind::Det) return MeasureExpr::push(m, l.fn());
  if (auto c = constant_measure(l)) {
    ExtReal mass = total_mass(m).value;
    if (mass.is_zero()) return MeasureExpr::zero(l.cod());
    if (mass == ExtReal(1) && mass.is_exact()) return *c;
    return MeasureExpr::weighted(mass, *c);
  }
  auto spec = std::make_shared<MixSpec>();
  spec->at = [l](const Point& y) { return eval_kernel(l, y); };
  spec->codomain = l.cod();
  spec->text = "(bind " + m.str() + " " + l.str() + ")";
  return MeasureExpr::mixture(m, spec);
}

FnExpr swap_fn() { return FnExpr::pair(FnExpr::proj2(), FnExpr::proj1()); }

// (k (x) l) with l integrated outermost.
MeasureExpr right_product(const MeasureExpr& k, const MeasureExpr& l) {
  return MeasureExpr::push(MeasureExpr::product(l, k), swap_fn());
}

std::optional<SetExpr> drop_first_set(const SetExpr& s) {
  if (s.is_empty()) return SetExpr::empty(s.space().right());
  if (s.is_full()) return SetExpr::full(s.space().right());
  const auto& cells = s.cells();
  if (cells.size() == 1 && cells[0].first->is_full()) return *cells[0].second;
  return std::nullopt;
}

}  // namespace

MeasureExpr bind_measure(const MeasureExpr& m, const KernelExpr& l) { return bind(m, l); }

KernelExpr::KernelExpr() : KernelExpr(std::make_shared<Node>()) {}
KernelExpr::KernelExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

KernelExpr KernelExpr::zero(const SpaceExpr& dom, const SpaceExpr& cod) {
  auto n = std::make_shared<Node>();
  n->dom = dom;
  n->cod = cod;
  return KernelExpr(n);
}

KernelExpr KernelExpr::det(const FnExpr& f, const SpaceExpr& dom) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Det;
  n->dom = dom;
  n->cod = codomain(f, dom);
  n->fn = f;
  return KernelExpr(n);
}

KernelExpr KernelExpr::constant(const MeasureExpr& m, const SpaceExpr& dom) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->dom = dom;
  n->cod = m.space();
  n->measure = m;
  return KernelExpr(n);
}

KernelExpr KernelExpr::param(const std::string& family, std::vector<FnExpr> args, const SpaceExpr& dom) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Param;
  n->dom = dom;
  n->cod = family_codomain(family, args, dom);
  n->family = family;
  n->params = std::move(args);
  return KernelExpr(n);
}

KernelExpr KernelExpr::compose(const KernelExpr& k, const KernelExpr& l) {
  require_space(l.dom(), k.cod(), "kernel composition");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Compose;
  n->dom = k.dom();
  n->cod = l.cod();
  n->children = {k, l};
  return KernelExpr(n);
}

KernelExpr KernelExpr::push(const KernelExpr& k, const FnExpr& f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Push;
  n->dom = k.dom();
  n->cod = codomain(f, k.cod());
  n->fn = f;
  n->children = {k};
  return KernelExpr(n);
}

KernelExpr KernelExpr::pull(const FnExpr& g, const KernelExpr& k, const SpaceExpr& dom) {
  require_space(codomain(g, dom), k.dom(), "kernel pullback");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Pull;
  n->dom = dom;
  n->cod = k.cod();
  n->fn = g;
  n->children = {k};
  return KernelExpr(n);
}

KernelExpr KernelExpr::score(const KernelExpr& k, const FnExpr& f) {
  SpaceExpr c = codomain(f, SpaceExpr::prod(k.dom(), k.cod()));
  if (!c.is_numeric()) fail(Errc::TypeMismatch, "score function must be numeric, got " + c.str());
  auto n = std::make_shared<Node>();
  n->kind = Kind::Score;
  n->dom = k.dom();
  n->cod = k.cod();
  n->fn = f;
  n->children = {k};
  return KernelExpr(n);
}

KernelExpr KernelExpr::sum(const std::vector<KernelExpr>& ks) {
  if (ks.empty()) fail(Errc::TypeMismatch, "empty kernel sum");
  for (const auto& k : ks) {
    require_space(k.dom(), ks[0].dom(), "kernel sum domain");
    require_space(k.cod(), ks[0].cod(), "kernel sum codomain");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sum;
  n->dom = ks[0].dom();
  n->cod = ks[0].cod();
  n->children = ks;
  return KernelExpr(n);
}

KernelExpr KernelExpr::seq_sum(const SpaceExpr& dom, const SpaceExpr& cod, std::shared_ptr<const KernelSeqSpec> spec) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::SeqSum;
  n->dom = dom;
  n->cod = cod;
  n->seq = std::move(spec);
  return KernelExpr(n);
}

KernelExpr KernelExpr::prod_l(const KernelExpr& k, const KernelExpr& l) {
  require_space(l.dom(), SpaceExpr::prod(k.dom(), k.cod()), "left product");
  auto n = std::make_shared<Node>();
  n->kind = Kind::ProdL;
  n->dom = k.dom();
  n->cod = SpaceExpr::prod(k.cod(), l.cod());
  n->children = {k, l};
  return KernelExpr(n);
}

KernelExpr KernelExpr::prod_r(const KernelExpr& k, const KernelExpr& l) {
  require_space(l.dom(), k.dom(), "right product");
  auto n = std::make_shared<Node>();
  n->kind = Kind::ProdR;
  n->dom = k.dom();
  n->cod = SpaceExpr::prod(k.cod(), l.cod());
  n->children = {k, l};
  return KernelExpr(n);
}

KernelExpr KernelExpr::from_fn(const SpaceExpr& dom, const SpaceExpr& cod, std::shared_ptr<const KernelFnSpec> spec) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Fn;
  n->dom = dom;
  n->cod = cod;
  n->fn_spec = std::move(spec);
  return KernelExpr(n);
}

KernelExpr::Kind KernelExpr::kind() const { return node_->kind; }
const SpaceExpr& KernelExpr::dom() const { return node_->dom; }
const SpaceExpr& KernelExpr::cod() const { return node_->cod; }
const FnExpr& KernelExpr::fn() const { return node_->fn; }
const MeasureExpr& KernelExpr::measure() const { return node_->measure; }
const std::string& KernelExpr::family() const { return node_->family; }
const std::vector<FnExpr>& KernelExpr::params() const { return node_->params; }
const std::vector<KernelExpr>& KernelExpr::children() const { return node_->children; }

const KernelSeqSpec& KernelExpr::seq() const {
  if (!node_->seq) fail(Errc::TypeMismatch, "not a kernel sequence sum");
  return *node_->seq;
}

const KernelFnSpec& KernelExpr::fn_spec() const {
  if (!node_->fn_spec) fail(Errc::TypeMismatch, "not a derived kernel");
  return *node_->fn_spec;
}

std::string KernelExpr::str() const {
  const Node& n = *node_;
  auto dom_note = [&](const SpaceExpr& dflt) { return n.dom == dflt ? std::string() : " :dom " + n.dom.str(); };
  switch (n.kind) {
    case Kind::Zero: return "(kzero " + n.dom.str() + " " + n.cod.str() + ")";
    case Kind::Det: return "(det " + n.fn.str() + dom_note(SpaceExpr::real()) + ")";
    case Kind::Const: return "(constk " + n.measure.str() + dom_note(SpaceExpr::unit()) + ")";
    case Kind::Param: {
      std::string s = "(param " + n.family;
      for (const auto& a : n.params) s += " " + a.str();
      return s + dom_note(SpaceExpr::real()) + ")";
    }
    case Kind::Compose: return "(kcompose " + child(0).str() + " " + child(1).str() + ")";
    case Kind::Push: return "(kpush " + child(0).str() + " " + n.fn.str() + ")";
    case Kind::Pull: return "(kpull " + n.fn.str() + " " + child(0).str() + dom_note(SpaceExpr::real()) + ")";
    case Kind::Score: return "(kscore " + child(0).str() + " " + n.fn.str() + ")";
    case Kind::Sum: {
      std::string s = "(ksum";
      for (const auto& c : n.children) s += " " + c.str();
      return s + ")";
    }
    case Kind::SeqSum: return n.seq->text;
    case Kind::ProdL: return "(prodl " + child(0).str() + " " + child(1).str() + ")";
    case Kind::ProdR: return "(prodr " + child(0).str() + " " + child(1).str() + ")";
    case Kind::Fn: return n.fn_spec->text;
  }
  return "?";
}

const char* kernel_kind_name(KernelExpr::Kind k) {
  using K = KernelExpr::Kind;
  switch (k) {
    case K::Zero: return "zero";
    case K::Det: return "det";
    case K::Const: return "constk";
    case K::Param: return "param";
    case K::Compose: return "kcompose";
    case K::Push: return "kpush";
    case K::Pull: return "kpull";
    case K::Score: return "kscore";
    case K::Sum: return "ksum";
    case K::SeqSum: return "kseqsum";
    case K::ProdL: return "prodl";
    case K::ProdR: return "prodr";
    case K::Fn: return "derived";
  }
  return "?";
}

MeasureExpr eval_kernel(const KernelExpr& k, const Point& x) {
  using K = KernelExpr::Kind;
  check_fits(x, k.dom());
  switch (k.kind()) {
    case K::Zero: return MeasureExpr::zero(k.cod());
    case K::Det: {
      Point v = eval_fn(k.fn(), x);
      if (v.is_bottom()) return MeasureExpr::zero(k.cod());
      return dirac(v, k.cod());
    }
    case K::Const: return k.measure();
    case K::Param: {
      std::vector<Point> v;
      for (const auto& a : k.params()) {
        v.push_back(eval_fn(a, x));
        if (v.back().is_bottom()) return MeasureExpr::zero(k.cod());
      }
      return family_measure(k.family(), v, k.cod());
    }
    case K::Compose: {
      const KernelExpr& inner = k.child(0);
      if (inner.kind() == K::Det) {
        Point v = eval_fn(inner.fn(), x);
        if (v.is_bottom()) return MeasureExpr::zero(k.cod());
        return eval_kernel(k.child(1), v);
      }
      return bind(eval_kernel(inner, x), k.child(1));
    }
    case K::Push: return MeasureExpr::push(eval_kernel(k.child(), x), k.fn());
    case K::Pull: {
      Point v = eval_fn(k.fn(), x);
      if (v.is_bottom()) return MeasureExpr::zero(k.cod());
      return eval_kernel(k.child(), v);
    }
    case K::Score: {
      FnExpr f = section(k.fn(), SpaceExpr::prod(k.dom(), k.cod()), x);
      return MeasureExpr::reweight(eval_kernel(k.child(), x), f);
    }
    case K::Sum: {
      std::vector<MeasureExpr> ms;
      for (const auto& c : k.children()) ms.push_back(eval_kernel(c, x));
      return MeasureExpr::sum(ms);
    }
    case K::SeqSum: break;
    case K::ProdL: {
      MeasureExpr m = eval_kernel(k.child(0), x);
      const KernelExpr& l = k.child(1);
      if (auto c = constant_measure(l)) return MeasureExpr::product(m, *c);
      if (m.kind() == MeasureExpr::Kind::Base && m.base_measure().kind() == BaseMeasure::Kind::Dirac) {
        const Point& v = m.base_measure().point();
        return MeasureExpr::product(m, eval_kernel(l, Point::pair(x, v)));
      }
      SpaceExpr y = k.child(0).cod();
      auto spec = std::make_shared<MixSpec>();
      spec->at = [l, x, y](const Point& yy) {
        return MeasureExpr::product(dirac(yy, y), eval_kernel(l, Point::pair(x, yy)));
      };
      spec->codomain = k.cod();
      spec->text = "(kapply " + k.str() + " " + x.str() + ")";
      return MeasureExpr::mixture(m, spec);
    }
    case K::ProdR: return right_product(eval_kernel(k.child(0), x), eval_kernel(k.child(1), x));
    case K::Fn: return k.fn_spec().at(x);
  }
  const KernelSeqSpec& spec = k.seq();
  auto gen = spec.gen;
  auto tail = spec.tail;
  return seq_generated(
      k.cod(), [gen, x](std::uint64_t n) { return eval_kernel(gen(n), x); },
      [tail, x](const SetExpr* a, std::uint64_t n) { return tail(x, a, n); },
      "(kapply " + k.str() + " " + x.str() + ")", spec.disjoint, spec.length);
}

std::optional<FnExpr> drop_first(const FnExpr& f) {
  const auto& a = f.args();
  auto all_args = [&]() -> std::optional<std::vector<FnExpr>> {
    std::vector<FnExpr> out;
    for (const auto& g : a) {
      auto d = drop_first(g);
      if (!d) return std::nullopt;
      out.push_back(*d);
    }
    return out;
  };
  switch (f.op()) {
    case FnOp::Proj2: return FnExpr::id();
    case FnOp::Lit:
    case FnOp::Const: return f;
    case FnOp::Compose: {
      auto inner = drop_first(a[1]);
      if (!inner) return std::nullopt;
      return FnExpr::compose(a[0], *inner);
    }
    case FnOp::Pair: {
      auto v = all_args();
      if (!v) return std::nullopt;
      return FnExpr::pair((*v)[0], (*v)[1]);
    }
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
    case FnOp::Div:
    case FnOp::Pow:
    case FnOp::Min:
    case FnOp::Max: {
      auto v = all_args();
      if (!v) return std::nullopt;
      return FnExpr::binary(f.op(), (*v)[0], (*v)[1]);
    }
    case FnOp::Neg:
    case FnOp::Abs:
    case FnOp::Floor:
    case FnOp::Exp:
    case FnOp::Log:
    case FnOp::Sqrt:
    case FnOp::NatOfFloor: {
      auto v = all_args();
      if (!v) return std::nullopt;
      return FnExpr::unary(f.op(), (*v)[0]);
    }
    case FnOp::PdfNormal:
    case FnOp::PdfBeta:
    case FnOp::PmfBinomial: {
      auto v = all_args();
      if (!v) return std::nullopt;
      if (f.op() == FnOp::PdfNormal) return FnExpr::pdf_normal((*v)[0], (*v)[1], (*v)[2]);
      if (f.op() == FnOp::PdfBeta) return FnExpr::pdf_beta((*v)[0], (*v)[1], (*v)[2]);
      return FnExpr::pmf_binomial((*v)[0], (*v)[1], (*v)[2]);
    }
    case FnOp::PmfPoisson: {
      auto v = all_args();
      if (!v) return std::nullopt;
      return FnExpr::pmf_poisson((*v)[0], (*v)[1]);
    }
    case FnOp::Indicator: {
      auto s = drop_first_set(f.set());
      if (!s) return std::nullopt;
      return FnExpr::indicator(*s);
    }
    case FnOp::IfSet: {
      auto s = drop_first_set(f.set());
      auto v = all_args();
      if (!s || !v) return std::nullopt;
      return FnExpr::if_set(*s, (*v)[0], (*v)[1]);
    }
    case FnOp::Layer: {
      auto v = all_args();
      if (!v) return std::nullopt;
      return FnExpr::layer(f.weight(), (*v)[0]);
    }
    default: return std::nullopt;
  }
}

std::optional<MeasureExpr> constant_measure(const KernelExpr& k) {
  using K = KernelExpr::Kind;
  auto ignores_input = [](const FnExpr& f) { return f.op() == FnOp::Const || f.op() == FnOp::Lit; };
  switch (k.kind()) {
    case K::Zero: return MeasureExpr::zero(k.cod());
    case K::Const: return k.measure();
    case K::Det:
      if (!ignores_input(k.fn())) return std::nullopt;
      return dirac(eval_fn(k.fn(), Point::unit()), k.cod());
    case K::Param: {
      std::vector<Point> v;
      for (const auto& a : k.params()) {
        if (!ignores_input(a)) return std::nullopt;
        v.push_back(eval_fn(a, Point::unit()));
      }
      return family_measure(k.family(), v, k.cod());
    }
    case K::Compose: {
      auto m = constant_measure(k.child(0));
      if (!m) return std::nullopt;
      return bind(*m, k.child(1));
    }
    case K::Push: {
      auto m = constant_measure(k.child());
      if (!m) return std::nullopt;
      return MeasureExpr::push(*m, k.fn());
    }
    case K::Pull: {
      if (ignores_input(k.fn())) return eval_kernel(k.child(), eval_fn(k.fn(), Point::unit()));
      return constant_measure(k.child());
    }
    case K::Score: {
      auto m = constant_measure(k.child());
      if (!m) return std::nullopt;
      auto f = drop_first(k.fn());
      if (!f) return std::nullopt;
      return MeasureExpr::reweight(*m, simplify(*f, k.cod()));
    }
    case K::Sum: {
      std::vector<MeasureExpr> ms;
      for (const auto& c : k.children()) {
        auto m = constant_measure(c);
        if (!m) return std::nullopt;
        ms.push_back(*m);
      }
      return MeasureExpr::sum(ms);
    }
    case K::ProdL: {
      auto a = constant_measure(k.child(0));
      auto b = constant_measure(k.child(1));
      if (!a || !b) return std::nullopt;
      return MeasureExpr::product(*a, *b);
    }
    case K::ProdR: {
      auto a = constant_measure(k.child(0));
      auto b = constant_measure(k.child(1));
      if (!a || !b) return std::nullopt;
      return right_product(*a, *b);
    }
    case K::SeqSum:
    case K::Fn: return std::nullopt;
  }
  return std::nullopt;
}

KernelExpr lift(const KernelExpr& l, const SpaceExpr& y) {
  return KernelExpr::pull(FnExpr::proj1(), l, SpaceExpr::prod(l.dom(), y));
}

namespace {

constexpr std::size_t kMaxRows = 4096;

MeasureClass join(MeasureClass a, MeasureClass b) { return std::max(a, b); }

// Class of a construction that multiplies masses: probability, subprobability and finiteness
// are preserved, anything weaker only gives s-finiteness.
MeasureClass multiplicative(MeasureClass a, MeasureClass b) {
  MeasureClass j = join(a, b);
  return j <= MeasureClass::Finite ? j : MeasureClass::SFinite;
}

MeasureClass partial(MeasureClass c, const FnExpr& f) {
  return (c == MeasureClass::Probability && !is_total(f)) ? MeasureClass::Subprobability : c;
}

bool injective(const FnExpr& f) {
  return f.is_id() || f.op() == FnOp::InjL || f.op() == FnOp::InjR || f == swap_fn();
}

MeasureClass structural_class(const KernelExpr& k, const EvalConfig& cfg) {
  using K = KernelExpr::Kind;
  using C = MeasureClass;
  switch (k.kind()) {
    case K::Zero: return C::Subprobability;
    case K::Det: return is_total(k.fn()) ? C::Probability : C::Subprobability;
    case K::Const: return classify_measure(k.measure(), cfg);
    case K::Param: return C::Probability;
    case K::Compose: {
      C a = classify_kernel(k.child(0), cfg);
      C b = classify_kernel(k.child(1), cfg);
      if (k.child(0).kind() == K::Det) return partial(b, k.child(0).fn());
      if (k.child(1).kind() == K::Det) {
        C pushed = partial(a, k.child(1).fn());
        return (pushed <= C::Finite || injective(k.child(1).fn())) ? pushed : C::SFinite;
      }
      return multiplicative(a, b);
    }
    case K::Push: {
      C a = classify_kernel(k.child(), cfg);
      C pushed = partial(a, k.fn());
      return (pushed <= C::Finite || injective(k.fn())) ? pushed : C::SFinite;
    }
    case K::Pull: return partial(classify_kernel(k.child(), cfg), k.fn());
    case K::Score: {
      C a = classify_kernel(k.child(), cfg);
      const FnExpr& f = k.fn();
      if (f.op() == FnOp::Lit && !f.lit_is_inf() && f.lit_value() == 1) return a;
      if (a > C::SigmaFinite) return C::SFinite;
      auto vc = value_classes(f, SpaceExpr::prod(k.dom(), k.cod()));
      return vc.inf.is_empty() ? C::SigmaFinite : C::SFinite;
    }
    case K::Sum: {
      C acc = C::Subprobability;
      for (const auto& c : k.children()) acc = join(acc, classify_kernel(c, cfg));
      if (acc <= C::Finite) return C::Finite;
      return acc;
    }
    case K::SeqSum: return C::SFinite;
    case K::ProdL: return multiplicative(classify_kernel(k.child(0), cfg), classify_kernel(k.child(1), cfg));
    case K::ProdR: {
      C a = classify_kernel(k.child(0), cfg);
      C b = classify_kernel(k.child(1), cfg);
      if (join(a, b) == C::SigmaFinite) return C::SigmaFinite;
      return multiplicative(a, b);
    }
    case K::Fn: return k.fn_spec().cls;
  }
  return C::SFinite;
}

bool negligible(const EvalResult& r, const EvalConfig& cfg) {
  if (r.value.is_zero()) return true;
  return !r.value.is_exact() && r.value.is_finite() && r.value.to_double() <= 10 * cfg.tol;
}

}  // namespace

std::optional<std::vector<std::pair<Point, MeasureExpr>>> finite_rows(const KernelExpr& k) {
  if (!k.dom().is_finite()) return std::nullopt;
  auto pts = enumerate(k.dom());
  if (pts.size() > kMaxRows) return std::nullopt;
  std::vector<std::pair<Point, MeasureExpr>> rows;
  rows.reserve(pts.size());
  for (const auto& x : pts) rows.emplace_back(x, eval_kernel(k, x));
  return rows;
}

SetExpr lift_set(const SpaceExpr& dom, const SpaceExpr& cod, const std::vector<std::pair<Point, SetExpr>>& rows) {
  SetExpr out = SetExpr::empty(SpaceExpr::prod(dom, cod));
  for (const auto& [x, a] : rows) out = out.unite(SetExpr::rect(SetExpr::singleton(dom, x), a));
  return out;
}

FnExpr lift_fn(const SpaceExpr& dom, const SpaceExpr& cod, const std::vector<std::pair<Point, FnExpr>>& rows) {
  FnExpr out = FnExpr::lit(Rational(0));
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    SetExpr slice = SetExpr::rect(SetExpr::singleton(dom, it->first), SetExpr::full(cod));
    out = FnExpr::if_set(slice, FnExpr::compose(it->second, FnExpr::proj2()), out);
  }
  return out;
}

MeasureClass classify_kernel(const KernelExpr& k, const EvalConfig& cfg) {
  if (auto rows = finite_rows(k)) {
    MeasureClass acc = MeasureClass::Probability;
    for (const auto& [x, m] : *rows) acc = join(acc, classify_measure(m, cfg));
    return acc;
  }
  if (auto m = constant_measure(k)) return classify_measure(*m, cfg);
  return structural_class(k, cfg);
}

std::optional<SetExpr> singular_witness(const MeasureExpr& k, const MeasureExpr& l, const EvalConfig& cfg) {
  auto fk = density_form(k);
  auto fl = density_form(l);
  if (!fk || !fl) return std::nullopt;
  auto [ak, al] = align(*fk, *fl);
  SetExpr r = zero_region(al);
  if (!negligible(measure_of(k, r.complement(), cfg), cfg)) return std::nullopt;
  return r;
}

bool measure_abs_continuous(const MeasureExpr& k, const MeasureExpr& l, AbsMode mode, const EvalConfig& cfg) {
  auto fk = require_density_form(k);
  auto fl = require_density_form(l);
  auto [ak, al] = align(fk, fl);
  if (!negligible(measure_of(k, zero_region(al), cfg), cfg)) return false;
  if (mode == AbsMode::Plain) return true;
  return negligible(measure_of(k, top_set(al).minus(top_set(ak)), cfg), cfg);
}

std::optional<SetExpr> mutually_singular(const KernelExpr& k, const KernelExpr& l, const EvalConfig& cfg) {
  require_space(l.dom(), k.dom(), "singularity domain");
  require_space(l.cod(), k.cod(), "singularity codomain");
  SpaceExpr xy = SpaceExpr::prod(k.dom(), k.cod());
  if (l.kind() == KernelExpr::Kind::Zero) return SetExpr::full(xy);
  if (k.kind() == KernelExpr::Kind::Zero) return SetExpr::empty(xy);
  auto mk = constant_measure(k);
  auto ml = constant_measure(l);
  if (mk && ml) {
    auto w = singular_witness(*mk, *ml, cfg);
    if (!w) return std::nullopt;
    return SetExpr::rect(SetExpr::full(k.dom()), *w);
  }
  auto rk = finite_rows(k);
  auto rl = finite_rows(l);
  if (!rk || !rl) return std::nullopt;
  std::vector<std::pair<Point, SetExpr>> rows;
  for (std::size_t i = 0; i < rk->size(); ++i) {
    auto w = singular_witness((*rk)[i].second, (*rl)[i].second, cfg);
    if (!w) return std::nullopt;
    rows.emplace_back((*rk)[i].first, *w);
  }
  return lift_set(k.dom(), k.cod(), rows);
}

bool abs_continuous(const KernelExpr& k, const KernelExpr& l, AbsMode mode, const EvalConfig& cfg) {
  require_space(l.dom(), k.dom(), "absolute continuity domain");
  require_space(l.cod(), k.cod(), "absolute continuity codomain");
  std::string ls = l.str();
  if (k.str() == ls || k.kind() == KernelExpr::Kind::Zero) return true;
  if (k.kind() == KernelExpr::Kind::Score && k.child().str() == ls) return true;
  auto mk = constant_measure(k);
  auto ml = constant_measure(l);
  if (mk && ml) return measure_abs_continuous(*mk, *ml, mode, cfg);
  auto rk = finite_rows(k);
  auto rl = finite_rows(l);
  if (!rk || !rl) fail(Errc::Unsupported, "absolute continuity of " + k.str() + " against " + ls);
  for (std::size_t i = 0; i < rk->size(); ++i)
    if (!measure_abs_continuous((*rk)[i].second, (*rl)[i].second, mode, cfg)) return false;
  return true;
}

KernelOneInfty factorize_one_infty(const KernelExpr& k, const EvalConfig& cfg) {
  using C = MeasureClass;
  SpaceExpr xy = SpaceExpr::prod(k.dom(), k.cod());
  if (classify_kernel(k, cfg) <= C::SigmaFinite) return {k, FnExpr::lit(Rational(1))};
  if (auto m = constant_measure(k)) {
    auto f = factorize_one_infty(*m);
    return {KernelExpr::constant(f.sigma_finite, k.dom()), FnExpr::compose(f.factor, FnExpr::proj2())};
  }
  if (k.kind() == KernelExpr::Kind::Score) {
    auto inner = factorize_one_infty(k.child(), cfg);
    FnExpr h = simplify(FnExpr::mul(inner.factor, k.fn()), xy);
    auto vc = value_classes(h, xy);
    FnExpr finite_part = simplify(FnExpr::if_set(vc.inf, FnExpr::lit(Rational(1)), h), xy);
    return {KernelExpr::score(inner.kernel, finite_part),
            FnExpr::if_set(vc.inf, FnExpr::lit_inf(), FnExpr::lit(Rational(1)))};
  }
  auto rows = finite_rows(k);
  if (!rows) fail(Errc::Unsupported, "one-infinity factorisation of " + k.str());
  auto table = std::make_shared<std::vector<std::pair<Point, MeasureExpr>>>();
  std::vector<std::pair<Point, FnExpr>> factors;
  for (const auto& [x, m] : *rows) {
    auto f = factorize_one_infty(m);
    table->emplace_back(x, f.sigma_finite);
    factors.emplace_back(x, f.factor);
  }
  auto spec = std::make_shared<KernelFnSpec>();
  SpaceExpr cod = k.cod();
  spec->at = [table, cod](const Point& x) {
    for (const auto& [p, m] : *table)
      if (p == x) return m;
    return MeasureExpr::zero(cod);
  };
  spec->cls = C::SigmaFinite;
  spec->text = "(sigma-part " + k.str() + ")";
  return {KernelExpr::from_fn(k.dom(), cod, spec), lift_fn(k.dom(), cod, factors)};
}

SigmaFinitePresentation sigma_finite_presentation(const KernelExpr& k, const EvalConfig& cfg) {
  SpaceExpr nat = SpaceExpr::nat();
  SpaceExpr cod = SpaceExpr::prod(nat, k.cod());
  auto spec = std::make_shared<KernelFnSpec>();
  KernelExpr kk = k;
  spec->at = [kk, cod, nat, cfg](const Point& x) {
    auto stream = as_subprob_sum(eval_kernel(kk, x), cfg);
    auto len = stream->length();
    SpaceExpr y = kk.cod();
    auto piece = [stream, y](std::uint64_t n) {
      auto p = stream->at(n);
      return p ? *p : MeasureExpr::zero(y);
    };
    auto gen = [piece, nat](std::uint64_t n) { return MeasureExpr::product(dirac(Point::nat(n), nat), piece(n)); };
    auto tail = [piece, len](const SetExpr* a, std::uint64_t n) -> ExtReal {
      if (len && n >= *len) return ExtReal(0);
      if (a) {
        bool bounded = true;
        std::uint64_t top = 0;
        for (const auto& c : a->cells()) {
          if (c.first->nat_is_cofinite()) {
            bounded = false;
            break;
          }
          for (auto e : c.first->nat_elems()) top = std::max(top, e);
        }
        if (bounded && (a->cells().empty() || top < n)) return ExtReal(0);
      }
      if (!len) return ExtReal::inf();
      ExtReal acc(0);
      for (std::uint64_t i = n; i < *len; ++i) acc += total_mass(piece(i)).value;
      return acc;
    };
    return seq_generated(cod, gen, tail, "(kapply (sigma-finite-presentation " + kk.str() + ") " + x.str() + ")",
                         true, len);
  };
  spec->cls = MeasureClass::SigmaFinite;
  spec->text = "(sigma-finite-presentation " + k.str() + ")";
  return {KernelExpr::from_fn(k.dom(), cod, spec), FnExpr::proj2()};
}

}  // namespace sfk
