#include "sfk/measure.hpp"

#include "sfk/errors.hpp"

namespace sfk {

struct BaseMeasure::Node {
  Kind kind;
  SpaceExpr space;
  Point point;
  std::optional<SetExpr> set;
  RealSet support;
  FnExpr density;
  std::vector<BaseMeasure> parts;
};

BaseMeasure::BaseMeasure(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

BaseMeasure BaseMeasure::dirac(const Point& p, const SpaceExpr& space) {
  check_fits(p, space);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Dirac;
  n->space = space;
  n->point = p;
  return BaseMeasure(n);
}

BaseMeasure BaseMeasure::counting_fin(const SetExpr& support) {
  if (!support.finite_points()) fail(Errc::TypeMismatch, "counting-fin needs a finite set, got " + support.str());
  auto n = std::make_shared<Node>();
  n->kind = Kind::CountingFin;
  n->space = support.space();
  n->set = support;
  return BaseMeasure(n);
}

BaseMeasure BaseMeasure::counting_nat(const SetExpr& support) {
  if (support.space().kind() != SpaceExpr::Kind::Nat) fail(Errc::TypeMismatch, "counting-nat needs a set of naturals");
  auto n = std::make_shared<Node>();
  n->kind = Kind::CountingNat;
  n->space = SpaceExpr::nat();
  n->set = support;
  return BaseMeasure(n);
}

BaseMeasure BaseMeasure::lebesgue_density(const RealSet& support, const FnExpr& density) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::LebesgueDensity;
  n->space = SpaceExpr::real();
  n->support = support;
  n->density = density;
  return BaseMeasure(n);
}

BaseMeasure BaseMeasure::product(const BaseMeasure& a, const BaseMeasure& b) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Product;
  n->space = SpaceExpr::prod(a.space(), b.space());
  n->parts = {a, b};
  return BaseMeasure(n);
}

BaseMeasure::Kind BaseMeasure::kind() const { return node_->kind; }
const SpaceExpr& BaseMeasure::space() const { return node_->space; }
const Point& BaseMeasure::point() const { return node_->point; }
const SetExpr& BaseMeasure::support_set() const {
  if (!node_->set) fail(Errc::TypeMismatch, "base measure has no support set");
  return *node_->set;
}
const RealSet& BaseMeasure::support() const { return node_->support; }
const FnExpr& BaseMeasure::density() const { return node_->density; }
const BaseMeasure& BaseMeasure::left() const { return node_->parts.at(0); }
const BaseMeasure& BaseMeasure::right() const { return node_->parts.at(1); }

std::string BaseMeasure::str() const {
  switch (kind()) {
    case Kind::Dirac:
      if (space().kind() == SpaceExpr::Kind::Real) return "(dirac " + point().str() + ")";
      return "(dirac " + point().str() + " " + space().str() + ")";
    case Kind::CountingFin: return "(counting-fin " + space().str() + " " + support_set().str() + ")";
    case Kind::CountingNat:
      return "(counting-nat " + (support_set().is_full() ? std::string("all") : support_set().str()) + ")";
    case Kind::LebesgueDensity: {
      auto ivs = support().intervals();
      bool plain = density().op() == FnOp::Lit && !density().lit_is_inf() && density().lit_value() == 1;
      if (plain && ivs.size() == 1 && support().included_atoms().empty() && support().excluded_atoms().empty()) {
        auto b = [](const RealSet::Bound& x, bool upper) {
          return x ? rational_str(*x) : std::string(upper ? "inf" : "-inf");
        };
        return "(lebesgue " + b(ivs[0].lo, false) + " " + b(ivs[0].hi, true) + ")";
      }
      return "(density " + support().str() + " " + density().str() + ")";
    }
    case Kind::Product: return "(product " + left().str() + " " + right().str() + ")";
  }
  return "?";
}

struct MeasureExpr::Node {
  Kind kind = Kind::Zero;
  SpaceExpr space;
  std::optional<BaseMeasure> base;
  ExtReal weight;
  std::vector<MeasureExpr> children;
  std::optional<FnExpr> fn;
  std::shared_ptr<const SeqSpec> seq;
  std::shared_ptr<const MixSpec> mix;
  std::string label;
  std::optional<ExtReal> mass;
  std::optional<Family> family;
};

MeasureExpr::MeasureExpr() : node_(std::make_shared<Node>()) {}
MeasureExpr::MeasureExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

MeasureExpr MeasureExpr::zero(const SpaceExpr& space) {
  auto n = std::make_shared<Node>();
  n->space = space;
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::base(const BaseMeasure& b) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Base;
  n->space = b.space();
  n->base = b;
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::weighted(const ExtReal& w, const MeasureExpr& m) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Weighted;
  n->space = m.space();
  n->weight = w;
  n->children = {m};
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::sum(const std::vector<MeasureExpr>& ms) {
  if (ms.empty()) fail(Errc::TypeMismatch, "empty measure sum needs a space; use zero");
  for (const auto& m : ms)
    if (!(m.space() == ms[0].space()))
      fail(Errc::TypeMismatch, "sum of measures on " + ms[0].space().str() + " and " + m.space().str());
  if (ms.size() == 1) return ms[0];
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sum;
  n->space = ms[0].space();
  n->children = ms;
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::seq_sum(const SpaceExpr& space, std::shared_ptr<const SeqSpec> spec) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::SeqSum;
  n->space = space;
  n->seq = std::move(spec);
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::mixture(const MeasureExpr& outer, std::shared_ptr<const MixSpec> spec) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Mixture;
  n->space = spec->codomain;
  n->children = {outer};
  n->mix = std::move(spec);
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::push(const MeasureExpr& m, const FnExpr& f) {
  auto is_dirac = [](const MeasureExpr& x) {
    return x.kind() == Kind::Base && x.base_measure().kind() == BaseMeasure::Kind::Dirac;
  };
  if (m.kind() == Kind::Product && f.op() == FnOp::Proj2 && is_dirac(m.child(0))) return m.child(1);
  if (m.kind() == Kind::Product && f.op() == FnOp::Proj1 && is_dirac(m.child(1))) return m.child(0);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Push;
  n->space = codomain(f, m.space());
  n->children = {m};
  n->fn = f;
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::reweight(const MeasureExpr& m, const FnExpr& f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Reweight;
  n->space = m.space();
  n->children = {m};
  n->fn = f;
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::product(const MeasureExpr& a, const MeasureExpr& b) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Product;
  n->space = SpaceExpr::prod(a.space(), b.space());
  n->children = {a, b};
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::labelled(std::string text) const {
  auto n = std::make_shared<Node>(*node_);
  n->label = std::move(text);
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::with_mass(const ExtReal& mass) const {
  auto n = std::make_shared<Node>(*node_);
  n->mass = mass;
  return MeasureExpr(n);
}

MeasureExpr MeasureExpr::with_family(Family fam) const {
  auto n = std::make_shared<Node>(*node_);
  n->family = std::move(fam);
  return MeasureExpr(n);
}

MeasureExpr::Kind MeasureExpr::kind() const { return node_->kind; }
const SpaceExpr& MeasureExpr::space() const { return node_->space; }
const BaseMeasure& MeasureExpr::base_measure() const {
  if (!node_->base) fail(Errc::TypeMismatch, "not a base measure");
  return *node_->base;
}
const ExtReal& MeasureExpr::weight() const { return node_->weight; }
const std::vector<MeasureExpr>& MeasureExpr::children() const { return node_->children; }
const FnExpr& MeasureExpr::fn() const {
  if (!node_->fn) fail(Errc::TypeMismatch, "measure node has no function");
  return *node_->fn;
}
const SeqSpec& MeasureExpr::seq() const { return *node_->seq; }
const MixSpec& MeasureExpr::mix() const { return *node_->mix; }
const std::optional<ExtReal>& MeasureExpr::mass_hint() const { return node_->mass; }
const std::optional<Family>& MeasureExpr::family() const { return node_->family; }
const std::string& MeasureExpr::label() const { return node_->label; }

std::string MeasureExpr::str() const {
  if (!node_->label.empty()) return node_->label;
  switch (kind()) {
    case Kind::Zero: return space().kind() == SpaceExpr::Kind::Real ? "zero" : "(zero " + space().str() + ")";
    case Kind::Base: return base_measure().str();
    case Kind::Weighted: return "(scale " + weight().str() + " " + child().str() + ")";
    case Kind::Sum: {
      std::string s = "(sum";
      for (const auto& c : children()) s += " " + c.str();
      return s + ")";
    }
    case Kind::SeqSum: return seq().text;
    case Kind::Mixture: return mix().text;
    case Kind::Push: return "(push " + child().str() + " " + fn().str() + ")";
    case Kind::Reweight: return "(reweight " + child().str() + " " + fn().str() + ")";
    case Kind::Product: return "(product " + child(0).str() + " " + child(1).str() + ")";
  }
  return "?";
}

const char* eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::Exact: return "exact";
    case EvalMode::Truncated: return "truncated";
    case EvalMode::Diverges: return "diverges";
  }
  return "?";
}

std::string eval_result_str(const EvalResult& r) {
  std::string s = r.value.str() + " " + eval_mode_name(r.mode);
  if (r.mode == EvalMode::Truncated) s += " " + double_str(r.error_bound);
  return s;
}

ExtReal Integrand::at(const Point& p) const { return fn ? eval_weight(*fn, p) : cb(p); }

std::string atom_table_str(const AtomTable& t) {
  std::string s = "{";
  bool first = true;
  for (const auto& [p, w] : t) {
    if (!first) s += ", ";
    first = false;
    s += p.str() + ": " + w.str();
  }
  return s + "}";
}

AtomTable normalized(const AtomTable& t) {
  AtomTable out;
  for (const auto& [p, w] : t)
    if (!w.is_zero()) out.emplace(p, w);
  return out;
}

}  // namespace sfk
