#include "sfk/density.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sfk/errors.hpp"

namespace sfk {

Reference Reference::count(const SpaceExpr& space) {
  if (!space.is_countable()) fail(Errc::Unsupported, "counting reference on uncountable " + space.str());
  Reference r;
  r.kind_ = Kind::Count;
  r.space_ = space;
  return r;
}

Reference Reference::atoms(std::vector<Rational> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  Reference r;
  r.kind_ = Kind::Atoms;
  r.space_ = SpaceExpr::real();
  r.atoms_ = std::move(xs);
  return r;
}

Reference Reference::leb() {
  Reference r;
  r.kind_ = Kind::Leb;
  r.space_ = SpaceExpr::real();
  return r;
}

Reference Reference::prod(const Reference& a, const Reference& b) {
  if (a.kind_ == Kind::Count && b.kind_ == Kind::Count) return count(SpaceExpr::prod(a.space_, b.space_));
  Reference r;
  r.kind_ = Kind::Prod;
  r.space_ = SpaceExpr::prod(a.space_, b.space_);
  r.parts_ = {a, b};
  return r;
}

Reference Reference::inl(const Reference& a, const SpaceExpr& right) {
  if (a.kind_ == Kind::Count && right.is_countable()) return count(SpaceExpr::sum(a.space_, right));
  Reference r;
  r.kind_ = Kind::InL;
  r.space_ = SpaceExpr::sum(a.space_, right);
  r.parts_ = {a};
  return r;
}

Reference Reference::inr(const SpaceExpr& left, const Reference& b) {
  if (b.kind_ == Kind::Count && left.is_countable()) return count(SpaceExpr::sum(left, b.space_));
  Reference r;
  r.kind_ = Kind::InR;
  r.space_ = SpaceExpr::sum(left, b.space_);
  r.parts_ = {b};
  return r;
}

std::string Reference::key() const {
  switch (kind_) {
    case Kind::Count: return "count " + space_.str();
    case Kind::Atoms: return "atoms";
    case Kind::Leb: return "lebesgue";
    case Kind::Prod: return "(" + left().key() + " x " + right().key() + ")";
    case Kind::InL: return "(inl " + left().key() + " " + space_.right().str() + ")";
    case Kind::InR: return "(inr " + space_.left().str() + " " + left().key() + ")";
  }
  return "?";
}

int Reference::dimension() const {
  switch (kind_) {
    case Kind::Leb: return 1;
    case Kind::Prod: return left().dimension() + right().dimension();
    case Kind::InL:
    case Kind::InR: return left().dimension();
    default: return 0;
  }
}

SetExpr Reference::support() const {
  switch (kind_) {
    case Kind::Count:
    case Kind::Leb: return SetExpr::full(space_);
    case Kind::Atoms: return SetExpr::real(RealSet::points(atoms_));
    case Kind::Prod: return SetExpr::rect(left().support(), right().support());
    case Kind::InL: return SetExpr::sum(left().support(), SetExpr::empty(space_.right()));
    case Kind::InR: return SetExpr::sum(SetExpr::empty(space_.left()), left().support());
  }
  return SetExpr::empty(space_);
}

MeasureExpr Reference::measure() const {
  switch (kind_) {
    case Kind::Count: return counting(space_);
    case Kind::Atoms: return counting_fin(support());
    case Kind::Leb: return lebesgue();
    case Kind::Prod: return MeasureExpr::product(left().measure(), right().measure());
    case Kind::InL: return MeasureExpr::push(left().measure(), FnExpr::inj_l(space_.right()));
    case Kind::InR: return MeasureExpr::push(left().measure(), FnExpr::inj_r(space_.left()));
  }
  return MeasureExpr::zero(space_);
}

Reference Reference::merged(const Reference& other) const {
  if (key() != other.key()) fail(Errc::TypeMismatch, "merging references " + key() + " and " + other.key());
  switch (kind_) {
    case Kind::Atoms: {
      auto xs = atoms_;
      xs.insert(xs.end(), other.atoms_.begin(), other.atoms_.end());
      return atoms(std::move(xs));
    }
    case Kind::Prod: return prod(left().merged(other.left()), right().merged(other.right()));
    case Kind::InL: return inl(left().merged(other.left()), space_.right());
    case Kind::InR: return inr(space_.left(), left().merged(other.left()));
    default: return *this;
  }
}

const DensityComponent* DensityForm::find(const std::string& key) const {
  for (const auto& c : comps)
    if (c.ref.key() == key) return &c;
  return nullptr;
}

namespace {

struct NoForm {
  std::string why;
};

using CompMap = std::map<std::string, DensityComponent>;

void add_comp(CompMap& m, const DensityComponent& c) {
  auto key = c.ref.key();
  auto it = m.find(key);
  if (it == m.end()) {
    m.emplace(key, c);
    return;
  }
  it->second.ref = it->second.ref.merged(c.ref);
  it->second.density = FnExpr::add(it->second.density, c.density);
}

DensityForm to_form(const SpaceExpr& space, const CompMap& m) {
  DensityForm f{space, {}};
  for (const auto& [k, c] : m) f.comps.push_back(c);
  std::stable_sort(f.comps.begin(), f.comps.end(), [](const DensityComponent& a, const DensityComponent& b) {
    return a.ref.dimension() < b.ref.dimension();
  });
  return f;
}

CompMap to_map(const DensityForm& f) {
  CompMap m;
  for (const auto& c : f.comps) add_comp(m, c);
  return m;
}

Rational real_coord(const Point& p) {
  if (p.kind() == Point::Kind::Nat) return Rational(static_cast<unsigned long>(p.nat()));
  return Rational(p.real());
}

DensityComponent product_comp(const DensityComponent& a, const DensityComponent& b) {
  return {Reference::prod(a.ref, b.ref),
          FnExpr::mul(FnExpr::compose(a.density, FnExpr::proj1()), FnExpr::compose(b.density, FnExpr::proj2()))};
}

DensityComponent dirac_comp(const Point& p, const SpaceExpr& x) {
  using K = SpaceExpr::Kind;
  if (x.is_countable()) return {Reference::count(x), FnExpr::table({{p, ExtReal(1)}}, ExtReal(0))};
  switch (x.kind()) {
    case K::Real: return {Reference::atoms({real_coord(p)}), FnExpr::table({{p, ExtReal(1)}}, ExtReal(0))};
    case K::Prod: return product_comp(dirac_comp(p.first(), x.left()), dirac_comp(p.second(), x.right()));
    case K::Sum:
      if (p.kind() == Point::Kind::Inl) {
        auto c = dirac_comp(p.inner(), x.left());
        return {Reference::inl(c.ref, x.right()), FnExpr::case_of(c.density, FnExpr::lit(Rational(0)))};
      } else {
        auto c = dirac_comp(p.inner(), x.right());
        return {Reference::inr(x.left(), c.ref), FnExpr::case_of(FnExpr::lit(Rational(0)), c.density)};
      }
    default: break;
  }
  throw NoForm{"atoms on " + x.str()};
}

CompMap table_form(const SpaceExpr& x, const AtomTable& t) {
  CompMap m;
  std::vector<std::pair<Point, ExtReal>> entries;
  for (const auto& [p, w] : t)
    if (!w.is_zero()) entries.emplace_back(p, w);
  if (entries.empty()) return m;
  if (x.is_countable()) {
    add_comp(m, {Reference::count(x), FnExpr::table(entries, ExtReal(0))});
    return m;
  }
  if (x.kind() == SpaceExpr::Kind::Real) {
    std::vector<Rational> xs;
    for (const auto& e : entries) xs.push_back(real_coord(e.first));
    add_comp(m, {Reference::atoms(xs), FnExpr::table(entries, ExtReal(0))});
    return m;
  }
  for (const auto& [p, w] : entries) {
    auto c = dirac_comp(p, x);
    c.density = FnExpr::mul(FnExpr::lit(w), c.density);
    add_comp(m, c);
  }
  return m;
}

CompMap scaled(const CompMap& m, const ExtReal& w) {
  CompMap out;
  if (w.is_zero()) return out;
  for (auto [k, c] : m) {
    if (!(w == ExtReal(1) && w.is_exact())) c.density = FnExpr::mul(FnExpr::lit(w), c.density);
    out.emplace(k, c);
  }
  return out;
}

CompMap product_form(const CompMap& a, const CompMap& b) {
  CompMap out;
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) add_comp(out, product_comp(ca, cb));
  return out;
}

CompMap form(const MeasureExpr& m);

CompMap base_form(const BaseMeasure& b) {
  using K = BaseMeasure::Kind;
  CompMap out;
  switch (b.kind()) {
    case K::Dirac: add_comp(out, dirac_comp(b.point(), b.space())); return out;
    case K::CountingFin: {
      AtomTable t;
      for (const auto pts = b.support_set().finite_points().value(); const auto& p : pts) t.emplace(p, ExtReal(1));
      return table_form(b.space(), t);
    }
    case K::CountingNat:
      add_comp(out, {Reference::count(SpaceExpr::nat()), FnExpr::indicator(b.support_set())});
      return out;
    case K::LebesgueDensity: {
      FnExpr g = b.support().is_full() ? b.density()
                                       : FnExpr::if_set(SetExpr::real(b.support()), b.density(), FnExpr::lit(Rational(0)));
      add_comp(out, {Reference::leb(), g});
      return out;
    }
    case K::Product: return product_form(base_form(b.left()), base_form(b.right()));
  }
  return out;
}

CompMap form(const MeasureExpr& m) {
  using K = MeasureExpr::Kind;
  switch (m.kind()) {
    case K::Zero: return {};
    case K::Base: return base_form(m.base_measure());
    case K::Weighted: return scaled(form(m.child()), m.weight());
    case K::Sum: {
      CompMap out;
      for (const auto& c : m.children())
        for (const auto& [k, comp] : form(c)) add_comp(out, comp);
      return out;
    }
    case K::SeqSum: {
      const SeqSpec& spec = m.seq();
      switch (spec.family) {
        case SeqFamily::ConstantRepeat: return scaled(form(*spec.base), ExtReal::inf());
        case SeqFamily::GeometricWeights:
          return scaled(form(*spec.base), ExtReal::exact(1 / Rational(1 - spec.ratio)));
        case SeqFamily::LebesgueSlices: {
          CompMap out;
          add_comp(out, {Reference::leb(), FnExpr::lit(Rational(1))});
          return out;
        }
        case SeqFamily::None: break;
      }
      if (!spec.length) throw NoForm{"density of an open-ended sequence sum " + spec.text};
      CompMap out;
      for (std::uint64_t n = 0; n < *spec.length; ++n)
        for (const auto& [k, comp] : form(spec.gen(n))) add_comp(out, comp);
      return out;
    }
    case K::Mixture:
    case K::Push: {
      if (m.kind() == K::Push) {
        const FnExpr& f = m.fn();
        if (f.is_id()) return form(m.child());
        if (f.op() == FnOp::InjL || f.op() == FnOp::InjR) {
          CompMap out;
          for (const auto& [k, c] : form(m.child())) {
            if (f.op() == FnOp::InjL)
              add_comp(out, {Reference::inl(c.ref, f.space()), FnExpr::case_of(c.density, FnExpr::lit(Rational(0)))});
            else
              add_comp(out, {Reference::inr(f.space(), c.ref), FnExpr::case_of(FnExpr::lit(Rational(0)), c.density)});
          }
          return out;
        }
      }
      if (auto t = discrete_table(m)) return table_form(m.space(), *t);
      throw NoForm{"density of " + m.str()};
    }
    case K::Reweight: {
      CompMap out;
      for (auto [k, c] : form(m.child())) {
        c.density = FnExpr::mul(c.density, m.fn());
        out.emplace(k, c);
      }
      return out;
    }
    case K::Product: return product_form(form(m.child(0)), form(m.child(1)));
  }
  return {};
}

}  // namespace

std::optional<DensityForm> density_form(const MeasureExpr& m) {
  try {
    auto f = to_form(m.space(), form(m));
    for (auto& c : f.comps) c.density = simplify(c.density, m.space());
    return f;
  } catch (const NoForm&) {
    return std::nullopt;
  }
}

DensityForm require_density_form(const MeasureExpr& m) {
  try {
    auto f = to_form(m.space(), form(m));
    for (auto& c : f.comps) c.density = simplify(c.density, m.space());
    return f;
  } catch (const NoForm& e) {
    fail(Errc::Unsupported, "no density form: " + e.why);
  }
}

MeasureExpr component_measure(const DensityComponent& c) { return MeasureExpr::reweight(c.ref.measure(), c.density); }

MeasureExpr form_measure(const DensityForm& f) {
  if (f.comps.empty()) return MeasureExpr::zero(f.space);
  std::vector<MeasureExpr> parts;
  for (const auto& c : f.comps) parts.push_back(component_measure(c));
  return MeasureExpr::sum(parts);
}

std::string density_form_str(const DensityForm& f) {
  std::string s;
  for (const auto& c : f.comps) {
    if (!s.empty()) s += " + ";
    s += c.density.str() + " d[" + c.ref.key() + "]";
  }
  return s.empty() ? "0" : s;
}

std::pair<DensityForm, DensityForm> align(const DensityForm& a, const DensityForm& b) {
  CompMap ma = to_map(a), mb = to_map(b);
  for (const auto& [k, c] : ma)
    if (!mb.count(k)) mb.emplace(k, DensityComponent{c.ref, FnExpr::lit(Rational(0))});
  for (const auto& [k, c] : mb)
    if (!ma.count(k)) ma.emplace(k, DensityComponent{c.ref, FnExpr::lit(Rational(0))});
  for (auto& [k, c] : ma) {
    Reference r = c.ref.merged(mb.at(k).ref);
    c.ref = r;
    mb.at(k).ref = r;
  }
  return {to_form(a.space, ma), to_form(b.space, mb)};
}

std::vector<SetExpr> decision_regions(const DensityForm& f) {
  std::vector<SetExpr> out;
  SetExpr taken = SetExpr::empty(f.space);
  for (const auto& c : f.comps) {
    SetExpr s = c.ref.support();
    out.push_back(s.minus(taken));
    taken = taken.unite(s);
  }
  return out;
}

SetExpr zero_region(const DensityForm& f) {
  auto regions = decision_regions(f);
  SetExpr covered = SetExpr::empty(f.space);
  SetExpr out = SetExpr::empty(f.space);
  for (std::size_t i = 0; i < f.comps.size(); ++i) {
    auto vc = value_classes(f.comps[i].density, f.space);
    out = out.unite(regions[i].intersect(vc.zero));
    covered = covered.unite(regions[i]);
  }
  return out.unite(covered.complement());
}

SetExpr top_set(const DensityForm& f) {
  struct Classes {
    SetExpr inf, finite_positive;
    int dim;
  };
  std::vector<Classes> cls;
  for (const auto& c : f.comps) {
    auto vc = value_classes(c.density, f.space);
    SetExpr supp = c.ref.support();
    cls.push_back({vc.inf.intersect(supp), supp.minus(vc.zero.unite(vc.inf)), c.ref.dimension()});
  }
  SetExpr top = SetExpr::empty(f.space);
  for (const auto& c : cls) {
    SetExpr t = c.inf;
    if (t.is_empty()) continue;
    for (const auto& a : cls)
      if (a.dim < c.dim) t = t.minus(a.finite_positive);
    top = top.unite(t);
  }
  return top;
}

FnExpr combine_by_region(const DensityForm& f, const std::vector<FnExpr>& per_comp) {
  auto regions = decision_regions(f);
  FnExpr out = FnExpr::lit(Rational(0));
  for (std::size_t i = f.comps.size(); i-- > 0;) {
    if (regions[i].is_empty()) continue;
    out = regions[i].is_full() ? per_comp[i] : FnExpr::if_set(regions[i], per_comp[i], out);
  }
  return out;
}

SetExpr top_zero_infty_set(const MeasureExpr& m) { return top_set(require_density_form(m)); }

const char* measure_class_name(MeasureClass c) {
  switch (c) {
    case MeasureClass::Probability: return "Probability";
    case MeasureClass::Subprobability: return "Subprobability";
    case MeasureClass::Finite: return "Finite";
    case MeasureClass::SigmaFinite: return "SigmaFinite";
    case MeasureClass::SFinite: return "SFinite";
  }
  return "?";
}

bool class_implies(MeasureClass a, MeasureClass b) {
  if (a == MeasureClass::Probability) return true;
  if (b == MeasureClass::Probability) return false;
  // Subprobability, Finite, SigmaFinite, SFinite form a chain.
  return static_cast<int>(a) <= static_cast<int>(b);
}

bool is_zero_measure_on(const MeasureExpr& m, const SetExpr& a, const EvalConfig& cfg) {
  if (a.is_empty()) return true;
  return measure_of(m, a, cfg).value.is_zero();
}

namespace {

bool seq_pieces_finite_disjoint(const MeasureExpr& m, const EvalConfig& cfg) {
  if (m.kind() != MeasureExpr::Kind::SeqSum || !m.seq().disjoint) return false;
  for (std::uint64_t n = 0; n < 16; ++n)
    if (total_mass(m.seq().gen(n), cfg).value.is_inf()) return false;
  return true;
}

}  // namespace

MeasureClass classify_measure(const MeasureExpr& m, const EvalConfig& cfg) {
  EvalResult mass = total_mass(m, cfg);
  if (mass.value.is_finite()) {
    double slack = mass.value.is_exact() ? 0.0 : 10 * cfg.tol;
    double v = mass.value.to_double();
    if ((mass.value.is_exact() && mass.value == ExtReal(1)) || (!mass.value.is_exact() && std::fabs(v - 1) <= slack))
      return MeasureClass::Probability;
    if (mass.value <= ExtReal(1)) return MeasureClass::Subprobability;
    return MeasureClass::Finite;
  }
  if (auto f = density_form(m)) {
    SetExpr top = top_set(*f);
    return is_zero_measure_on(m, top, cfg) ? MeasureClass::SigmaFinite : MeasureClass::SFinite;
  }
  if (seq_pieces_finite_disjoint(m, cfg)) return MeasureClass::SigmaFinite;
  return MeasureClass::SFinite;
}

bool finitely_approximable(const MeasureExpr& m, const SetExpr& a, const EvalConfig& cfg) {
  SetExpr top = top_zero_infty_set(m);
  return is_zero_measure_on(m, a.intersect(top), cfg);
}

OneInftyFactorization factorize_one_infty(const MeasureExpr& m) {
  DensityForm f = require_density_form(m);
  SetExpr top = top_set(f);
  FnExpr zero = FnExpr::lit(Rational(0)), one = FnExpr::lit(Rational(1));
  std::vector<MeasureExpr> parts;
  for (const auto& c : f.comps) {
    auto vc = value_classes(c.density, f.space);
    FnExpr g = top.is_empty() ? c.density : FnExpr::if_set(top, FnExpr::if_set(vc.zero, zero, one), c.density);
    parts.push_back(MeasureExpr::reweight(c.ref.measure(), simplify(g, f.space)));
  }
  MeasureExpr sigma = parts.empty() ? MeasureExpr::zero(f.space) : MeasureExpr::sum(parts);
  FnExpr factor = top.is_empty() ? one : FnExpr::if_set(top, FnExpr::lit_inf(), one);
  return {sigma, factor};
}

}  // namespace sfk
