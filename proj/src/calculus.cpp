#include "sfk/calculus.hpp"

#include <map>

#include "sfk/errors.hpp"

namespace sfk {

namespace {

bool negligible(const EvalResult& r, const EvalConfig& cfg) {
  if (r.value.is_zero()) return true;
  return !r.value.is_exact() && r.value.is_finite() && r.value.to_double() <= 10 * cfg.tol;
}

FnExpr lit(long v) { return FnExpr::lit(Rational(v)); }

// Atom weights, also for measures on finite spaces given only through set evaluation.
std::optional<AtomTable> atoms_of(const MeasureExpr& m, const EvalConfig& cfg) {
  if (auto t = discrete_table(m)) return normalized(*t);
  if (!m.space().is_finite()) return std::nullopt;
  AtomTable t;
  for (const auto& p : enumerate(m.space())) {
    EvalResult r = measure_of(m, SetExpr::singleton(m.space(), p), cfg);
    if (r.mode == EvalMode::Truncated) return std::nullopt;
    if (!r.value.is_zero()) t[p] = r.value;
  }
  return t;
}

ExtReal weight_in(const AtomTable& t, const Point& p) {
  auto it = t.find(p);
  return it == t.end() ? ExtReal(0) : it->second;
}

SetExpr infinite_atoms(const SpaceExpr& space, const AtomTable& t) {
  std::vector<Point> ps;
  for (const auto& [p, w] : t)
    if (w.is_inf()) ps.push_back(p);
  return SetExpr::points(space, ps);
}

MeasureRn discrete_rn(const SpaceExpr& space, const AtomTable& tp, const AtomTable& tn) {
  for (const auto& [p, w] : tp)
    if (weight_in(tn, p).is_zero())
      fail(Errc::NotZeroInftyAbsCont, "reference-null atom " + p.str() + " carries mass " + w.str());
  std::vector<std::pair<Point, ExtReal>> entries;
  for (const auto& [p, w] : tn) {
    ExtReal a = weight_in(tp, p);
    ExtReal d;
    if (w.is_inf()) {
      if (!a.is_zero() && !a.is_inf())
        fail(Errc::NotZeroInftyAbsCont, "0-inf atom " + p.str() + " of the reference carries finite mass " + a.str());
      d = a.is_inf() ? ExtReal(1) : ExtReal(0);
    } else {
      d = ext_div(a, w);
    }
    if (!d.is_zero()) entries.emplace_back(p, d);
  }
  return {FnExpr::table(entries, ExtReal(0)), infinite_atoms(space, tn)};
}

MeasureExpr restrict(const MeasureExpr& k, const SetExpr& s, const EvalConfig& cfg) {
  if (s.is_empty() || negligible(measure_of(k, s, cfg), cfg)) return MeasureExpr::zero(k.space());
  if (s.is_full()) return k;
  return MeasureExpr::reweight(k, FnExpr::indicator(s));
}

class MarginalDensity : public FnExternal {
 public:
  MarginalDensity(FnExpr joint, SpaceExpr space, MeasureExpr inner_ref, EvalConfig cfg)
      : joint_(std::move(joint)), space_(std::move(space)), ref_(std::move(inner_ref)), cfg_(cfg) {}

  Point apply(const Point& y) const override {
    return Point::weight(integrate(ref_, section(joint_, space_, y), cfg_).value);
  }
  std::string str() const override {
    return "(marginal-density " + joint_.str() + " " + space_.str() + " " + ref_.str() + ")";
  }
  SpaceExpr codomain(const SpaceExpr&) const override { return SpaceExpr::ext(); }
  bool total() const override { return true; }

 private:
  FnExpr joint_;
  SpaceExpr space_;
  MeasureExpr ref_;
  EvalConfig cfg_;
};

template <class T>
std::vector<std::pair<Point, T>> zip_rows(const std::vector<std::pair<Point, MeasureExpr>>& rows,
                                          const std::vector<T>& vals) {
  std::vector<std::pair<Point, T>> out;
  for (std::size_t i = 0; i < rows.size(); ++i) out.emplace_back(rows[i].first, vals[i]);
  return out;
}

KernelExpr table_kernel(const SpaceExpr& dom, const SpaceExpr& cod, std::vector<std::pair<Point, MeasureExpr>> rows,
                        const std::string& text) {
  auto table = std::make_shared<std::vector<std::pair<Point, MeasureExpr>>>(std::move(rows));
  auto spec = std::make_shared<KernelFnSpec>();
  spec->at = [table, cod](const Point& x) {
    for (const auto& [p, m] : *table)
      if (p == x) return m;
    return MeasureExpr::zero(cod);
  };
  spec->text = text;
  return KernelExpr::from_fn(dom, cod, spec);
}

void require_same(const SpaceExpr& a, const SpaceExpr& b, const char* what) {
  if (!(a == b)) fail(Errc::TypeMismatch, std::string(what) + ": " + a.str() + " vs " + b.str());
}

}  // namespace

FnExpr marginal_density(const FnExpr& joint, const SpaceExpr& space, const MeasureExpr& inner_ref, const EvalConfig& cfg) {
  return FnExpr::external(std::make_shared<MarginalDensity>(joint, space, inner_ref, cfg));
}

MeasureRn rn_derivative(const MeasureExpr& nu_prime, const MeasureExpr& nu, const EvalConfig& cfg) {
  require_same(nu_prime.space(), nu.space(), "derivative spaces");
  const SpaceExpr& y = nu.space();
  if (nu_prime.str() == nu.str()) return {FnExpr::lit(Rational(1)), top_zero_infty_set(nu)};
  auto tp = discrete_table(nu_prime);
  auto tn = discrete_table(nu);
  if (tp && tn) return discrete_rn(y, normalized(*tp), normalized(*tn));
  if (!measure_abs_continuous(nu_prime, nu, AbsMode::ZeroInfty, cfg))
    fail(Errc::NotZeroInftyAbsCont, nu_prime.str() + " is not 0-inf-absolutely continuous w.r.t. " + nu.str());
  auto [ap, an] = align(require_density_form(nu_prime), require_density_form(nu));
  std::vector<FnExpr> per;
  for (std::size_t i = 0; i < an.comps.size(); ++i) {
    const FnExpr& gp = ap.comps[i].density;
    const FnExpr& g = an.comps[i].density;
    auto vg = value_classes(g, y);
    auto vp = value_classes(gp, y);
    per.push_back(FnExpr::if_set(vg.inf, FnExpr::if_set(vp.zero, lit(0), lit(1)), FnExpr::div(gp, g)));
  }
  return {simplify(combine_by_region(an, per), y), top_set(an)};
}

RnResult rn_derivative(const KernelExpr& nu_prime, const KernelExpr& nu, const EvalConfig& cfg) {
  require_same(nu_prime.dom(), nu.dom(), "derivative domains");
  require_same(nu_prime.cod(), nu.cod(), "derivative codomains");
  SpaceExpr xy = SpaceExpr::prod(nu.dom(), nu.cod());
  auto top = [&](const KernelExpr& k) -> SetExpr {
    if (auto m = constant_measure(k)) return SetExpr::rect(SetExpr::full(k.dom()), top_zero_infty_set(*m));
    if (auto rows = finite_rows(k)) {
      std::vector<std::pair<Point, SetExpr>> ts;
      for (const auto& [x, m] : *rows) ts.emplace_back(x, top_zero_infty_set(m));
      return lift_set(k.dom(), k.cod(), ts);
    }
    return SetExpr::empty(xy);
  };
  std::string ns = nu.str();
  if (nu_prime.str() == ns) return {FnExpr::lit(Rational(1)), top(nu)};
  if (nu_prime.kind() == KernelExpr::Kind::Score && nu_prime.child().str() == ns) return {nu_prime.fn(), top(nu)};
  auto mp = constant_measure(nu_prime);
  auto mn = constant_measure(nu);
  if (mp && mn) {
    auto r = rn_derivative(*mp, *mn, cfg);
    return {FnExpr::compose(r.derivative, FnExpr::proj2()), SetExpr::rect(SetExpr::full(nu.dom()), r.infty_region)};
  }
  auto rp = finite_rows(nu_prime);
  auto rn = finite_rows(nu);
  if (!rp || !rn) fail(Errc::Unsupported, "derivative of " + nu_prime.str() + " w.r.t. " + ns);
  std::vector<FnExpr> ds;
  std::vector<SetExpr> ts;
  for (std::size_t i = 0; i < rn->size(); ++i) {
    auto r = rn_derivative((*rp)[i].second, (*rn)[i].second, cfg);
    ds.push_back(r.derivative);
    ts.push_back(r.infty_region);
  }
  return {lift_fn(nu.dom(), nu.cod(), zip_rows(*rn, ds)), lift_set(nu.dom(), nu.cod(), zip_rows(*rn, ts))};
}

bool rn_equal(const FnExpr& f, const FnExpr& g, const MeasureExpr& nu, const EvalConfig& cfg) {
  if (f == g) return true;
  const SpaceExpr& y = nu.space();
  if (auto t = atoms_of(nu, cfg)) {
    for (const auto& [p, w] : *t) {
      if (w.is_zero()) continue;
      ExtReal a = eval_weight(f, p);
      ExtReal b = eval_weight(g, p);
      if (w.is_inf() ? (a.is_zero() != b.is_zero()) : !(a == b)) return false;
    }
    return true;
  }
  auto cf = constant_pieces(f, y);
  auto cg = constant_pieces(g, y);
  if (!cf || !cg) fail(Errc::Unsupported, "a.e. comparison of " + f.str() + " and " + g.str());
  SetExpr differ = SetExpr::empty(y), zf = SetExpr::empty(y), zg = SetExpr::empty(y);
  for (const auto& [p, v] : *cf) {
    if (v.is_zero()) zf = zf.unite(p);
    for (const auto& [q, u] : *cg)
      if (!(v == u)) differ = differ.unite(p.intersect(q));
  }
  for (const auto& [q, u] : *cg)
    if (u.is_zero()) zg = zg.unite(q);
  SetExpr top = top_zero_infty_set(nu);
  return negligible(measure_of(nu, differ.minus(top), cfg), cfg) &&
         negligible(measure_of(nu, zg.minus(zf).intersect(top), cfg), cfg) &&
         negligible(measure_of(nu, zf.minus(zg).intersect(top), cfg), cfg);
}

bool rn_equal(const FnExpr& f, const FnExpr& g, const KernelExpr& nu, const EvalConfig& cfg) {
  if (f == g) return true;
  SpaceExpr xy = SpaceExpr::prod(nu.dom(), nu.cod());
  if (auto m = constant_measure(nu)) {
    auto df = drop_first(f);
    auto dg = drop_first(g);
    if (df && dg) return rn_equal(simplify(*df, nu.cod()), simplify(*dg, nu.cod()), *m, cfg);
  }
  auto rows = finite_rows(nu);
  if (!rows) fail(Errc::Unsupported, "a.e. comparison against " + nu.str());
  for (const auto& [x, m] : *rows)
    if (!rn_equal(section(f, xy, x), section(g, xy, x), m, cfg)) return false;
  return true;
}

MeasureParts lebesgue_decompose(const MeasureExpr& k, const MeasureExpr& l, const EvalConfig& cfg) {
  require_same(k.space(), l.space(), "decomposition spaces");
  auto [ak, al] = align(require_density_form(k), require_density_form(l));
  SetExpr s_sing = zero_region(al);
  SetExpr s_inf = top_set(al).minus(top_set(ak)).minus(s_sing);
  SetExpr s_abs = s_sing.unite(s_inf).complement();
  MeasureParts p{restrict(k, s_abs, cfg), restrict(k, s_inf, cfg), restrict(k, s_sing, cfg), s_sing, s_inf};
  if (p.inf_singular.kind() == MeasureExpr::Kind::Zero && p.singular.kind() == MeasureExpr::Kind::Zero) p.abs_cont = k;
  return p;
}

LebesgueParts lebesgue_decompose(const KernelExpr& k, const KernelExpr& l, const EvalConfig& cfg) {
  require_same(k.dom(), l.dom(), "decomposition domains");
  require_same(k.cod(), l.cod(), "decomposition codomains");
  const SpaceExpr& x = k.dom();
  auto mk = constant_measure(k);
  auto ml = constant_measure(l);
  if (mk && ml) {
    auto p = lebesgue_decompose(*mk, *ml, cfg);
    SetExpr full = SetExpr::full(x);
    return {KernelExpr::constant(p.abs_cont, x), KernelExpr::constant(p.inf_singular, x),
            KernelExpr::constant(p.singular, x), SetExpr::rect(full, p.singular_witness),
            SetExpr::rect(full, p.inf_region)};
  }
  auto rk = finite_rows(k);
  auto rl = finite_rows(l);
  if (!rk || !rl) fail(Errc::Unsupported, "decomposition of " + k.str() + " against " + l.str());
  std::vector<std::pair<Point, MeasureExpr>> a, i, s;
  std::vector<std::pair<Point, SetExpr>> ws, wi;
  for (std::size_t n = 0; n < rk->size(); ++n) {
    const Point& p = (*rk)[n].first;
    auto parts = lebesgue_decompose((*rk)[n].second, (*rl)[n].second, cfg);
    a.emplace_back(p, parts.abs_cont);
    i.emplace_back(p, parts.inf_singular);
    s.emplace_back(p, parts.singular);
    ws.emplace_back(p, parts.singular_witness);
    wi.emplace_back(p, parts.inf_region);
  }
  std::string tail = " " + k.str() + " " + l.str() + ")";
  return {table_kernel(x, k.cod(), a, "(abs-cont-part" + tail), table_kernel(x, k.cod(), i, "(inf-singular-part" + tail),
          table_kernel(x, k.cod(), s, "(singular-part" + tail), lift_set(x, k.cod(), ws), lift_set(x, k.cod(), wi)};
}

bool inf_singular(const MeasureExpr& k, const MeasureExpr& l, const EvalConfig& cfg) {
  if (!measure_abs_continuous(k, l, AbsMode::Plain, cfg)) return false;
  if (!negligible(measure_of(k, top_zero_infty_set(k), cfg), cfg)) return false;
  return negligible(measure_of(k, top_zero_infty_set(l).complement(), cfg), cfg);
}

Disintegration disintegrate(const MeasureExpr& mu, const MeasureExpr& nu, const FnExpr& phi, const EvalConfig& cfg) {
  const SpaceExpr& x = mu.space();
  const SpaceExpr& y = nu.space();
  require_same(codomain(phi, x), y, "disintegration map");
  auto tm = atoms_of(mu, cfg);
  auto tn = tm ? atoms_of(nu, cfg) : std::nullopt;
  if (tm && tn) {
    std::vector<std::pair<Point, ExtReal>> entries;
    std::vector<Point> support;
    for (const auto& [p, w] : *tm) {
      Point v = eval_fn(phi, p);
      if (v.is_bottom()) fail(Errc::Unsupported, "map undefined at charged point " + p.str());
      ExtReal n = weight_in(*tn, v);
      if (n.is_zero()) fail(Errc::NotAbsCont, "pushforward charges " + v.str() + " where the marginal is null");
      ExtReal e;
      if (n.is_inf()) {
        if (w.is_finite())
          fail(Errc::InftyCompatibilityFailed, "finite mass at " + p.str() + " over the 0-inf point " + v.str());
        e = ExtReal(1);
      } else {
        e = ext_div(w, n);
      }
      entries.emplace_back(Point::pair(v, p), e);
      support.push_back(p);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto ref = KernelExpr::constant(counting_fin(SetExpr::points(x, support)), y);
    return {KernelExpr::score(ref, FnExpr::table(entries, ExtReal(0))),
            "fibres: " + std::to_string(entries.size()) + " charged atoms, each weighted only at y = phi(x)", true};
  }

  // Infinity compatibility: mu(phi^-1(top(nu)) \ top(mu)) = 0.
  std::optional<SetExpr> top_nu;
  if (auto t = atoms_of(nu, cfg)) top_nu = infinite_atoms(y, *t);
  else if (auto f = density_form(nu)) top_nu = top_set(*f);
  else if (total_mass(mu, cfg).value.is_finite()) top_nu = SetExpr::empty(y);
  if (!top_nu) fail(Errc::Unsupported, "top 0-inf-set of " + nu.str());
  auto pre = try_preimage(phi, x, *top_nu);
  if (!pre) fail(Errc::Unsupported, "preimage of the top set under " + phi.str());
  if (!negligible(measure_of(mu, pre->minus(top_zero_infty_set(mu)), cfg), cfg))
    fail(Errc::InftyCompatibilityFailed, "mu charges the preimage of nu's top 0-inf-set outside its own");

  if (x.kind() != SpaceExpr::Kind::Prod || phi.op() != FnOp::Proj1 || !(x.left() == y))
    fail(Errc::Unsupported, "continuous disintegration needs X = Y*X' and phi = proj1");
  auto fm = require_density_form(mu);
  if (fm.comps.size() != 1 || fm.comps[0].ref.kind() != Reference::Kind::Prod)
    fail(Errc::Unsupported, "joint " + mu.str() + " is not a single product density");
  const Reference& ref = fm.comps[0].ref;
  const FnExpr& p = fm.comps[0].density;
  FnExpr n;
  bool own_marginal = nu.kind() == MeasureExpr::Kind::Push && nu.fn().op() == FnOp::Proj1 && nu.child().str() == mu.str();
  if (own_marginal) {
    n = marginal_density(p, x, ref.right().measure(), cfg);
  } else {
    auto fn = require_density_form(nu);
    if (fn.comps.size() != 1 || fn.comps[0].ref.key() != ref.left().key())
      fail(Errc::Unsupported, "marginal " + nu.str() + " not on the joint's first reference");
    auto vc = value_classes(fn.comps[0].density, y);
    if (!negligible(measure_of(mu, SetExpr::rect(vc.zero, SetExpr::full(x.right())), cfg), cfg))
      fail(Errc::NotAbsCont, "joint charges the marginal's null set");
    n = FnExpr::if_set(vc.inf, lit(1), fn.comps[0].density);
  }
  FnExpr ratio = FnExpr::div(p, FnExpr::compose(n, FnExpr::proj1()));
  SpaceExpr yy = SpaceExpr::prod(y, y);
  FnExpr at = FnExpr::compose(ratio, FnExpr::pair(FnExpr::compose(FnExpr::proj1(), FnExpr::proj1()), FnExpr::proj2()));
  auto fibre = KernelExpr::score(KernelExpr::constant(ref.right().measure(), yy), at);
  return {KernelExpr::prod_l(KernelExpr::det(FnExpr::id(), y), fibre),
          "fibres: kernel(y) = dirac(y) x conditional density, supported on {y} x X'", false};
}

Disintegration disintegrate(const KernelExpr& mu, const KernelExpr& nu, const FnExpr& phi, const EvalConfig& cfg) {
  require_same(mu.dom(), nu.dom(), "disintegration parameter spaces");
  const SpaceExpr& z = mu.dom();
  SpaceExpr zy = SpaceExpr::prod(z, nu.cod());
  auto mm = constant_measure(mu);
  auto mn = constant_measure(nu);
  if (mm && mn) {
    auto d = disintegrate(*mm, *mn, phi, cfg);
    return {KernelExpr::pull(FnExpr::proj2(), d.kernel, zy), d.support_check, d.exact};
  }
  auto rm = finite_rows(mu);
  auto rn = finite_rows(nu);
  if (!rm || !rn) fail(Errc::Unsupported, "disintegration of " + mu.str());
  auto per = std::make_shared<std::map<Point, KernelExpr>>();
  bool exact = true;
  std::string check;
  for (std::size_t i = 0; i < rm->size(); ++i) {
    auto d = disintegrate((*rm)[i].second, (*rn)[i].second, phi, cfg);
    per->emplace((*rm)[i].first, d.kernel);
    exact = exact && d.exact;
    check = d.support_check;
  }
  auto spec = std::make_shared<KernelFnSpec>();
  SpaceExpr x = mu.cod();
  spec->at = [per, x](const Point& p) {
    auto it = per->find(p.first());
    return it == per->end() ? MeasureExpr::zero(x) : eval_kernel(it->second, p.second());
  };
  spec->text = "(disintegration " + mu.str() + " " + nu.str() + " " + phi.str() + ")";
  return {KernelExpr::from_fn(zy, x, spec), check, exact};
}

}  // namespace sfk
