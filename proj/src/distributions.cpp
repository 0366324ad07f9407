#include <cmath>

#include "sfk/errors.hpp"
#include "sfk/measure.hpp"

namespace sfk {

namespace {

std::string num(double d) { return double_str(d); }

Rational to_q(double d) {
  if (!std::isfinite(d)) fail(Errc::NumericDomain, "non-finite distribution parameter");
  return Rational(d);
}

ExtReal pow_exact(const ExtReal& base, std::uint64_t k) {
  ExtReal r(1);
  for (std::uint64_t i = 0; i < k; ++i) r = r * base;
  return r;
}

}  // namespace

MeasureExpr dirac(const Point& p, const SpaceExpr& space) { return MeasureExpr::base(BaseMeasure::dirac(p, space)); }

MeasureExpr lebesgue() { return lebesgue(RealSet::full()); }

MeasureExpr lebesgue(const RealSet& support) {
  return MeasureExpr::base(BaseMeasure::lebesgue_density(support, FnExpr::lit(Rational(1))));
}

MeasureExpr lebesgue_on(const Rational& a, const Rational& b) { return lebesgue(RealSet::closed(a, b)); }

MeasureExpr uniform(const Rational& a, const Rational& b) {
  if (!(a < b)) fail(Errc::NumericDomain, "uniform needs a < b");
  Rational d = 1 / Rational(b - a);
  return density_measure(RealSet::closed(a, b), FnExpr::lit(d))
      .labelled("(uniform " + rational_str(a) + " " + rational_str(b) + ")")
      .with_mass(ExtReal(1))
      .with_family({"uniform", {a.get_d(), b.get_d()}});
}

MeasureExpr normal(double mean, double sd) {
  if (!(sd > 0)) fail(Errc::NumericDomain, "normal needs sd > 0");
  auto g = FnExpr::pdf_normal(FnExpr::id(), FnExpr::lit(to_q(mean)), FnExpr::lit(to_q(sd)));
  return density_measure(RealSet::full(), g)
      .labelled("(normal " + num(mean) + " " + num(sd) + ")")
      .with_mass(ExtReal(1))
      .with_family({"normal", {mean, sd}});
}

MeasureExpr beta_dist(double a, double b) {
  if (!(a > 0 && b > 0)) fail(Errc::NumericDomain, "beta needs positive shapes");
  auto g = FnExpr::pdf_beta(FnExpr::id(), FnExpr::lit(to_q(a)), FnExpr::lit(to_q(b)));
  return density_measure(RealSet::closed(0, 1), g)
      .labelled("(beta " + num(a) + " " + num(b) + ")")
      .with_mass(ExtReal(1))
      .with_family({"beta", {a, b}});
}

MeasureExpr bernoulli(const ExtReal& p) {
  if (!p.is_finite() || p > ExtReal(1)) fail(Errc::NumericDomain, "bernoulli needs p in [0,1]");
  auto nat = SpaceExpr::nat();
  return categorical(nat, {{Point::nat(0), ext_sub(ExtReal(1), p)}, {Point::nat(1), p}})
      .labelled("(bernoulli " + p.str() + ")")
      .with_mass(ExtReal(1))
      .with_family({"bernoulli", {p.to_double()}});
}

MeasureExpr binomial(std::uint64_t n, const ExtReal& p) {
  if (!p.is_finite() || p > ExtReal(1)) fail(Errc::NumericDomain, "binomial needs p in [0,1]");
  ExtReal q = ext_sub(ExtReal(1), p);
  std::vector<std::pair<Point, ExtReal>> w;
  for (std::uint64_t k = 0; k <= n; ++k) {
    mpz_class c;
    mpz_bin_uiui(c.get_mpz_t(), n, k);
    ExtReal v = ExtReal::exact(Rational(c)) * pow_exact(p, k) * pow_exact(q, n - k);
    w.emplace_back(Point::nat(k), v);
  }
  return categorical(SpaceExpr::nat(), w)
      .labelled("(binomial " + std::to_string(n) + " " + p.str() + ")")
      .with_mass(ExtReal(1))
      .with_family({"binomial", {static_cast<double>(n), p.to_double()}});
}

MeasureExpr poisson(double rate) {
  if (!(rate > 0) || !std::isfinite(rate)) fail(Errc::NumericDomain, "poisson needs a positive rate");
  auto g = FnExpr::pmf_poisson(FnExpr::id(), FnExpr::lit(to_q(rate)));
  return MeasureExpr::reweight(counting_nat(), g)
      .labelled("(poisson " + num(rate) + ")")
      .with_mass(ExtReal(1))
      .with_family({"poisson", {rate}});
}

MeasureExpr counting_nat(const SetExpr& support) { return MeasureExpr::base(BaseMeasure::counting_nat(support)); }

MeasureExpr counting_nat() { return counting_nat(SetExpr::full(SpaceExpr::nat())).with_mass(ExtReal::inf()); }

MeasureExpr counting_fin(const SetExpr& support) { return MeasureExpr::base(BaseMeasure::counting_fin(support)); }

MeasureExpr counting(const SpaceExpr& space) {
  using K = SpaceExpr::Kind;
  switch (space.kind()) {
    case K::Unit:
    case K::Fin: return counting_fin(SetExpr::full(space));
    case K::Nat: return counting_nat();
    case K::Prod:
      return MeasureExpr::product(counting(space.left()), counting(space.right())).labelled("(counting " + space.str() + ")");
    case K::Sum:
      return MeasureExpr::sum({MeasureExpr::push(counting(space.left()), FnExpr::inj_l(space.right())),
                               MeasureExpr::push(counting(space.right()), FnExpr::inj_r(space.left()))})
          .labelled("(counting " + space.str() + ")");
    default: break;
  }
  fail(Errc::Unsupported, "no counting measure on " + space.str());
}

MeasureExpr density_measure(const RealSet& support, const FnExpr& g) {
  return MeasureExpr::base(BaseMeasure::lebesgue_density(support, g));
}

MeasureExpr seq_constant_repeat(const MeasureExpr& m) {
  auto spec = std::make_shared<SeqSpec>();
  spec->gen = [m](std::uint64_t) { return m; };
  spec->tail = [m](const SetExpr* a, std::uint64_t) {
    ExtReal v = a ? measure_of(m, *a).value : total_mass(m).value;
    return v.is_zero() ? ExtReal(0) : ExtReal::inf();
  };
  spec->family = SeqFamily::ConstantRepeat;
  spec->base = std::make_shared<MeasureExpr>(m);
  spec->text = "(seqsum constant-repeat " + m.str() + ")";
  return MeasureExpr::seq_sum(m.space(), spec);
}

MeasureExpr seq_geometric(const Rational& r, const MeasureExpr& m) {
  if (r < 0 || r >= 1) fail(Errc::NumericDomain, "geometric weights need 0 <= r < 1");
  auto spec = std::make_shared<SeqSpec>();
  spec->gen = [r, m](std::uint64_t n) { return MeasureExpr::weighted(pow_exact(ExtReal::exact(r), n), m); };
  spec->tail = [r, m](const SetExpr* a, std::uint64_t n) {
    ExtReal v = a ? measure_of(m, *a).value : total_mass(m).value;
    return pow_exact(ExtReal::exact(r), n) * ext_div(v, ExtReal::exact(1 - r));
  };
  spec->family = SeqFamily::GeometricWeights;
  spec->base = std::make_shared<MeasureExpr>(m);
  spec->ratio = r;
  spec->text = "(seqsum geometric-weights " + rational_str(r) + " " + m.str() + ")";
  return MeasureExpr::seq_sum(m.space(), spec);
}

namespace {

// Slice n covers [n/2, n/2+1) for even n and [-(n+1)/2, -(n+1)/2+1) for odd n.
RealSet lebesgue_slice(std::uint64_t n) {
  Rational lo = (n % 2 == 0) ? Rational(static_cast<long>(n / 2)) : Rational(-static_cast<long>((n + 1) / 2));
  return RealSet::interval(lo, Rational(lo + 1), true, false);
}

// Union of slices 0..n-1 is [-floor(n/2), ceil(n/2)).
RealSet lebesgue_covered(std::uint64_t n) {
  if (n == 0) return RealSet::empty();
  return RealSet::interval(Rational(-static_cast<long>(n / 2)), Rational(static_cast<long>((n + 1) / 2)), true, false);
}

}  // namespace

MeasureExpr seq_lebesgue_slices() {
  auto spec = std::make_shared<SeqSpec>();
  spec->gen = [](std::uint64_t n) { return lebesgue(lebesgue_slice(n)); };
  spec->tail = [](const SetExpr* a, std::uint64_t n) {
    RealSet rest = lebesgue_covered(n).complement();
    if (a) rest = rest.intersect(a->real_set());
    return rest.length();
  };
  spec->family = SeqFamily::LebesgueSlices;
  spec->disjoint = true;
  spec->text = "(seqsum lebesgue-slices)";
  return MeasureExpr::seq_sum(SpaceExpr::real(), spec).with_mass(ExtReal::inf());
}

MeasureExpr seq_generated(const SpaceExpr& space, std::function<MeasureExpr(std::uint64_t)> gen,
                          std::function<ExtReal(const SetExpr*, std::uint64_t)> tail, std::string text, bool disjoint,
                          std::optional<std::uint64_t> length) {
  auto spec = std::make_shared<SeqSpec>();
  spec->gen = std::move(gen);
  spec->tail = std::move(tail);
  spec->text = std::move(text);
  spec->disjoint = disjoint;
  spec->length = length;
  return MeasureExpr::seq_sum(space, spec);
}

MeasureExpr categorical(const SpaceExpr& space, const std::vector<std::pair<Point, ExtReal>>& weights) {
  std::vector<MeasureExpr> parts;
  for (const auto& [p, w] : weights) {
    if (w.is_zero()) continue;
    auto d = dirac(p, space);
    parts.push_back(w == ExtReal(1) && w.is_exact() ? d : MeasureExpr::weighted(w, d));
  }
  if (parts.empty()) return MeasureExpr::zero(space);
  return MeasureExpr::sum(parts);
}

}  // namespace sfk
