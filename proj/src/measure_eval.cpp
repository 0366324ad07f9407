#include <algorithm>
#include <cmath>

#include "sfk/errors.hpp"
#include "sfk/measure.hpp"
#include "sfk/quadrature.hpp"

namespace sfk {

namespace {

constexpr std::size_t kMaxPieces = 64;

void note_quad(const QuadResult& r, EvalCtx& ctx) {
  ctx.error += r.error;
  if (!r.value.is_exact()) ctx.truncated = true;
}

std::vector<double> merge_hints(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

ExtReal lebesgue_integral(const RealSet& region, const FnExpr& g, const Integrand* f, EvalCtx& ctx) {
  if (region.intervals().empty()) return ExtReal(0);
  std::optional<FnExpr> h;
  if (!f) h = g;
  else if (f->fn) h = FnExpr::mul(g, *f->fn);
  if (h) {
    auto real = SpaceExpr::real();
    if (auto pieces = constant_pieces(simplify(*h, real), real); pieces && pieces->size() <= kMaxPieces) {
      ExtReal acc(0);
      for (const auto& [set, v] : *pieces) acc += v * set.real_set().intersect(region).length();
      return acc;
    }
  }
  std::vector<double> hints = real_breakpoints(g);
  if (f && f->fn) hints = merge_hints(hints, real_breakpoints(*f->fn));
  auto sample = [&](double x) {
    Point p = Point::real(x);
    ExtReal gv = eval_weight(g, p);
    if (gv.is_zero()) return ExtReal(0);
    return f ? gv * f->at(p) : gv;
  };
  QuadResult r = integrate_lebesgue(sample, region, hints, QuadOptions{ctx.cfg.tol});
  note_quad(r, ctx);
  return r.value;
}

// Sum over an infinite set of naturals with a heuristic tail cut.
ExtReal nat_series(const SetExpr& s, const std::function<ExtReal(std::uint64_t)>& term, EvalCtx& ctx) {
  const double small = ctx.cfg.tol * 1e-3;
  ExtReal acc(0);
  std::uint64_t last_big = 0;
  bool any = false;
  for (std::uint64_t n = 0; n < ctx.cfg.max_terms; ++n) {
    if (!s.member(Point::nat(n))) continue;
    ExtReal t = term(n);
    acc += t;
    if (acc.is_inf()) return acc;
    if (!t.is_zero()) any = true;
    if (t.to_double() >= small) last_big = n;
    if (any && t.to_double() < small && n > 2 * last_big + 32) {
      ctx.truncated = true;
      ctx.error += small * 32;
      return acc.is_exact() ? ExtReal::approx(acc.to_double()) : acc;
    }
    if (acc.to_double() > 1.0 / ctx.cfg.tol && n > 1000) {
      ctx.diverged = true;
      return ExtReal::inf();
    }
  }
  ctx.truncated = true;
  ctx.error = std::numeric_limits<double>::infinity();
  return acc;
}

ExtReal cardinality(const SetExpr& s) {
  if (auto pts = s.finite_points()) return ExtReal(static_cast<int>(pts->size()));
  return ExtReal::inf();
}

ExtReal base_measure_of(const BaseMeasure& b, const SetExpr& a, EvalCtx& ctx) {
  using K = BaseMeasure::Kind;
  switch (b.kind()) {
    case K::Dirac: return a.member(b.point()) ? ExtReal(1) : ExtReal(0);
    case K::CountingFin: {
      int c = 0;
      for (const auto pts = b.support_set().finite_points().value(); const auto& p : pts)
        if (a.member(p)) ++c;
      return ExtReal(c);
    }
    case K::CountingNat: return cardinality(b.support_set().intersect(a));
    case K::LebesgueDensity:
      return lebesgue_integral(b.support().intersect(a.real_set()), b.density(), nullptr, ctx);
    case K::Product: {
      ExtReal acc(0);
      for (const auto& c : a.cells()) {
        ExtReal first = base_measure_of(b.left(), *c.first, ctx);
        if (first.is_zero()) continue;
        acc += first * base_measure_of(b.right(), *c.second, ctx);
      }
      return acc;
    }
  }
  return ExtReal(0);
}

Integrand section_of(const Integrand& f, const Point& x, const SpaceExpr& right) {
  if (f.fn) return Integrand::of(section(*f.fn, f.space, x), right);
  auto cb = f.cb;
  return Integrand::of([cb, x](const Point& y) { return cb(Point::pair(x, y)); }, right);
}

ExtReal base_integrate(const BaseMeasure& b, const Integrand& f, EvalCtx& ctx) {
  using K = BaseMeasure::Kind;
  switch (b.kind()) {
    case K::Dirac: return f.at(b.point());
    case K::CountingFin: {
      ExtReal acc(0);
      for (const auto pts = b.support_set().finite_points().value(); const auto& p : pts) acc += f.at(p);
      return acc;
    }
    case K::CountingNat: {
      SetExpr s = b.support_set();
      if (f.fn) {
        auto vc = value_classes(*f.fn, SpaceExpr::nat());
        s = s.minus(vc.zero);
      }
      if (auto pts = s.finite_points()) {
        ExtReal acc(0);
        for (const auto& p : *pts) acc += f.at(p);
        return acc;
      }
      return nat_series(s, [&](std::uint64_t n) { return f.at(Point::nat(n)); }, ctx);
    }
    case K::LebesgueDensity: return lebesgue_integral(b.support(), b.density(), &f, ctx);
    case K::Product: {
      const BaseMeasure& inner = b.right();
      auto outer = Integrand::of(
          [&](const Point& x) { return base_integrate(inner, section_of(f, x, inner.space()), ctx); }, b.left().space());
      return base_integrate(b.left(), outer, ctx);
    }
  }
  return ExtReal(0);
}

ExtReal seq_series(const SeqSpec& spec, const SetExpr* a, const std::function<ExtReal(const MeasureExpr&)>& term,
                   EvalCtx& ctx) {
  ExtReal acc(0);
  ExtReal half(0);
  for (std::uint64_t n = 0;; ++n) {
    if (spec.length && n >= *spec.length) return acc;
    if (n == ctx.cfg.max_terms / 2) half = acc;
    acc += term(spec.gen(n));
    if (acc.is_inf()) return acc;
    ExtReal t = spec.tail(a, n + 1);
    if (t.is_zero()) return acc;
    if (t.is_finite() && t.to_double() <= ctx.cfg.tol) {
      ctx.truncated = true;
      ctx.error += t.to_double();
      return acc;
    }
    if (n + 1 >= ctx.cfg.max_terms) {
      // Without a finite tail bound, growth over the second half of the terms counts as divergence.
      if (t.is_inf() && (acc.to_double() > 1.0 / ctx.cfg.tol || acc.to_double() - half.to_double() > ctx.cfg.tol)) {
        ctx.diverged = true;
        return ExtReal::inf();
      }
      ctx.truncated = true;
      ctx.error += t.to_double();
      return acc;
    }
  }
}

}  // namespace

ExtReal measure_of(const MeasureExpr& m, const SetExpr& a, EvalCtx& ctx) {
  using K = MeasureExpr::Kind;
  if (!(a.space() == m.space()))
    fail(Errc::TypeMismatch, "set on " + a.space().str() + " for a measure on " + m.space().str());
  if (a.is_empty()) return ExtReal(0);
  if (m.mass_hint() && a.is_full()) return *m.mass_hint();
  switch (m.kind()) {
    case K::Zero: return ExtReal(0);
    case K::Base: return base_measure_of(m.base_measure(), a, ctx);
    case K::Weighted: {
      ExtReal v = measure_of(m.child(), a, ctx);
      return m.weight() * v;
    }
    case K::Sum: {
      ExtReal acc(0);
      for (const auto& c : m.children()) acc += measure_of(c, a, ctx);
      return acc;
    }
    case K::SeqSum: {
      const SeqSpec& spec = m.seq();
      switch (spec.family) {
        case SeqFamily::ConstantRepeat: {
          ExtReal v = measure_of(*spec.base, a, ctx);
          if (v.is_zero()) return ExtReal(0);
          ctx.diverged = true;
          return ExtReal::inf();
        }
        case SeqFamily::GeometricWeights:
          return measure_of(*spec.base, a, ctx) * ExtReal::exact(1 / Rational(1 - spec.ratio));
        case SeqFamily::LebesgueSlices: return a.real_set().length();
        case SeqFamily::None: break;
      }
      return seq_series(spec, &a, [&](const MeasureExpr& piece) { return measure_of(piece, a, ctx); }, ctx);
    }
    case K::Mixture: {
      const MixSpec& mix = m.mix();
      auto cb = [&](const Point& y) { return measure_of(mix.at(y), a, ctx); };
      return integrate(m.child(), Integrand::of(cb, m.child().space()), ctx);
    }
    case K::Push: {
      const SpaceExpr& dom = m.child().space();
      if (auto pre = try_preimage(m.fn(), dom, a)) return measure_of(m.child(), *pre, ctx);
      const FnExpr& f = m.fn();
      auto cb = [&](const Point& y) {
        Point v = eval_fn(f, y);
        return (!v.is_bottom() && a.member(v)) ? ExtReal(1) : ExtReal(0);
      };
      return integrate(m.child(), Integrand::of(cb, dom), ctx);
    }
    case K::Reweight: {
      FnExpr f = a.is_full() ? m.fn() : FnExpr::mul(m.fn(), FnExpr::indicator(a));
      return integrate(m.child(), Integrand::of(f, m.space()), ctx);
    }
    case K::Product: {
      ExtReal acc(0);
      for (const auto& c : a.cells()) {
        ExtReal first = measure_of(m.child(0), *c.first, ctx);
        if (first.is_zero()) continue;
        acc += first * measure_of(m.child(1), *c.second, ctx);
      }
      return acc;
    }
  }
  return ExtReal(0);
}

ExtReal integrate(const MeasureExpr& m, const Integrand& f, EvalCtx& ctx) {
  using K = MeasureExpr::Kind;
  if (f.fn && m.kind() != K::Zero) {
    if (auto pieces = constant_pieces(*f.fn, m.space()); pieces && pieces->size() <= kMaxPieces) {
      ExtReal acc(0);
      for (const auto& [set, v] : *pieces) {
        if (v.is_zero()) {
          // Measure still matters only for inf * 0, which is 0.
          continue;
        }
        acc += v * measure_of(m, set, ctx);
      }
      return acc;
    }
  }
  switch (m.kind()) {
    case K::Zero: return ExtReal(0);
    case K::Base: return base_integrate(m.base_measure(), f, ctx);
    case K::Weighted: {
      ExtReal v = integrate(m.child(), f, ctx);
      return m.weight() * v;
    }
    case K::Sum: {
      ExtReal acc(0);
      for (const auto& c : m.children()) acc += integrate(c, f, ctx);
      return acc;
    }
    case K::SeqSum: {
      const SeqSpec& spec = m.seq();
      switch (spec.family) {
        case SeqFamily::ConstantRepeat: {
          ExtReal v = integrate(*spec.base, f, ctx);
          if (v.is_zero()) return ExtReal(0);
          ctx.diverged = true;
          return ExtReal::inf();
        }
        case SeqFamily::GeometricWeights:
          return integrate(*spec.base, f, ctx) * ExtReal::exact(1 / Rational(1 - spec.ratio));
        case SeqFamily::LebesgueSlices: return integrate(lebesgue(), f, ctx);
        case SeqFamily::None: break;
      }
      return seq_series(spec, nullptr, [&](const MeasureExpr& piece) { return integrate(piece, f, ctx); }, ctx);
    }
    case K::Mixture: {
      const MixSpec& mix = m.mix();
      auto cb = [&](const Point& y) { return integrate(mix.at(y), f, ctx); };
      return integrate(m.child(), Integrand::of(cb, m.child().space()), ctx);
    }
    case K::Push: {
      const SpaceExpr& dom = m.child().space();
      if (f.fn) return integrate(m.child(), Integrand::of(FnExpr::compose(*f.fn, m.fn()), dom), ctx);
      const FnExpr& g = m.fn();
      auto cb = [&](const Point& y) {
        Point v = eval_fn(g, y);
        return v.is_bottom() ? ExtReal(0) : f.at(v);
      };
      return integrate(m.child(), Integrand::of(cb, dom), ctx);
    }
    case K::Reweight: {
      if (f.fn) return integrate(m.child(), Integrand::of(FnExpr::mul(m.fn(), *f.fn), m.space()), ctx);
      const FnExpr& h = m.fn();
      auto cb = [&](const Point& y) {
        ExtReal w = eval_weight(h, y);
        return w.is_zero() ? ExtReal(0) : w * f.at(y);
      };
      return integrate(m.child(), Integrand::of(cb, m.space()), ctx);
    }
    case K::Product: {
      const MeasureExpr& inner = m.child(1);
      auto outer = [&](const Point& x) { return integrate(inner, section_of(f, x, inner.space()), ctx); };
      return integrate(m.child(0), Integrand::of(outer, m.child(0).space()), ctx);
    }
  }
  return ExtReal(0);
}

EvalResult finish(const ExtReal& v, const EvalCtx& ctx) {
  EvalResult r;
  r.value = v;
  if (ctx.diverged && v.is_inf()) {
    r.mode = EvalMode::Diverges;
  } else if (v.is_exact() && !ctx.truncated) {
    r.mode = EvalMode::Exact;
  } else {
    r.mode = EvalMode::Truncated;
    r.error_bound = ctx.error;
  }
  return r;
}

EvalResult measure_of(const MeasureExpr& m, const SetExpr& a, const EvalConfig& cfg) {
  EvalCtx ctx{cfg};
  ExtReal v = measure_of(m, a, ctx);
  return finish(v, ctx);
}

EvalResult integrate(const MeasureExpr& m, const FnExpr& f, const EvalConfig& cfg) {
  EvalCtx ctx{cfg};
  ExtReal v = integrate(m, Integrand::of(f, m.space()), ctx);
  return finish(v, ctx);
}

EvalResult total_mass(const MeasureExpr& m, const EvalConfig& cfg) {
  return measure_of(m, SetExpr::full(m.space()), cfg);
}

namespace {

void add_to(AtomTable& t, const Point& p, const ExtReal& w) {
  auto [it, inserted] = t.emplace(p, w);
  if (!inserted) it->second += w;
}

AtomTable scaled(const AtomTable& t, const ExtReal& w) {
  AtomTable out;
  for (const auto& [p, v] : t) out.emplace(p, w * v);
  return out;
}

std::optional<AtomTable> base_table(const BaseMeasure& b) {
  using K = BaseMeasure::Kind;
  AtomTable t;
  switch (b.kind()) {
    case K::Dirac: t.emplace(b.point(), ExtReal(1)); return t;
    case K::CountingFin:
    case K::CountingNat: {
      auto pts = b.support_set().finite_points();
      if (!pts) return std::nullopt;
      for (const auto& p : *pts) t.emplace(p, ExtReal(1));
      return t;
    }
    case K::LebesgueDensity:
      if (b.support().length().is_zero()) return t;
      return std::nullopt;
    case K::Product: {
      auto l = base_table(b.left()), r = base_table(b.right());
      if (!l || !r) return std::nullopt;
      for (const auto& [p, v] : *l)
        for (const auto& [q, w] : *r) add_to(t, Point::pair(p, q), v * w);
      return t;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<AtomTable> discrete_table(const MeasureExpr& m) {
  using K = MeasureExpr::Kind;
  AtomTable t;
  switch (m.kind()) {
    case K::Zero: return t;
    case K::Base: return base_table(m.base_measure());
    case K::Weighted: {
      auto c = discrete_table(m.child());
      if (!c) return std::nullopt;
      return scaled(*c, m.weight());
    }
    case K::Sum:
      for (const auto& ch : m.children()) {
        auto c = discrete_table(ch);
        if (!c) return std::nullopt;
        for (const auto& [p, w] : *c) add_to(t, p, w);
      }
      return t;
    case K::SeqSum: {
      const SeqSpec& spec = m.seq();
      if (spec.family == SeqFamily::ConstantRepeat) {
        auto c = discrete_table(*spec.base);
        if (!c) return std::nullopt;
        for (const auto& [p, w] : *c) t.emplace(p, w.is_zero() ? ExtReal(0) : ExtReal::inf());
        return t;
      }
      if (spec.family == SeqFamily::GeometricWeights) {
        auto c = discrete_table(*spec.base);
        if (!c) return std::nullopt;
        return scaled(*c, ExtReal::exact(1 / Rational(1 - spec.ratio)));
      }
      if (!spec.length) return std::nullopt;
      for (std::uint64_t n = 0; n < *spec.length; ++n) {
        auto c = discrete_table(spec.gen(n));
        if (!c) return std::nullopt;
        for (const auto& [p, w] : *c) add_to(t, p, w);
      }
      return t;
    }
    case K::Mixture: {
      auto outer = discrete_table(m.child());
      if (!outer) return std::nullopt;
      for (const auto& [y, w] : *outer) {
        if (w.is_zero()) continue;
        auto inner = discrete_table(m.mix().at(y));
        if (!inner) return std::nullopt;
        for (const auto& [p, v] : *inner) add_to(t, p, w * v);
      }
      return t;
    }
    case K::Push: {
      auto c = discrete_table(m.child());
      if (!c) return std::nullopt;
      for (const auto& [p, w] : *c) {
        Point v = eval_fn(m.fn(), p);
        if (!v.is_bottom()) add_to(t, v, w);
      }
      return t;
    }
    case K::Reweight: {
      auto c = discrete_table(m.child());
      if (!c) return std::nullopt;
      for (const auto& [p, w] : *c) {
        if (w.is_zero()) continue;
        t.emplace(p, w * eval_weight(m.fn(), p));
      }
      return t;
    }
    case K::Product: {
      auto l = discrete_table(m.child(0)), r = discrete_table(m.child(1));
      if (!l || !r) return std::nullopt;
      for (const auto& [p, v] : *l)
        for (const auto& [q, w] : *r) add_to(t, Point::pair(p, q), v * w);
      return t;
    }
  }
  return std::nullopt;
}

}  // namespace sfk
