#include <cmath>
#include <map>

#include "sfk/density.hpp"
#include "sfk/errors.hpp"

namespace sfk {

std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t n) {
  auto w = static_cast<std::uint64_t>((std::sqrt(8.0 * static_cast<double>(n) + 1.0) - 1.0) / 2.0);
  while (w * (w + 1) / 2 > n) --w;
  while ((w + 1) * (w + 2) / 2 <= n) ++w;
  std::uint64_t j = n - w * (w + 1) / 2;
  return {w - j, j};
}

std::vector<MeasureExpr> take_pieces(const SubprobStream& s, std::uint64_t n) {
  std::vector<MeasureExpr> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto p = s.at(i);
    if (!p) break;
    out.push_back(*p);
  }
  return out;
}

namespace {

using StreamPtr = std::shared_ptr<const SubprobStream>;
using PieceFn = std::function<std::optional<MeasureExpr>(std::uint64_t)>;

class FnStream : public SubprobStream {
 public:
  FnStream(PieceFn f, std::optional<std::uint64_t> len) : f_(std::move(f)), len_(len) {}
  std::optional<MeasureExpr> at(std::uint64_t n) const override {
    if (len_ && n >= *len_) return std::nullopt;
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
    auto v = f_(n);
    if (cache_.size() < 4096) cache_.emplace(n, v);
    return v;
  }
  std::optional<std::uint64_t> length() const override { return len_; }

 private:
  PieceFn f_;
  std::optional<std::uint64_t> len_;
  mutable std::map<std::uint64_t, std::optional<MeasureExpr>> cache_;
};

StreamPtr make_stream(PieceFn f, std::optional<std::uint64_t> len) {
  return std::make_shared<FnStream>(std::move(f), len);
}

StreamPtr vec_stream(std::vector<MeasureExpr> v) {
  auto len = static_cast<std::uint64_t>(v.size());
  auto shared = std::make_shared<std::vector<MeasureExpr>>(std::move(v));
  return make_stream([shared](std::uint64_t n) { return std::optional<MeasureExpr>(shared->at(n)); }, len);
}

using Family = std::function<StreamPtr(std::uint64_t)>;

// Concatenates finite families of finite streams, dovetails otherwise (zero-filling gaps).
StreamPtr combine(const SpaceExpr& space, Family family, std::optional<std::uint64_t> family_len) {
  if (family_len) {
    std::vector<StreamPtr> kids;
    bool all_finite = true;
    for (std::uint64_t i = 0; i < *family_len; ++i) {
      kids.push_back(family(i));
      if (!kids.back()->length()) all_finite = false;
    }
    if (all_finite) {
      std::vector<MeasureExpr> v;
      for (const auto& k : kids)
        for (std::uint64_t j = 0; j < *k->length(); ++j) v.push_back(*k->at(j));
      return vec_stream(std::move(v));
    }
    family = [kids](std::uint64_t i) { return kids.at(i); };
  }
  auto cache = std::make_shared<std::map<std::uint64_t, StreamPtr>>();
  return make_stream(
      [space, family, family_len, cache](std::uint64_t n) -> std::optional<MeasureExpr> {
        auto [i, j] = unpair(n);
        if (family_len && i >= *family_len) return MeasureExpr::zero(space);
        auto it = cache->find(i);
        if (it == cache->end()) it = cache->emplace(i, family(i)).first;
        auto p = it->second->at(j);
        return p ? *p : MeasureExpr::zero(space);
      },
      std::nullopt);
}

StreamPtr stream_of(const MeasureExpr& m, const EvalConfig& cfg);

StreamPtr split_finite(const MeasureExpr& m, const ExtReal& mass) {
  if (mass.is_zero()) return vec_stream({});
  if (mass <= ExtReal(1)) return vec_stream({m});
  std::vector<MeasureExpr> v;
  if (mass.is_exact()) {
    const Rational& q = mass.rational();
    mpz_class k = q.get_num() / q.get_den();
    Rational unit = 1 / q;
    for (mpz_class i = 0; i < k; ++i) v.push_back(MeasureExpr::weighted(ExtReal::exact(unit), m));
    Rational rest = q - Rational(k);
    if (rest > 0) v.push_back(MeasureExpr::weighted(ExtReal::exact(rest / q), m));
  } else {
    auto k = static_cast<long>(std::ceil(mass.to_double() * (1 + 1e-12)));
    for (long i = 0; i < k; ++i) v.push_back(MeasureExpr::weighted(ExtReal::exact(Rational(1, k)), m));
  }
  return vec_stream(std::move(v));
}

StreamPtr repeat_forever(const StreamPtr& inner, const SpaceExpr& space) {
  auto len = inner->length();
  if (len && *len == 0) return inner;
  if (len) {
    std::uint64_t l = *len;
    return make_stream([inner, l](std::uint64_t n) { return inner->at(n % l); }, std::nullopt);
  }
  (void)space;
  return make_stream([inner](std::uint64_t n) { return inner->at(unpair(n).second); }, std::nullopt);
}

StreamPtr map_stream(const StreamPtr& inner, std::function<MeasureExpr(const MeasureExpr&)> f) {
  return make_stream(
      [inner, f](std::uint64_t n) -> std::optional<MeasureExpr> {
        auto p = inner->at(n);
        if (!p) return std::nullopt;
        return f(*p);
      },
      inner->length());
}

StreamPtr scaled_stream(const StreamPtr& inner, const ExtReal& w) {
  if (w <= ExtReal(1)) return map_stream(inner, [w](const MeasureExpr& p) { return MeasureExpr::weighted(w, p); });
  std::uint64_t k;
  ExtReal part;
  if (w.is_exact()) {
    const Rational& q = w.rational();
    mpz_class c = (q.get_num() + q.get_den() - 1) / q.get_den();
    k = c.get_ui();
    part = ExtReal::exact(q / Rational(c));
  } else {
    k = static_cast<std::uint64_t>(std::ceil(w.to_double()));
    part = ExtReal::approx(w.to_double() / static_cast<double>(k));
  }
  auto len = inner->length();
  std::optional<std::uint64_t> out_len;
  if (len) out_len = *len * k;
  return make_stream(
      [inner, k, part](std::uint64_t n) -> std::optional<MeasureExpr> {
        auto p = inner->at(n / k);
        if (!p) return std::nullopt;
        return MeasureExpr::weighted(part, *p);
      },
      out_len);
}

StreamPtr pair_stream(const StreamPtr& a, const StreamPtr& b, const SpaceExpr& space,
                      std::function<MeasureExpr(const MeasureExpr&, const MeasureExpr&)> f) {
  return make_stream(
      [a, b, space, f](std::uint64_t n) -> std::optional<MeasureExpr> {
        auto [i, j] = unpair(n);
        auto p = a->at(i);
        auto q = b->at(j);
        if (!p || !q) return MeasureExpr::zero(space);
        return f(*p, *q);
      },
      std::nullopt);
}

RealSet slice(std::uint64_t n) {
  Rational lo = (n % 2 == 0) ? Rational(static_cast<long>(n / 2)) : Rational(-static_cast<long>((n + 1) / 2));
  return RealSet::interval(lo, Rational(lo + 1), true, false);
}

StreamPtr layers(const MeasureExpr& m, const FnExpr& h, const EvalConfig& cfg) {
  return combine(
      m.space(),
      [m, h, cfg](std::uint64_t k) {
        return stream_of(MeasureExpr::reweight(m, FnExpr::layer(ExtReal(static_cast<int>(k)), h)), cfg);
      },
      std::nullopt);
}

StreamPtr infinite_stream(const MeasureExpr& m, const EvalConfig& cfg) {
  using K = MeasureExpr::Kind;
  const SpaceExpr space = m.space();
  switch (m.kind()) {
    case K::Zero: return vec_stream({});
    case K::Weighted: {
      auto inner = stream_of(m.child(), cfg);
      if (m.weight().is_inf()) return repeat_forever(inner, space);
      return scaled_stream(inner, m.weight());
    }
    case K::Sum: {
      auto kids = m.children();
      return combine(
          space, [kids, cfg](std::uint64_t i) { return stream_of(kids.at(i), cfg); }, kids.size());
    }
    case K::SeqSum: {
      const SeqSpec& spec = m.seq();
      switch (spec.family) {
        case SeqFamily::ConstantRepeat: return repeat_forever(stream_of(*spec.base, cfg), space);
        case SeqFamily::GeometricWeights:
          return scaled_stream(stream_of(*spec.base, cfg), ExtReal::exact(1 / Rational(1 - spec.ratio)));
        case SeqFamily::LebesgueSlices:
          return make_stream([](std::uint64_t n) { return std::optional<MeasureExpr>(lebesgue(slice(n))); },
                             std::nullopt);
        case SeqFamily::None: break;
      }
      auto gen = spec.gen;
      return combine(space, [gen, cfg](std::uint64_t n) { return stream_of(gen(n), cfg); }, spec.length);
    }
    case K::Base: {
      const BaseMeasure& b = m.base_measure();
      switch (b.kind()) {
        case BaseMeasure::Kind::CountingNat: {
          SetExpr s = b.support_set();
          auto elems = std::make_shared<std::vector<std::uint64_t>>();
          auto next = std::make_shared<std::uint64_t>(0);
          return make_stream(
              [s, elems, next](std::uint64_t n) -> std::optional<MeasureExpr> {
                while (elems->size() <= n) {
                  if (s.member(Point::nat(*next))) elems->push_back(*next);
                  ++*next;
                }
                return dirac(Point::nat(elems->at(n)), SpaceExpr::nat());
              },
              std::nullopt);
        }
        case BaseMeasure::Kind::LebesgueDensity: {
          RealSet support = b.support();
          FnExpr g = b.density();
          if (support.bounded()) return layers(lebesgue(support), g, cfg);
          return combine(
              space,
              [support, g, cfg](std::uint64_t n) {
                return stream_of(density_measure(support.intersect(slice(n)), g), cfg);
              },
              std::nullopt);
        }
        case BaseMeasure::Kind::Product: {
          auto a = stream_of(MeasureExpr::base(b.left()), cfg);
          auto c = stream_of(MeasureExpr::base(b.right()), cfg);
          return pair_stream(a, c, space, [](const MeasureExpr& p, const MeasureExpr& q) {
            return MeasureExpr::product(p, q);
          });
        }
        default: break;
      }
      fail(Errc::Unsupported, "subprobability split of " + m.str());
    }
    case K::Product: {
      auto a = stream_of(m.child(0), cfg);
      auto c = stream_of(m.child(1), cfg);
      return pair_stream(a, c, space,
                         [](const MeasureExpr& p, const MeasureExpr& q) { return MeasureExpr::product(p, q); });
    }
    case K::Push: {
      FnExpr f = m.fn();
      return map_stream(stream_of(m.child(), cfg), [f](const MeasureExpr& p) { return MeasureExpr::push(p, f); });
    }
    case K::Reweight: {
      FnExpr h = m.fn();
      EvalResult cm = total_mass(m.child(), cfg);
      if (cm.value.is_finite()) return layers(m.child(), h, cfg);
      auto inner = stream_of(m.child(), cfg);
      return combine(
          space,
          [inner, h, cfg, space](std::uint64_t i) {
            auto p = inner->at(i);
            if (!p) return vec_stream({});
            return stream_of(MeasureExpr::reweight(*p, h), cfg);
          },
          inner->length());
    }
    case K::Mixture: {
      auto outer = stream_of(m.child(), cfg);
      auto mix = m.mix();
      return make_stream(
          [outer, mix, cfg, space](std::uint64_t n) -> std::optional<MeasureExpr> {
            auto [i, j] = unpair(n);
            auto p = outer->at(i);
            if (!p) return MeasureExpr::zero(space);
            auto spec = std::make_shared<MixSpec>();
            auto at = mix.at;
            spec->at = [at, j, cfg, space](const Point& y) {
              auto piece = stream_of(at(y), cfg)->at(j);
              return piece ? *piece : MeasureExpr::zero(space);
            };
            spec->codomain = space;
            spec->text = "(piece " + std::to_string(j) + " " + mix.text + ")";
            return MeasureExpr::mixture(*p, spec);
          },
          std::nullopt);
    }
  }
  fail(Errc::Unsupported, "subprobability split of " + m.str());
}

StreamPtr stream_of(const MeasureExpr& m, const EvalConfig& cfg) {
  if (m.kind() == MeasureExpr::Kind::Zero) return vec_stream({});
  EvalResult mass = total_mass(m, cfg);
  if (mass.value.is_finite()) return split_finite(m, mass.value);
  return infinite_stream(m, cfg);
}

}  // namespace

std::shared_ptr<const SubprobStream> as_subprob_sum(const MeasureExpr& m, const EvalConfig& cfg) {
  return stream_of(m, cfg);
}

}  // namespace sfk
