#include "sfk/randomise.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>

#include "sfk/errors.hpp"

namespace sfk {

namespace {

Rational to_q(double d) { return Rational(d); }

// The generalized inverse CDF of one subprobability measure.
class Quantile {
 public:
  Quantile(const MeasureExpr& m, double tol, const EvalConfig& cfg) : m_(m), tol_(tol), cfg_(cfg) {
    mass_ = total_mass(m, cfg).value;
    if (mass_.is_inf() || mass_.to_double() > 1 + 1e-12)
      fail(Errc::NotSubprobability, m.str() + " has mass " + mass_.str());
    auto table = discrete_table(m);
    if (!table && m.space().is_finite()) {
      AtomTable t;
      for (const auto& p : enumerate(m.space())) {
        auto w = measure_of(m, SetExpr::singleton(m.space(), p), cfg).value;
        if (!w.is_zero()) t[p] = w;
      }
      table = t;
    }
    if (table) {
      table_ = true;
      Rational acc(0);
      for (const auto& [p, w] : normalized(*table)) {
        Rational hi = acc + w.to_rational();
        slots_.push_back({p, acc, hi});
        acc = hi;
      }
      slot_view_ = slots_;
      return;
    }
    SpaceExpr::Kind k = m.space().kind();
    if (k != SpaceExpr::Kind::Nat && k != SpaceExpr::Kind::Real)
      fail(Errc::Unsupported, "randomisation into " + m.space().str());
  }

  struct Slot {
    Point value;
    Rational lo, hi;
  };

  const std::optional<std::vector<Slot>>& slots() const { return slot_view_; }
  const ExtReal& mass() const { return mass_; }

  Point at(double r) const {
    if (r < 0 || r >= mass_.to_double()) return Point::bottom();
    if (table_) {
      Rational q = to_q(r);
      for (const auto& s : slots_)
        if (q >= s.lo && q < s.hi) return s.value;
      return Point::bottom();
    }
    if (m_.space().kind() == SpaceExpr::Kind::Nat) return nat_at(r);
    return real_at(r);
  }

 private:
  Point nat_at(double r) const {
    double acc = 0;
    for (std::uint64_t n = 0; n < cfg_.max_terms; ++n) {
      acc += measure_of(m_, SetExpr::nat_finite({n}), cfg_).value.to_double();
      if (r < acc) return Point::nat(n);
    }
    return Point::bottom();
  }

  double cdf(double t) const {
    if (auto fam = m_.family()) {
      const auto& p = fam->params;
      if (fam->name == "normal") return boost::math::cdf(boost::math::normal_distribution<double>(p[0], p[1]), t);
      if (fam->name == "beta") {
        if (t <= 0) return 0;
        if (t >= 1) return 1;
        return boost::math::cdf(boost::math::beta_distribution<double>(p[0], p[1]), t);
      }
      if (fam->name == "uniform") return std::clamp((t - p[0]) / (p[1] - p[0]), 0.0, 1.0);
    }
    auto s = SetExpr::real(RealSet::interval(std::nullopt, to_q(t), false, true));
    return measure_of(m_, s, cfg_).value.to_double();
  }

  // inf{t : CDF(t) > r} by bisection, or the closed form for named unit-mass families.
  Point real_at(double r) const {
    if (auto fam = m_.family(); fam && mass_ == ExtReal(1)) {
      const auto& p = fam->params;
      if (fam->name == "normal")
        return Point::real(boost::math::quantile(boost::math::normal_distribution<double>(p[0], p[1]), r));
      if (fam->name == "beta")
        return Point::real(boost::math::quantile(boost::math::beta_distribution<double>(p[0], p[1]), r));
      if (fam->name == "uniform") return Point::real(p[0] + r * (p[1] - p[0]));
    }
    double lo = -1, hi = 1;
    while (cdf(hi) <= r) {
      hi *= 2;
      if (hi > 1e300) return Point::bottom();
    }
    while (cdf(lo) > r) {
      lo *= 2;
      if (lo < -1e300) return Point::real(lo);
    }
    for (int i = 0; i < 200 && hi - lo > tol_; ++i) {
      double mid = lo + (hi - lo) / 2;
      if (cdf(mid) > r) hi = mid;
      else lo = mid;
    }
    return Point::real(hi);
  }

  MeasureExpr m_;
  double tol_;
  EvalConfig cfg_;
  ExtReal mass_;
  bool table_ = false;
  std::vector<Slot> slots_;
  std::optional<std::vector<Slot>> slot_view_;
};

std::shared_ptr<const Quantile> make_quantile(const MeasureExpr& m, double tol, const EvalConfig& cfg) {
  return std::make_shared<Quantile>(m, tol, cfg);
}

}  // namespace

struct InverseCdf::Impl {
  Quantile q;
};

InverseCdf::InverseCdf(const MeasureExpr& m, double tol, const EvalConfig& cfg)
    : impl_(std::make_shared<Impl>(Impl{Quantile(m, tol, cfg)})) {}

Point InverseCdf::at(double r) const { return impl_->q.at(r); }

const ExtReal& InverseCdf::mass() const { return impl_->q.mass(); }

namespace {

// Lazily built quantiles of the pieces of k(s).
class PieceCache {
 public:
  PieceCache(KernelExpr k, bool sliced, double tol, EvalConfig cfg)
      : k_(std::move(k)), sliced_(sliced), tol_(tol), cfg_(cfg), constant_(constant_measure(k_).has_value()) {}

  // Piece n of k(s), nullopt past the end; unsliced caches hold the single measure k(s).
  std::shared_ptr<const Quantile> piece(const Point& s, std::uint64_t n) const {
    Entry& e = entry(constant_ ? Point::unit() : s, s);
    auto it = e.pieces.find(n);
    if (it != e.pieces.end()) return it->second;
    std::shared_ptr<const Quantile> q;
    if (!sliced_) {
      if (n == 0) q = make_quantile(e.measure, tol_, cfg_);
    } else if (auto p = e.stream->at(n)) {
      q = make_quantile(*p, tol_, cfg_);
    }
    if (e.pieces.size() < 4096) e.pieces.emplace(n, q);
    return q;
  }

  std::optional<std::uint64_t> length(const Point& s) const {
    if (!sliced_) return 1;
    return entry(constant_ ? Point::unit() : s, s).stream->length();
  }

  const KernelExpr& kernel() const { return k_; }

 private:
  struct Entry {
    MeasureExpr measure;
    std::shared_ptr<const SubprobStream> stream;
    std::map<std::uint64_t, std::shared_ptr<const Quantile>> pieces;
  };

  Entry& entry(const Point& key, const Point& s) const {
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    if (entries_.size() > 1024) entries_.clear();
    Entry e{eval_kernel(k_, s), nullptr, {}};
    if (sliced_) e.stream = as_subprob_sum(e.measure, cfg_);
    return entries_.emplace(key, std::move(e)).first->second;
  }

  KernelExpr k_;
  bool sliced_;
  double tol_;
  EvalConfig cfg_;
  bool constant_;
  mutable std::map<Point, Entry> entries_;
};

std::int64_t floor_int(double d) { return static_cast<std::int64_t>(std::floor(d)); }

// Unit interval pieces of a bounded set, [n, n+1) for integer n.
std::vector<std::pair<std::int64_t, RealSet>> unit_pieces(const RealSet& s) {
  if (s.is_empty()) return {};
  if (!s.bounded()) fail(Errc::Unsupported, "image of unbounded set " + s.str());
  const auto& b = s.breaks();
  std::int64_t lo = floor_int(b.front().get_d()) - 1;
  std::int64_t hi = floor_int(b.back().get_d()) + 1;
  std::vector<std::pair<std::int64_t, RealSet>> out;
  for (std::int64_t n = lo; n <= hi; ++n) {
    RealSet piece = s.intersect(RealSet::interval(Rational(n), Rational(n + 1), true, false));
    if (!piece.is_empty()) out.emplace_back(n, piece);
  }
  return out;
}

std::int64_t real_to_half_shift(std::int64_t n) { return n >= 0 ? n : -3 * n - 1; }
std::int64_t half_to_real_shift(std::int64_t k) { return k % 2 == 0 ? -(k / 2) : -(3 * (k / 2) + 2); }

Point nat_unit_of_half(double y) {
  double n = std::floor(y);
  return Point::pair(Point::nat(static_cast<std::uint64_t>(n)), Point::real(y - n));
}

class RandomiserFn : public FnExternal {
 public:
  RandomiserFn(std::shared_ptr<const PieceCache> cache, Source src, SpaceExpr cod)
      : cache_(std::move(cache)), src_(src), cod_(std::move(cod)) {}

  Point apply(const Point& p) const override {
    const Point& s = p.first();
    const Point& u = p.second();
    switch (src_) {
      case Source::Unit01: return at(s, 0, u.real());
      case Source::NatUnit: return at(s, u.first().nat(), u.second().real());
      case Source::HalfLine: {
        if (u.real() < 0) return Point::bottom();
        Point nu = nat_unit_of_half(u.real());
        return at(s, nu.first().nat(), nu.second().real());
      }
      case Source::RealLine: {
        Point nu = nat_unit_of_half(iso_real_to_halfline(u.real()));
        return at(s, nu.first().nat(), nu.second().real());
      }
    }
    return Point::bottom();
  }

  std::string str() const override {
    return std::string("(randomiser ") + source_name(src_) + " " + cache_->kernel().str() + ")";
  }
  SpaceExpr codomain(const SpaceExpr&) const override { return cod_; }

  std::optional<SetExpr> preimage(const SpaceExpr& domain, const SetExpr& target) const override {
    const KernelExpr& k = cache_->kernel();
    std::vector<std::pair<SetExpr, Point>> rows;  // (row set in S, representative s)
    if (constant_measure(k)) {
      rows.emplace_back(SetExpr::full(k.dom()), Point::unit());
    } else if (k.dom().is_finite()) {
      for (const auto& x : enumerate(k.dom())) rows.emplace_back(SetExpr::singleton(k.dom(), x), x);
    } else {
      return std::nullopt;
    }
    SetExpr out = SetExpr::empty(domain);
    for (const auto& [row, s] : rows) {
      auto len = cache_->length(s);
      if (!len) return std::nullopt;
      SetExpr src_set = SetExpr::empty(source_space(src_));
      RealSet half = RealSet::empty();
      for (std::uint64_t n = 0; n < *len; ++n) {
        auto q = cache_->piece(s, n);
        if (!q) break;
        if (!q->slots()) return std::nullopt;
        RealSet hits = RealSet::empty();
        for (const auto& slot : *q->slots())
          if (target.member(slot.value)) hits = hits.unite(RealSet::interval(slot.lo, slot.hi, true, false));
        if (src_ == Source::Unit01 || src_ == Source::NatUnit) {
          if (src_ == Source::Unit01) src_set = SetExpr::real(hits);
          else src_set = src_set.unite(SetExpr::rect(SetExpr::nat_finite({n}), SetExpr::real(hits)));
        } else {
          half = half.unite(hits.affine_image(Rational(1), Rational(static_cast<long>(n))));
        }
      }
      if (src_ == Source::HalfLine) src_set = SetExpr::real(half);
      if (src_ == Source::RealLine) src_set = SetExpr::real(image_halfline_to_real(half));
      out = out.unite(SetExpr::rect(row, src_set));
    }
    return out;
  }

 private:
  Point at(const Point& s, std::uint64_t n, double r) const {
    auto q = cache_->piece(s, n);
    return q ? q->at(r) : Point::bottom();
  }

  std::shared_ptr<const PieceCache> cache_;
  Source src_;
  SpaceExpr cod_;
};

Randomiser build(const KernelExpr& k, Source src, bool sliced, double tol, const EvalConfig& cfg) {
  auto cache = std::make_shared<PieceCache>(k, sliced, tol, cfg);
  auto fn = std::make_shared<RandomiserFn>(cache, src, k.cod());
  return {src, FnExpr::external(fn), tol, k};
}

// Total map along the mass line: piece i of sigma occupies [C_i, C_i + c_i).
class TotalFn : public FnExternal {
 public:
  TotalFn(MeasureExpr sigma, std::shared_ptr<const SubprobStream> stream, Point t0, double tol, EvalConfig cfg)
      : sigma_(std::move(sigma)), stream_(std::move(stream)), t0_(std::move(t0)), tol_(tol), cfg_(cfg) {}

  Point apply(const Point& p) const override {
    double y = iso_real_to_halfline(p.real());
    extend_to(y);
    auto it = std::upper_bound(starts_.begin(), starts_.end(), y);
    if (it == starts_.begin()) return t0_;
    std::size_t i = static_cast<std::size_t>(it - starts_.begin()) - 1;
    Point v = pieces_[i]->at(y - starts_[i]);
    return v.is_bottom() ? t0_ : v;
  }

  std::string str() const override { return "(total-randomiser " + sigma_.str() + ")"; }
  SpaceExpr codomain(const SpaceExpr&) const override { return sigma_.space(); }
  bool total() const override { return true; }

 private:
  void extend_to(double y) const {
    while (end_ <= y && next_ < cfg_.max_terms) {
      auto piece = stream_->at(next_++);
      if (!piece) break;
      auto q = make_quantile(*piece, tol_, cfg_);
      double c = q->mass().to_double();
      if (c <= 0) continue;
      starts_.push_back(end_);
      pieces_.push_back(q);
      end_ += c;
    }
  }

  MeasureExpr sigma_;
  std::shared_ptr<const SubprobStream> stream_;
  Point t0_;
  double tol_;
  EvalConfig cfg_;
  mutable std::vector<double> starts_;
  mutable std::vector<std::shared_ptr<const Quantile>> pieces_;
  mutable double end_ = 0;
  mutable std::uint64_t next_ = 0;
};

Point first_point(const MeasureExpr& sigma) {
  if (auto t = discrete_table(sigma)) {
    auto n = normalized(*t);
    if (!n.empty()) return n.begin()->first;
  }
  if (auto f = density_form(sigma)) {
    for (const auto& c : f->comps) {
      if (c.ref.kind() == Reference::Kind::Atoms && !c.ref.atom_points().empty())
        return Point::real(c.ref.atom_points().front().get_d());
    }
    if (sigma.space().kind() == SpaceExpr::Kind::Real) {
      for (const auto& c : f->comps) {
        auto vc = value_classes(c.density, sigma.space());
        RealSet supp = c.ref.support().real_set().minus(vc.zero.real_set());
        for (const auto& iv : supp.intervals()) {
          double lo = iv.lo ? iv.lo->get_d() : (iv.hi ? iv.hi->get_d() - 1 : 0.0);
          double hi = iv.hi ? iv.hi->get_d() : lo + 2;
          return Point::real(lo + (hi - lo) / 2);
        }
      }
    }
  }
  if (sigma.space().is_finite()) return enumerate(sigma.space()).front();
  switch (sigma.space().kind()) {
    case SpaceExpr::Kind::Nat: return Point::nat(0);
    case SpaceExpr::Kind::Real: return Point::real(0);
    default: fail(Errc::Unsupported, "default point of " + sigma.space().str());
  }
}

}  // namespace

const char* source_name(Source s) {
  switch (s) {
    case Source::Unit01: return "unit01";
    case Source::NatUnit: return "nat-unit";
    case Source::HalfLine: return "half-line";
    case Source::RealLine: return "real-line";
  }
  return "?";
}

std::optional<Source> parse_source(std::string_view name) {
  for (Source s : {Source::Unit01, Source::NatUnit, Source::HalfLine, Source::RealLine})
    if (name == source_name(s)) return s;
  return std::nullopt;
}

SpaceExpr source_space(Source s) {
  if (s == Source::NatUnit) return SpaceExpr::prod(SpaceExpr::nat(), SpaceExpr::real());
  return SpaceExpr::real();
}

MeasureExpr source_measure(Source s) {
  switch (s) {
    case Source::Unit01: return uniform(0, 1);
    case Source::NatUnit: return MeasureExpr::product(counting_nat(), uniform(0, 1));
    case Source::HalfLine: return lebesgue(RealSet::interval(Rational(0), std::nullopt, true, false));
    case Source::RealLine: return lebesgue();
  }
  return lebesgue();
}

Randomiser randomise_prob(const KernelExpr& k, double tol, const EvalConfig& cfg) {
  if (classify_kernel(k, cfg) != MeasureClass::Probability)
    fail(Errc::NotProbability, k.str() + " is not a probability kernel");
  return build(k, Source::Unit01, false, tol, cfg);
}

Randomiser randomise_subprob(const KernelExpr& k, double tol, const EvalConfig& cfg) {
  if (!class_implies(classify_kernel(k, cfg), MeasureClass::Subprobability))
    fail(Errc::NotSubprobability, k.str() + " is not a subprobability kernel");
  return build(k, Source::Unit01, false, tol, cfg);
}

Randomiser randomise_sfinite(const KernelExpr& k, Source target, double tol, const EvalConfig& cfg) {
  if (target == Source::Unit01) return randomise_subprob(k, tol, cfg);
  return build(k, target, true, tol, cfg);
}

KernelExpr randomised_kernel(const Randomiser& r) {
  const SpaceExpr& s = r.kernel.dom();
  auto joint = KernelExpr::prod_r(KernelExpr::det(FnExpr::id(), s), KernelExpr::constant(source_measure(r.source), s));
  return KernelExpr::push(joint, r.det);
}

Point iso_nat_unit_to_halfline(const Point& p) {
  if (p.kind() != Point::Kind::Pair || p.first().kind() != Point::Kind::Nat || p.second().kind() != Point::Kind::Real)
    fail(Errc::TypeMismatch, "expected (pair nat real), got " + p.str());
  double u = p.second().real();
  if (u < 0 || u >= 1) fail(Errc::TypeMismatch, "unit coordinate outside [0,1): " + p.str());
  return Point::real(static_cast<double>(p.first().nat()) + u);
}

Point iso_halfline_to_nat_unit(const Point& p) {
  if (p.kind() != Point::Kind::Real || p.real() < 0) fail(Errc::TypeMismatch, "expected a point of [0,inf), got " + p.str());
  return nat_unit_of_half(p.real());
}

double iso_real_to_halfline(double r) {
  double f = std::floor(r);
  return r >= 0 ? r + f : r - 3 * f - 1;
}

double iso_halfline_to_real(double y) {
  double k = std::floor(y);
  double n = std::floor(k / 2);
  return std::fmod(k, 2.0) == 0 ? y - n : y - 3 * n - 2;
}

Point iso_real_to_halfline(const Point& p) {
  if (p.kind() != Point::Kind::Real) fail(Errc::TypeMismatch, "expected a real, got " + p.str());
  return Point::real(iso_real_to_halfline(p.real()));
}

Point iso_halfline_to_real(const Point& p) {
  if (p.kind() != Point::Kind::Real || p.real() < 0) fail(Errc::TypeMismatch, "expected a point of [0,inf), got " + p.str());
  return Point::real(iso_halfline_to_real(p.real()));
}

RealSet image_real_to_halfline(const RealSet& s) {
  RealSet out = RealSet::empty();
  for (const auto& [n, piece] : unit_pieces(s))
    out = out.unite(piece.affine_image(Rational(1), Rational(static_cast<long>(real_to_half_shift(n)))));
  return out;
}

RealSet image_halfline_to_real(const RealSet& s) {
  RealSet out = RealSet::empty();
  for (const auto& [k, piece] : unit_pieces(s)) {
    if (k < 0) fail(Errc::TypeMismatch, "set reaches below the half-line: " + s.str());
    out = out.unite(piece.affine_image(Rational(1), Rational(static_cast<long>(half_to_real_shift(k)))));
  }
  return out;
}

FnExpr total_randomise(const MeasureExpr& sigma, double tol, const EvalConfig& cfg) {
  EvalResult mass = total_mass(sigma, cfg);
  if (mass.value.is_finite()) fail(Errc::FiniteTotalMass, sigma.str() + " has finite total mass " + mass.value.str());
  auto fn = std::make_shared<TotalFn>(sigma, as_subprob_sum(sigma, cfg), first_point(sigma), tol, cfg);
  return FnExpr::external(fn);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t start) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (start + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Point draw_source(Source src, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (src == Source::Unit01) return Point::real(u(rng));
  std::geometric_distribution<std::uint64_t> slice(0.5);
  std::uint64_t n = slice(rng);
  double r = u(rng);
  switch (src) {
    case Source::NatUnit: return Point::pair(Point::nat(n), Point::real(r));
    case Source::HalfLine: return Point::real(static_cast<double>(n) + r);
    default: return Point::real(iso_halfline_to_real(static_cast<double>(n) + r));
  }
}

std::vector<Point> sample_via(const Randomiser& r, const Point& s, std::uint64_t seed, std::uint64_t n) {
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::vector<Point> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(eval_fn(r.det, Point::pair(s, draw_source(r.source, rng))));
  return out;
}

}  // namespace sfk
