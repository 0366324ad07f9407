#include "sfk/set.hpp"

#include <algorithm>
#include <cmath>

#include "sfk/errors.hpp"

namespace sfk {

namespace {

int cmp_rational_double(const Rational& q, double x) { return cmp(q, x); }

std::string bound_str(const RealSet::Bound& b, bool upper) {
  if (!b) return upper ? "inf" : "-inf";
  return rational_str(*b);
}

}  // namespace

// ---------------------------------------------------------------- RealSet

RealSet RealSet::empty() { return RealSet(); }

RealSet RealSet::full() {
  RealSet s;
  s.segments_ = {true};
  return s;
}

RealSet RealSet::from_raw(std::vector<Rational> breaks, std::vector<bool> segments,
                          std::vector<bool> points) {
  if (segments.size() != breaks.size() + 1 || points.size() != breaks.size())
    fail(Errc::TypeMismatch, "malformed RealSet");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i - 1] < breaks[i])) fail(Errc::TypeMismatch, "RealSet breakpoints not increasing");
  RealSet s;
  s.breaks_ = std::move(breaks);
  s.segments_ = std::move(segments);
  s.points_ = std::move(points);
  s.canonicalize();
  return s;
}

RealSet RealSet::interval(const Bound& lo, const Bound& hi, bool lo_closed, bool hi_closed) {
  if (lo && hi) {
    int c = cmp(*lo, *hi);
    if (c > 0) return empty();
    if (c == 0) return (lo_closed && hi_closed) ? point(*lo) : empty();
  }
  std::vector<Rational> b;
  std::vector<bool> seg, pts;
  seg.push_back(!lo);
  if (lo) {
    b.push_back(*lo);
    pts.push_back(lo_closed);
    seg.push_back(true);
  }
  if (hi) {
    b.push_back(*hi);
    pts.push_back(hi_closed);
    seg.push_back(false);
  } else {
    seg.back() = true;
  }
  return from_raw(std::move(b), std::move(seg), std::move(pts));
}

RealSet RealSet::closed(const Rational& lo, const Rational& hi) { return interval(lo, hi, true, true); }

RealSet RealSet::point(const Rational& x) { return from_raw({x}, {false, false}, {true}); }

RealSet RealSet::points(const std::vector<Rational>& xs) {
  std::vector<Rational> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<bool> seg(sorted.size() + 1, false), pts(sorted.size(), true);
  return from_raw(std::move(sorted), std::move(seg), std::move(pts));
}

void RealSet::canonicalize() {
  std::vector<Rational> b;
  std::vector<bool> seg, pts;
  seg.push_back(segments_[0]);
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    bool left = seg.back();
    bool right = segments_[i + 1];
    if (points_[i] == left && left == right) continue;
    b.push_back(breaks_[i]);
    pts.push_back(points_[i]);
    seg.push_back(right);
  }
  breaks_ = std::move(b);
  segments_ = std::move(seg);
  points_ = std::move(pts);
  breaks_d_.clear();
  breaks_d_.reserve(breaks_.size());
  for (const auto& q : breaks_) breaks_d_.push_back(q.get_d());
}

template <class Op>
RealSet RealSet::combine(const RealSet& other, Op op) const {
  std::vector<Rational> merged;
  merged.reserve(breaks_.size() + other.breaks_.size());
  std::merge(breaks_.begin(), breaks_.end(), other.breaks_.begin(), other.breaks_.end(),
             std::back_inserter(merged));
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

  auto sample = [&merged](const RealSet& s, std::vector<bool>& seg, std::vector<bool>& pts) {
    seg.assign(merged.size() + 1, false);
    pts.assign(merged.size(), false);
    std::size_t idx = 0;
    seg[0] = s.segments_[0];
    for (std::size_t j = 0; j < merged.size(); ++j) {
      if (idx < s.breaks_.size() && s.breaks_[idx] == merged[j]) {
        pts[j] = s.points_[idx];
        ++idx;
      } else {
        pts[j] = s.segments_[idx];
      }
      seg[j + 1] = s.segments_[idx];
    }
  };
  std::vector<bool> seg_a, pts_a, seg_b, pts_b;
  sample(*this, seg_a, pts_a);
  sample(other, seg_b, pts_b);
  std::vector<bool> seg(merged.size() + 1), pts(merged.size());
  for (std::size_t j = 0; j < seg.size(); ++j) seg[j] = op(seg_a[j], seg_b[j]);
  for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = op(pts_a[j], pts_b[j]);
  RealSet r;
  r.breaks_ = std::move(merged);
  r.segments_ = std::move(seg);
  r.points_ = std::move(pts);
  r.canonicalize();
  return r;
}

bool RealSet::contains(const Rational& x) const {
  auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t k = static_cast<std::size_t>(it - breaks_.begin());
  if (it != breaks_.end() && *it == x) return points_[k];
  return segments_[k];
}

bool RealSet::contains(double x) const {
  if (std::isnan(x)) return false;
  if (std::isinf(x)) return x > 0 ? segments_.back() : segments_.front();
  // Bracket with the binary64 shadows, then decide ties exactly.
  std::size_t lo = static_cast<std::size_t>(
      std::lower_bound(breaks_d_.begin(), breaks_d_.end(), x) - breaks_d_.begin());
  std::size_t k = lo > 0 ? lo - 1 : 0;
  while (k < breaks_.size() && cmp_rational_double(breaks_[k], x) < 0) ++k;
  if (k < breaks_.size() && cmp_rational_double(breaks_[k], x) == 0) return points_[k];
  return segments_[k];
}

bool RealSet::is_empty() const { return breaks_.empty() && !segments_[0]; }
bool RealSet::is_full() const { return breaks_.empty() && segments_[0]; }

RealSet RealSet::unite(const RealSet& other) const {
  return combine(other, [](bool a, bool b) { return a || b; });
}

RealSet RealSet::intersect(const RealSet& other) const {
  return combine(other, [](bool a, bool b) { return a && b; });
}

RealSet RealSet::minus(const RealSet& other) const {
  return combine(other, [](bool a, bool b) { return a && !b; });
}

RealSet RealSet::complement() const {
  RealSet r = *this;
  r.segments_.flip();
  r.points_.flip();
  return r;
}

RealSet RealSet::affine_image(const Rational& a, const Rational& b) const {
  if (sgn(a) == 0) fail(Errc::NumericDomain, "affine_image with zero slope");
  std::vector<Rational> nb;
  for (const auto& x : breaks_) nb.push_back(a * x + b);
  std::vector<bool> seg = segments_, pts = points_;
  if (sgn(a) < 0) {
    std::reverse(nb.begin(), nb.end());
    std::reverse(seg.begin(), seg.end());
    std::reverse(pts.begin(), pts.end());
  }
  return from_raw(std::move(nb), std::move(seg), std::move(pts));
}

ExtReal RealSet::length() const {
  if (segments_.front() || segments_.back()) return ExtReal::inf();
  Rational total = 0;
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (segments_[i]) total += breaks_[i] - breaks_[i - 1];
  return ExtReal::exact(total);
}

bool RealSet::bounded() const { return !segments_.front() && !segments_.back(); }

std::vector<RealSet::Interval> RealSet::intervals() const {
  std::vector<Interval> out;
  const std::size_t n = breaks_.size();
  std::optional<Interval> open;
  if (segments_[0]) open = Interval{std::nullopt, std::nullopt, false, false};
  for (std::size_t i = 0; i < n; ++i) {
    bool left = segments_[i], right = segments_[i + 1];
    if (left && right) continue;  // interior point, possibly an excluded atom
    if (left && !right) {
      open->hi = breaks_[i];
      open->hi_closed = points_[i];
      out.push_back(*open);
      open.reset();
    } else if (!left && right) {
      open = Interval{breaks_[i], std::nullopt, static_cast<bool>(points_[i]), false};
    }
  }
  if (open) out.push_back(*open);
  return out;
}

std::vector<Rational> RealSet::included_atoms() const {
  std::vector<Rational> out;
  for (std::size_t i = 0; i < breaks_.size(); ++i)
    if (points_[i] && !segments_[i] && !segments_[i + 1]) out.push_back(breaks_[i]);
  return out;
}

std::vector<Rational> RealSet::excluded_atoms() const {
  std::vector<Rational> out;
  for (std::size_t i = 0; i < breaks_.size(); ++i)
    if (!points_[i] && segments_[i] && segments_[i + 1]) out.push_back(breaks_[i]);
  return out;
}

std::string RealSet::str() const {
  if (is_empty()) return "empty";
  if (is_full()) return "full";
  std::vector<std::string> parts;
  for (const auto& iv : intervals()) {
    parts.push_back("(ival " + bound_str(iv.lo, false) + " " + bound_str(iv.hi, true) + " :lo " +
                    (iv.lo_closed ? "closed" : "open") + " :hi " + (iv.hi_closed ? "closed" : "open") +
                    ")");
  }
  for (const auto& a : included_atoms()) parts.push_back("(atom " + rational_str(a) + ")");
  std::string body;
  if (parts.size() == 1) {
    body = parts[0];
  } else {
    body = "(union";
    for (const auto& p : parts) body += " " + p;
    body += ")";
  }
  auto excluded = excluded_atoms();
  if (excluded.empty()) return body;
  std::string pts = "(points";
  for (const auto& e : excluded) pts += " " + rational_str(e);
  return "(diff " + body + " " + pts + "))";
}

bool operator==(const RealSet& a, const RealSet& b) { return compare(a, b) == 0; }

int compare(const RealSet& a, const RealSet& b) {
  if (a.breaks_.size() != b.breaks_.size()) return a.breaks_.size() < b.breaks_.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.breaks_.size(); ++i) {
    int c = cmp(a.breaks_[i], b.breaks_[i]);
    if (c != 0) return c < 0 ? -1 : 1;
  }
  for (std::size_t i = 0; i < a.segments_.size(); ++i)
    if (a.segments_[i] != b.segments_[i]) return a.segments_[i] ? 1 : -1;
  for (std::size_t i = 0; i < a.points_.size(); ++i)
    if (a.points_[i] != b.points_[i]) return a.points_[i] ? 1 : -1;
  return 0;
}

// ---------------------------------------------------------------- SetExpr

struct SetExpr::Rep {
  bool flag = false;  // Unit: contains; Nat: cofinite; Ext: contains inf
  std::vector<bool> fin;
  std::vector<std::uint64_t> nats;
  RealSet real;
  std::vector<Cell> cells;
  std::shared_ptr<const SetExpr> left, right;
};

namespace {

const RealSet& nonnegative() {
  static const RealSet s = RealSet::interval(Rational(0), std::nullopt, true, false);
  return s;
}

}  // namespace

SetExpr::SetExpr(SpaceExpr space, std::shared_ptr<const Rep> rep)
    : space_(std::move(space)), rep_(std::move(rep)) {}

SetExpr SetExpr::empty(const SpaceExpr& space) {
  using K = SpaceExpr::Kind;
  switch (space.kind()) {
    case K::Unit: return unit(false);
    case K::Fin: return fin(space, std::vector<bool>(space.labels().size(), false));
    case K::Nat: return nat_finite({});
    case K::Real: return real(RealSet::empty());
    case K::Ext: return ext(RealSet::empty(), false);
    case K::Prod: return prod_from_cells(space, {});
    case K::Sum: return sum(empty(space.left()), empty(space.right()));
  }
  fail(Errc::TypeMismatch, "unknown space");
}

SetExpr SetExpr::full(const SpaceExpr& space) {
  using K = SpaceExpr::Kind;
  switch (space.kind()) {
    case K::Unit: return unit(true);
    case K::Fin: return fin(space, std::vector<bool>(space.labels().size(), true));
    case K::Nat: return nat_cofinite({});
    case K::Real: return real(RealSet::full());
    case K::Ext: return ext(RealSet::full(), true);
    case K::Prod: return rect(full(space.left()), full(space.right()));
    case K::Sum: return sum(full(space.left()), full(space.right()));
  }
  fail(Errc::TypeMismatch, "unknown space");
}

SetExpr SetExpr::unit(bool contains) {
  auto rep = std::make_shared<Rep>();
  rep->flag = contains;
  return SetExpr(SpaceExpr::unit(), rep);
}

SetExpr SetExpr::fin(const SpaceExpr& space, std::vector<bool> members) {
  if (space.kind() != SpaceExpr::Kind::Fin || members.size() != space.labels().size())
    fail(Errc::TypeMismatch, "Fin set does not match " + space.str());
  auto rep = std::make_shared<Rep>();
  rep->fin = std::move(members);
  return SetExpr(space, rep);
}

SetExpr SetExpr::fin_labels(const SpaceExpr& space, const std::vector<std::string>& labels) {
  std::vector<bool> members(space.labels().size(), false);
  for (const auto& l : labels) {
    auto idx = space.label_index(l);
    if (!idx) fail(Errc::TypeMismatch, "label " + l + " not in " + space.str());
    members[*idx] = true;
  }
  return fin(space, std::move(members));
}

SetExpr SetExpr::nat_finite(std::vector<std::uint64_t> elems) {
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  auto rep = std::make_shared<Rep>();
  rep->nats = std::move(elems);
  return SetExpr(SpaceExpr::nat(), rep);
}

SetExpr SetExpr::nat_cofinite(std::vector<std::uint64_t> excluded) {
  std::sort(excluded.begin(), excluded.end());
  excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
  auto rep = std::make_shared<Rep>();
  rep->flag = true;
  rep->nats = std::move(excluded);
  return SetExpr(SpaceExpr::nat(), rep);
}

SetExpr SetExpr::nat_upto(std::uint64_t k) {
  std::vector<std::uint64_t> elems;
  for (std::uint64_t i = 0; i <= k; ++i) elems.push_back(i);
  return nat_finite(std::move(elems));
}

SetExpr SetExpr::real(RealSet s) {
  auto rep = std::make_shared<Rep>();
  rep->real = std::move(s);
  return SetExpr(SpaceExpr::real(), rep);
}

SetExpr SetExpr::ext(RealSet finite_part, bool has_inf) {
  auto rep = std::make_shared<Rep>();
  rep->real = finite_part.intersect(nonnegative());
  rep->flag = has_inf;
  return SetExpr(SpaceExpr::ext(), rep);
}

SetExpr SetExpr::rect(const SetExpr& a, const SetExpr& b) {
  SpaceExpr space = SpaceExpr::prod(a.space(), b.space());
  if (a.is_empty() || b.is_empty()) return prod_from_cells(space, {});
  return prod_from_cells(space, {{a, b}});
}

SetExpr SetExpr::sum(const SetExpr& left, const SetExpr& right) {
  auto rep = std::make_shared<Rep>();
  rep->left = std::make_shared<const SetExpr>(left);
  rep->right = std::make_shared<const SetExpr>(right);
  return SetExpr(SpaceExpr::sum(left.space(), right.space()), rep);
}

SetExpr SetExpr::singleton(const SpaceExpr& space, const Point& p) {
  check_fits(p, space);
  using K = SpaceExpr::Kind;
  switch (space.kind()) {
    case K::Unit: return unit(true);
    case K::Fin: return fin_labels(space, {p.label()});
    case K::Nat: return nat_finite({p.nat()});
    case K::Real: return real(RealSet::point(Rational(p.real())));
    case K::Ext:
      if (p.weight().is_inf()) return ext(RealSet::empty(), true);
      return ext(RealSet::point(p.weight().to_rational()), false);
    case K::Prod: return rect(singleton(space.left(), p.first()), singleton(space.right(), p.second()));
    case K::Sum:
      if (p.kind() == Point::Kind::Inl) return sum(singleton(space.left(), p.inner()), empty(space.right()));
      return sum(empty(space.left()), singleton(space.right(), p.inner()));
  }
  fail(Errc::TypeMismatch, "unknown space");
}

SetExpr SetExpr::points(const SpaceExpr& space, const std::vector<Point>& ps) {
  SetExpr acc = empty(space);
  for (const auto& p : ps) acc = acc.unite(singleton(space, p));
  return acc;
}

SetExpr SetExpr::prod_from_cells(const SpaceExpr& space, std::vector<std::pair<SetExpr, SetExpr>> cells) {
  // Drop empty pieces, then merge cells sharing a section.
  std::vector<std::pair<SetExpr, SetExpr>> kept;
  for (auto& c : cells)
    if (!c.first.is_empty() && !c.second.is_empty()) kept.push_back(std::move(c));
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return compare(a.second, b.second) < 0; });
  std::vector<std::pair<SetExpr, SetExpr>> merged;
  for (auto& c : kept) {
    if (!merged.empty() && merged.back().second == c.second)
      merged.back().first = merged.back().first.unite(c.first);
    else
      merged.push_back(std::move(c));
  }
  auto rep = std::make_shared<Rep>();
  for (auto& c : merged)
    rep->cells.push_back(Cell{std::make_shared<const SetExpr>(std::move(c.first)),
                              std::make_shared<const SetExpr>(std::move(c.second))});
  return SetExpr(space, rep);
}

void SetExpr::require_same_space(const SetExpr& other) const {
  if (!(space_ == other.space_))
    fail(Errc::TypeMismatch, "set spaces differ: " + space_.str() + " vs " + other.space_.str());
}

template <class Op>
SetExpr SetExpr::combine(const SetExpr& other, Op op) const {
  require_same_space(other);
  using K = SpaceExpr::Kind;
  switch (space_.kind()) {
    case K::Unit: return unit(op(rep_->flag, other.rep_->flag));
    case K::Fin: {
      std::vector<bool> m(rep_->fin.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = op(rep_->fin[i], other.rep_->fin[i]);
      return fin(space_, std::move(m));
    }
    case K::Nat: {
      // Decide membership of every listed number and of the generic number.
      std::vector<std::uint64_t> keys = rep_->nats;
      keys.insert(keys.end(), other.rep_->nats.begin(), other.rep_->nats.end());
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      bool generic = op(rep_->flag, other.rep_->flag);
      std::vector<std::uint64_t> listed;
      for (auto k : keys) {
        bool in = op(member(Point::nat(k)), other.member(Point::nat(k)));
        if (in != generic) listed.push_back(k);
      }
      return generic ? nat_cofinite(std::move(listed)) : nat_finite(std::move(listed));
    }
    case K::Real: return real(rep_->real.combine(other.rep_->real, op));
    case K::Ext: return ext(rep_->real.combine(other.rep_->real, op), op(rep_->flag, other.rep_->flag));
    case K::Sum:
      return sum(rep_->left->combine(*other.rep_->left, op), rep_->right->combine(*other.rep_->right, op));
    case K::Prod: {
      // Common refinement of the two first-coordinate partitions.
      auto partition = [this](const SetExpr& s) {
        std::vector<std::pair<SetExpr, SetExpr>> parts;
        SetExpr covered = empty(space_.left());
        for (const auto& c : s.rep_->cells) {
          parts.emplace_back(*c.first, *c.second);
          covered = covered.unite(*c.first);
        }
        SetExpr rest = covered.complement();
        if (!rest.is_empty()) parts.emplace_back(rest, empty(space_.right()));
        return parts;
      };
      auto pa = partition(*this), pb = partition(other);
      std::vector<std::pair<SetExpr, SetExpr>> cells;
      for (const auto& [a1, a2] : pa)
        for (const auto& [b1, b2] : pb) {
          SetExpr inter = a1.intersect(b1);
          if (inter.is_empty()) continue;
          cells.emplace_back(inter, a2.combine(b2, op));
        }
      return prod_from_cells(space_, std::move(cells));
    }
  }
  fail(Errc::TypeMismatch, "unknown space");
}

bool SetExpr::member(const Point& p) const {
  check_fits(p, space_);
  using K = SpaceExpr::Kind;
  switch (space_.kind()) {
    case K::Unit: return rep_->flag;
    case K::Fin: return rep_->fin[*space_.label_index(p.label())];
    case K::Nat: {
      bool listed = std::binary_search(rep_->nats.begin(), rep_->nats.end(), p.nat());
      return rep_->flag ? !listed : listed;
    }
    case K::Real: return rep_->real.contains(p.real());
    case K::Ext: {
      const ExtReal& w = p.weight();
      if (w.is_inf()) return rep_->flag;
      if (w.is_exact()) return rep_->real.contains(w.rational());
      return rep_->real.contains(w.to_double());
    }
    case K::Prod:
      for (const auto& c : rep_->cells)
        if (c.first->member(p.first())) return c.second->member(p.second());
      return false;
    case K::Sum:
      return p.kind() == Point::Kind::Inl ? rep_->left->member(p.inner()) : rep_->right->member(p.inner());
  }
  return false;
}

SetExpr SetExpr::unite(const SetExpr& other) const {
  return combine(other, [](bool a, bool b) { return a || b; });
}

SetExpr SetExpr::intersect(const SetExpr& other) const {
  return combine(other, [](bool a, bool b) { return a && b; });
}

SetExpr SetExpr::minus(const SetExpr& other) const {
  return combine(other, [](bool a, bool b) { return a && !b; });
}

SetExpr SetExpr::complement() const { return full(space_).minus(*this); }

bool SetExpr::is_empty() const {
  using K = SpaceExpr::Kind;
  switch (space_.kind()) {
    case K::Unit: return !rep_->flag;
    case K::Fin: return std::none_of(rep_->fin.begin(), rep_->fin.end(), [](bool b) { return b; });
    case K::Nat: return !rep_->flag && rep_->nats.empty();
    case K::Real: return rep_->real.is_empty();
    case K::Ext: return !rep_->flag && rep_->real.is_empty();
    case K::Prod: return rep_->cells.empty();
    case K::Sum: return rep_->left->is_empty() && rep_->right->is_empty();
  }
  return false;
}

bool SetExpr::is_full() const { return complement().is_empty(); }

bool SetExpr::subset_of(const SetExpr& other) const { return minus(other).is_empty(); }

bool SetExpr::unit_value() const {
  if (space_.kind() != SpaceExpr::Kind::Unit) fail(Errc::TypeMismatch, "not a Unit set");
  return rep_->flag;
}

const std::vector<bool>& SetExpr::fin_members() const {
  if (space_.kind() != SpaceExpr::Kind::Fin) fail(Errc::TypeMismatch, "not a Fin set");
  return rep_->fin;
}

bool SetExpr::nat_is_cofinite() const {
  if (space_.kind() != SpaceExpr::Kind::Nat) fail(Errc::TypeMismatch, "not a Nat set");
  return rep_->flag;
}

const std::vector<std::uint64_t>& SetExpr::nat_elems() const {
  if (space_.kind() != SpaceExpr::Kind::Nat) fail(Errc::TypeMismatch, "not a Nat set");
  return rep_->nats;
}

const RealSet& SetExpr::real_set() const {
  if (space_.kind() != SpaceExpr::Kind::Real && space_.kind() != SpaceExpr::Kind::Ext)
    fail(Errc::TypeMismatch, "not a Real set");
  return rep_->real;
}

bool SetExpr::ext_has_inf() const {
  if (space_.kind() != SpaceExpr::Kind::Ext) fail(Errc::TypeMismatch, "not an Ext set");
  return rep_->flag;
}

const std::vector<Cell>& SetExpr::cells() const {
  if (space_.kind() != SpaceExpr::Kind::Prod) fail(Errc::TypeMismatch, "not a product set");
  return rep_->cells;
}

const SetExpr& SetExpr::sum_left() const {
  if (space_.kind() != SpaceExpr::Kind::Sum) fail(Errc::TypeMismatch, "not a sum set");
  return *rep_->left;
}

const SetExpr& SetExpr::sum_right() const {
  if (space_.kind() != SpaceExpr::Kind::Sum) fail(Errc::TypeMismatch, "not a sum set");
  return *rep_->right;
}

SetExpr SetExpr::section(const Point& x) const {
  for (const auto& c : cells())
    if (c.first->member(x)) return *c.second;
  return empty(space_.right());
}

std::optional<std::vector<Point>> SetExpr::finite_points() const {
  using K = SpaceExpr::Kind;
  std::vector<Point> out;
  switch (space_.kind()) {
    case K::Unit:
      if (rep_->flag) out.push_back(Point::unit());
      return out;
    case K::Fin:
      for (std::size_t i = 0; i < rep_->fin.size(); ++i)
        if (rep_->fin[i]) out.push_back(Point::label(space_.labels()[i]));
      return out;
    case K::Nat:
      if (rep_->flag) return std::nullopt;
      for (auto n : rep_->nats) out.push_back(Point::nat(n));
      return out;
    case K::Real:
    case K::Ext: {
      const RealSet& r = rep_->real;
      if (!r.intervals().empty()) return std::nullopt;
      for (const auto& q : r.included_atoms()) {
        if (space_.kind() == K::Real) out.push_back(Point::real(q.get_d()));
        else out.push_back(Point::weight(ExtReal::exact(q)));
      }
      if (space_.kind() == K::Ext && rep_->flag) out.push_back(Point::weight(ExtReal::inf()));
      return out;
    }
    case K::Prod:
      for (const auto& c : rep_->cells) {
        auto a = c.first->finite_points();
        auto b = c.second->finite_points();
        if (!a || !b) return std::nullopt;
        for (const auto& x : *a)
          for (const auto& y : *b) out.push_back(Point::pair(x, y));
      }
      return out;
    case K::Sum: {
      auto a = rep_->left->finite_points();
      auto b = rep_->right->finite_points();
      if (!a || !b) return std::nullopt;
      for (const auto& x : *a) out.push_back(Point::inl(x));
      for (const auto& y : *b) out.push_back(Point::inr(y));
      return out;
    }
  }
  return std::nullopt;
}

std::string SetExpr::str() const {
  if (is_empty()) return "empty";
  if (is_full()) return "full";
  using K = SpaceExpr::Kind;
  switch (space_.kind()) {
    case K::Unit: return rep_->flag ? "full" : "empty";
    case K::Fin: {
      std::string s = "(labels";
      for (std::size_t i = 0; i < rep_->fin.size(); ++i)
        if (rep_->fin[i]) s += " " + space_.labels()[i];
      return s + ")";
    }
    case K::Nat: {
      std::string s = rep_->flag ? "(cofinite" : "(nats";
      for (auto n : rep_->nats) s += " " + std::to_string(n);
      return s + ")";
    }
    case K::Real: return rep_->real.str();
    case K::Ext: {
      std::string body = rep_->real.str();
      if (!rep_->flag) return body;
      if (rep_->real.is_empty()) return "(atom inf)";
      return "(union " + body + " (atom inf))";
    }
    case K::Prod: {
      std::vector<std::string> parts;
      for (const auto& c : rep_->cells) parts.push_back("(rect " + c.first->str() + " " + c.second->str() + ")");
      if (parts.size() == 1) return parts[0];
      std::string s = "(union";
      for (const auto& p : parts) s += " " + p;
      return s + ")";
    }
    case K::Sum: return "(sumset " + rep_->left->str() + " " + rep_->right->str() + ")";
  }
  return "?";
}

bool operator==(const SetExpr& a, const SetExpr& b) { return compare(a, b) == 0; }

int compare(const SetExpr& a, const SetExpr& b) {
  if (auto c = a.space_ <=> b.space_; c != 0) return c < 0 ? -1 : 1;
  if (a.rep_ == b.rep_) return 0;
  const auto& x = *a.rep_;
  const auto& y = *b.rep_;
  using K = SpaceExpr::Kind;
  switch (a.space_.kind()) {
    case K::Unit: return x.flag == y.flag ? 0 : (x.flag ? 1 : -1);
    case K::Fin:
      if (x.fin == y.fin) return 0;
      return x.fin < y.fin ? -1 : 1;
    case K::Nat:
      if (x.flag != y.flag) return x.flag ? 1 : -1;
      if (x.nats == y.nats) return 0;
      return x.nats < y.nats ? -1 : 1;
    case K::Real: return compare(x.real, y.real);
    case K::Ext:
      if (x.flag != y.flag) return x.flag ? 1 : -1;
      return compare(x.real, y.real);
    case K::Prod: {
      if (x.cells.size() != y.cells.size()) return x.cells.size() < y.cells.size() ? -1 : 1;
      for (std::size_t i = 0; i < x.cells.size(); ++i) {
        if (int c = compare(*x.cells[i].second, *y.cells[i].second); c != 0) return c;
        if (int c = compare(*x.cells[i].first, *y.cells[i].first); c != 0) return c;
      }
      return 0;
    }
    case K::Sum:
      if (int c = compare(*x.left, *y.left); c != 0) return c;
      return compare(*x.right, *y.right);
  }
  return 0;
}

}  // namespace sfk
