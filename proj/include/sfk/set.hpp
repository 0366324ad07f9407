#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfk/extreal.hpp"
#include "sfk/space.hpp"

namespace sfk {

// A finite Boolean combination of intervals and points of the real line with rational
// endpoints. Canonical form: sorted breakpoints b_0 < ... < b_{n-1}, a membership flag for
// every open segment (-inf,b_0), (b_0,b_1), ..., (b_{n-1},inf) and for every breakpoint,
// with no breakpoint whose flag equals both neighbouring segment flags.
class RealSet {
 public:
  // nullopt stands for -inf (lower) or +inf (upper).
  using Bound = std::optional<Rational>;

  struct Interval {
    Bound lo;
    Bound hi;
    bool lo_closed = false;
    bool hi_closed = false;
  };

  static RealSet empty();
  static RealSet full();
  static RealSet interval(const Bound& lo, const Bound& hi, bool lo_closed, bool hi_closed);
  static RealSet closed(const Rational& lo, const Rational& hi);
  static RealSet point(const Rational& x);
  static RealSet points(const std::vector<Rational>& xs);
  static RealSet from_raw(std::vector<Rational> breaks, std::vector<bool> segments,
                          std::vector<bool> points);

  bool contains(double x) const;
  bool contains(const Rational& x) const;
  bool is_empty() const;
  bool is_full() const;

  RealSet unite(const RealSet& other) const;
  RealSet intersect(const RealSet& other) const;
  RealSet complement() const;
  RealSet minus(const RealSet& other) const;
  // {a*x + b : x in this}, a != 0.
  RealSet affine_image(const Rational& a, const Rational& b) const;

  // Lebesgue measure, exact.
  ExtReal length() const;
  bool bounded() const;

  // Maximal intervals of the closure-up-to-points view, plus atom lists.
  std::vector<Interval> intervals() const;
  std::vector<Rational> included_atoms() const;
  std::vector<Rational> excluded_atoms() const;

  const std::vector<Rational>& breaks() const { return breaks_; }
  bool segment_in(std::size_t i) const { return segments_[i]; }
  bool point_in(std::size_t i) const { return points_[i]; }

  std::string str() const;

  friend bool operator==(const RealSet& a, const RealSet& b);
  friend int compare(const RealSet& a, const RealSet& b);

 private:
  friend class SetExpr;
  void canonicalize();
  template <class Op>
  RealSet combine(const RealSet& other, Op op) const;

  std::vector<Rational> breaks_;
  std::vector<double> breaks_d_;
  std::vector<bool> segments_{false};
  std::vector<bool> points_;
};

class SetExpr;

struct Cell {
  std::shared_ptr<const SetExpr> first;
  std::shared_ptr<const SetExpr> second;
};

// Measurable subsets of a SpaceExpr, in a canonical form per space kind:
// Unit: flag; Fin: membership vector over labels; Nat: finite or cofinite list;
// Real: RealSet; Ext: RealSet within [0,inf) plus a flag for inf; Prod: disjoint
// first-coordinate cells with distinct nonempty sections; Sum: a pair of sets.
class SetExpr {
 public:
  static SetExpr empty(const SpaceExpr& space);
  static SetExpr full(const SpaceExpr& space);
  static SetExpr unit(bool contains);
  static SetExpr fin(const SpaceExpr& space, std::vector<bool> members);
  static SetExpr fin_labels(const SpaceExpr& space, const std::vector<std::string>& labels);
  static SetExpr nat_finite(std::vector<std::uint64_t> elems);
  static SetExpr nat_cofinite(std::vector<std::uint64_t> excluded);
  static SetExpr nat_upto(std::uint64_t k);  // {0, ..., k}
  static SetExpr real(RealSet s);
  static SetExpr ext(RealSet finite_part, bool has_inf);
  static SetExpr rect(const SetExpr& a, const SetExpr& b);
  static SetExpr sum(const SetExpr& left, const SetExpr& right);
  static SetExpr singleton(const SpaceExpr& space, const Point& p);
  static SetExpr points(const SpaceExpr& space, const std::vector<Point>& ps);

  const SpaceExpr& space() const { return space_; }
  bool member(const Point& p) const;

  SetExpr unite(const SetExpr& other) const;
  SetExpr intersect(const SetExpr& other) const;
  SetExpr complement() const;
  SetExpr minus(const SetExpr& other) const;
  bool is_empty() const;
  bool is_full() const;
  bool subset_of(const SetExpr& other) const;

  bool unit_value() const;
  const std::vector<bool>& fin_members() const;
  bool nat_is_cofinite() const;
  const std::vector<std::uint64_t>& nat_elems() const;
  const RealSet& real_set() const;  // Real and Ext
  bool ext_has_inf() const;
  const std::vector<Cell>& cells() const;
  const SetExpr& sum_left() const;
  const SetExpr& sum_right() const;

  // Section {y : (x,y) in this} of a product set.
  SetExpr section(const Point& x) const;
  // Elements, when the set is finite (any space). nullopt for infinite sets.
  std::optional<std::vector<Point>> finite_points() const;

  std::string str() const;

  friend bool operator==(const SetExpr& a, const SetExpr& b);
  friend int compare(const SetExpr& a, const SetExpr& b);

 private:
  struct Rep;
  SetExpr(SpaceExpr space, std::shared_ptr<const Rep> rep);
  static SetExpr prod_from_cells(const SpaceExpr& space, std::vector<std::pair<SetExpr, SetExpr>> cells);
  template <class Op>
  SetExpr combine(const SetExpr& other, Op op) const;
  void require_same_space(const SetExpr& other) const;

  SpaceExpr space_;
  std::shared_ptr<const Rep> rep_;
};

}  // namespace sfk
