#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sfk/extreal.hpp"

namespace sfk {

// Measurable spaces. Ext is the value space [0, inf] of densities and scores.
class SpaceExpr {
 public:
  enum class Kind : std::uint8_t { Unit, Fin, Nat, Real, Ext, Prod, Sum };

  SpaceExpr();  // unit

  static SpaceExpr unit();
  static SpaceExpr fin(std::vector<std::string> labels);
  static SpaceExpr nat();
  static SpaceExpr real();
  static SpaceExpr ext();
  static SpaceExpr prod(const SpaceExpr& a, const SpaceExpr& b);
  static SpaceExpr sum(const SpaceExpr& a, const SpaceExpr& b);

  Kind kind() const;
  const std::vector<std::string>& labels() const;
  std::optional<std::size_t> label_index(const std::string& label) const;
  const SpaceExpr& left() const;
  const SpaceExpr& right() const;

  bool is_finite() const;
  bool is_countable() const;
  bool is_numeric() const;  // Nat, Real or Ext

  std::string str() const;

  friend bool operator==(const SpaceExpr& a, const SpaceExpr& b);
  friend std::weak_ordering operator<=>(const SpaceExpr& a, const SpaceExpr& b);

 private:
  struct Node;
  explicit SpaceExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

class Point {
 public:
  enum class Kind : std::uint8_t { Unit, Label, Nat, Real, Weight, Pair, Inl, Inr, Bottom };

  Point();  // unit

  static Point unit();
  static Point label(std::string name);
  static Point nat(std::uint64_t n);
  static Point real(double r);
  static Point weight(const ExtReal& w);
  static Point pair(Point a, Point b);
  static Point inl(Point p);
  static Point inr(Point p);
  static Point bottom();

  Kind kind() const noexcept { return kind_; }
  bool is_bottom() const noexcept { return kind_ == Kind::Bottom; }

  const std::string& label() const;
  std::uint64_t nat() const;
  double real() const;
  const ExtReal& weight() const;
  const Point& first() const;
  const Point& second() const;
  const Point& inner() const;

  std::string str() const;

  friend bool operator==(const Point& a, const Point& b);
  friend std::weak_ordering operator<=>(const Point& a, const Point& b);

 private:
  using Children = std::shared_ptr<const std::pair<Point, Point>>;
  using Value = std::variant<std::monostate, std::string, std::uint64_t, double, ExtReal, Children,
                             std::shared_ptr<const Point>>;
  Kind kind_ = Kind::Unit;
  Value value_;
};

bool fits(const Point& p, const SpaceExpr& space);
void check_fits(const Point& p, const SpaceExpr& space);

// All points of a finite space in a fixed order. Unsupported for infinite spaces.
std::vector<Point> enumerate(const SpaceExpr& space);

}  // namespace sfk
