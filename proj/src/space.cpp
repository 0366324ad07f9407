#include "sfk/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sfk/errors.hpp"

namespace sfk {

struct SpaceExpr::Node {
  Kind kind = Kind::Unit;
  std::vector<std::string> labels;
  std::vector<SpaceExpr> children;
};

SpaceExpr::SpaceExpr() : SpaceExpr(unit()) {}

SpaceExpr::SpaceExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

SpaceExpr SpaceExpr::unit() {
  static const auto node = std::make_shared<const Node>(Node{Kind::Unit, {}, {}});
  return SpaceExpr(node);
}

SpaceExpr SpaceExpr::fin(std::vector<std::string> labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) fail(Errc::TypeMismatch, "empty Fin label");
    if (!seen.insert(l).second) fail(Errc::TypeMismatch, "duplicate Fin label " + l);
  }
  return SpaceExpr(std::make_shared<const Node>(Node{Kind::Fin, std::move(labels), {}}));
}

SpaceExpr SpaceExpr::nat() {
  static const auto node = std::make_shared<const Node>(Node{Kind::Nat, {}, {}});
  return SpaceExpr(node);
}

SpaceExpr SpaceExpr::real() {
  static const auto node = std::make_shared<const Node>(Node{Kind::Real, {}, {}});
  return SpaceExpr(node);
}

SpaceExpr SpaceExpr::ext() {
  static const auto node = std::make_shared<const Node>(Node{Kind::Ext, {}, {}});
  return SpaceExpr(node);
}

SpaceExpr SpaceExpr::prod(const SpaceExpr& a, const SpaceExpr& b) {
  return SpaceExpr(std::make_shared<const Node>(Node{Kind::Prod, {}, {a, b}}));
}

SpaceExpr SpaceExpr::sum(const SpaceExpr& a, const SpaceExpr& b) {
  return SpaceExpr(std::make_shared<const Node>(Node{Kind::Sum, {}, {a, b}}));
}

SpaceExpr::Kind SpaceExpr::kind() const { return node_->kind; }

const std::vector<std::string>& SpaceExpr::labels() const {
  if (node_->kind != Kind::Fin) fail(Errc::TypeMismatch, "labels() on " + str());
  return node_->labels;
}

std::optional<std::size_t> SpaceExpr::label_index(const std::string& label) const {
  const auto& ls = labels();
  auto it = std::find(ls.begin(), ls.end(), label);
  if (it == ls.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ls.begin());
}

const SpaceExpr& SpaceExpr::left() const {
  if (node_->children.size() != 2) fail(Errc::TypeMismatch, "left() on " + str());
  return node_->children[0];
}

const SpaceExpr& SpaceExpr::right() const {
  if (node_->children.size() != 2) fail(Errc::TypeMismatch, "right() on " + str());
  return node_->children[1];
}

bool SpaceExpr::is_finite() const {
  switch (kind()) {
    case Kind::Unit:
    case Kind::Fin: return true;
    case Kind::Prod:
    case Kind::Sum: return left().is_finite() && right().is_finite();
    default: return false;
  }
}

bool SpaceExpr::is_countable() const {
  switch (kind()) {
    case Kind::Unit:
    case Kind::Fin:
    case Kind::Nat: return true;
    case Kind::Prod:
    case Kind::Sum: return left().is_countable() && right().is_countable();
    default: return false;
  }
}

bool SpaceExpr::is_numeric() const {
  return kind() == Kind::Nat || kind() == Kind::Real || kind() == Kind::Ext;
}

std::string SpaceExpr::str() const {
  switch (kind()) {
    case Kind::Unit: return "unit";
    case Kind::Nat: return "nat";
    case Kind::Real: return "real";
    case Kind::Ext: return "ext";
    case Kind::Fin: {
      std::string s = "(fin";
      for (const auto& l : node_->labels) s += " " + l;
      return s + ")";
    }
    case Kind::Prod: return "(prod " + left().str() + " " + right().str() + ")";
    case Kind::Sum: return "(sum " + left().str() + " " + right().str() + ")";
  }
  return "?";
}

bool operator==(const SpaceExpr& a, const SpaceExpr& b) { return (a <=> b) == 0; }

std::weak_ordering operator<=>(const SpaceExpr& a, const SpaceExpr& b) {
  if (a.node_ == b.node_) return std::weak_ordering::equivalent;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  switch (a.kind()) {
    case SpaceExpr::Kind::Fin:
      if (a.node_->labels < b.node_->labels) return std::weak_ordering::less;
      if (b.node_->labels < a.node_->labels) return std::weak_ordering::greater;
      return std::weak_ordering::equivalent;
    case SpaceExpr::Kind::Prod:
    case SpaceExpr::Kind::Sum:
      if (auto c = a.left() <=> b.left(); c != 0) return c;
      return a.right() <=> b.right();
    default: return std::weak_ordering::equivalent;
  }
}

Point::Point() = default;

Point Point::unit() { return Point(); }

Point Point::label(std::string name) {
  Point p;
  p.kind_ = Kind::Label;
  p.value_ = std::move(name);
  return p;
}

Point Point::nat(std::uint64_t n) {
  Point p;
  p.kind_ = Kind::Nat;
  p.value_ = n;
  return p;
}

Point Point::real(double r) {
  if (!std::isfinite(r)) fail(Errc::NumericDomain, "real point must be finite");
  Point p;
  p.kind_ = Kind::Real;
  p.value_ = r == 0.0 ? 0.0 : r;
  return p;
}

Point Point::weight(const ExtReal& w) {
  Point p;
  p.kind_ = Kind::Weight;
  p.value_ = w;
  return p;
}

Point Point::pair(Point a, Point b) {
  Point p;
  p.kind_ = Kind::Pair;
  p.value_ = std::make_shared<const std::pair<Point, Point>>(std::move(a), std::move(b));
  return p;
}

Point Point::inl(Point inner) {
  Point p;
  p.kind_ = Kind::Inl;
  p.value_ = std::make_shared<const Point>(std::move(inner));
  return p;
}

Point Point::inr(Point inner) {
  Point p;
  p.kind_ = Kind::Inr;
  p.value_ = std::make_shared<const Point>(std::move(inner));
  return p;
}

Point Point::bottom() {
  Point p;
  p.kind_ = Kind::Bottom;
  return p;
}

const std::string& Point::label() const {
  if (kind_ != Kind::Label) fail(Errc::TypeMismatch, "not a label: " + str());
  return std::get<std::string>(value_);
}

std::uint64_t Point::nat() const {
  if (kind_ != Kind::Nat) fail(Errc::TypeMismatch, "not a natural: " + str());
  return std::get<std::uint64_t>(value_);
}

double Point::real() const {
  if (kind_ != Kind::Real) fail(Errc::TypeMismatch, "not a real: " + str());
  return std::get<double>(value_);
}

const ExtReal& Point::weight() const {
  if (kind_ != Kind::Weight) fail(Errc::TypeMismatch, "not a weight: " + str());
  return std::get<ExtReal>(value_);
}

const Point& Point::first() const {
  if (kind_ != Kind::Pair) fail(Errc::TypeMismatch, "not a pair: " + str());
  return std::get<Children>(value_)->first;
}

const Point& Point::second() const {
  if (kind_ != Kind::Pair) fail(Errc::TypeMismatch, "not a pair: " + str());
  return std::get<Children>(value_)->second;
}

const Point& Point::inner() const {
  if (kind_ != Kind::Inl && kind_ != Kind::Inr) fail(Errc::TypeMismatch, "not an injection: " + str());
  return *std::get<std::shared_ptr<const Point>>(value_);
}

std::string Point::str() const {
  switch (kind_) {
    case Kind::Unit: return "unit";
    case Kind::Label: return label();
    case Kind::Nat: return std::to_string(nat());
    case Kind::Real: return double_str(real());
    case Kind::Weight: return "(ext " + weight().str() + ")";
    case Kind::Pair: return "(pair " + first().str() + " " + second().str() + ")";
    case Kind::Inl: return "(inl " + inner().str() + ")";
    case Kind::Inr: return "(inr " + inner().str() + ")";
    case Kind::Bottom: return "bottom";
  }
  return "?";
}

bool operator==(const Point& a, const Point& b) { return (a <=> b) == 0; }

std::weak_ordering operator<=>(const Point& a, const Point& b) {
  if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
  switch (a.kind_) {
    case Point::Kind::Unit:
    case Point::Kind::Bottom: return std::weak_ordering::equivalent;
    case Point::Kind::Label: return a.label() <=> b.label();
    case Point::Kind::Nat: return a.nat() <=> b.nat();
    case Point::Kind::Real: {
      double x = a.real(), y = b.real();
      if (x < y) return std::weak_ordering::less;
      if (x > y) return std::weak_ordering::greater;
      return std::weak_ordering::equivalent;
    }
    case Point::Kind::Weight: return a.weight() <=> b.weight();
    case Point::Kind::Pair:
      if (auto c = a.first() <=> b.first(); c != 0) return c;
      return a.second() <=> b.second();
    case Point::Kind::Inl:
    case Point::Kind::Inr: return a.inner() <=> b.inner();
  }
  return std::weak_ordering::equivalent;
}

bool fits(const Point& p, const SpaceExpr& space) {
  using K = SpaceExpr::Kind;
  switch (space.kind()) {
    case K::Unit: return p.kind() == Point::Kind::Unit;
    case K::Fin: return p.kind() == Point::Kind::Label && space.label_index(p.label()).has_value();
    case K::Nat: return p.kind() == Point::Kind::Nat;
    case K::Real: return p.kind() == Point::Kind::Real;
    case K::Ext: return p.kind() == Point::Kind::Weight;
    case K::Prod:
      return p.kind() == Point::Kind::Pair && fits(p.first(), space.left()) &&
             fits(p.second(), space.right());
    case K::Sum:
      if (p.kind() == Point::Kind::Inl) return fits(p.inner(), space.left());
      if (p.kind() == Point::Kind::Inr) return fits(p.inner(), space.right());
      return false;
  }
  return false;
}

void check_fits(const Point& p, const SpaceExpr& space) {
  if (!fits(p, space)) fail(Errc::TypeMismatch, "point " + p.str() + " does not fit " + space.str());
}

std::vector<Point> enumerate(const SpaceExpr& space) {
  using K = SpaceExpr::Kind;
  std::vector<Point> out;
  switch (space.kind()) {
    case K::Unit: out.push_back(Point::unit()); break;
    case K::Fin:
      for (const auto& l : space.labels()) out.push_back(Point::label(l));
      break;
    case K::Prod:
      for (const auto& a : enumerate(space.left()))
        for (const auto& b : enumerate(space.right())) out.push_back(Point::pair(a, b));
      break;
    case K::Sum:
      for (const auto& a : enumerate(space.left())) out.push_back(Point::inl(a));
      for (const auto& b : enumerate(space.right())) out.push_back(Point::inr(b));
      break;
    default: fail(Errc::Unsupported, "cannot enumerate infinite space " + space.str());
  }
  return out;
}

}  // namespace sfk
