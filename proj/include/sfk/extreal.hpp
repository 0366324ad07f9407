#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sfk {

using Rational = mpq_class;

// Parses "3", "-1/4", "0.125", "2.5e-3" exactly. Returns nullopt on anything else.
std::optional<Rational> parse_rational(std::string_view text);
std::string rational_str(const Rational& q);
std::string double_str(double d);

// A value in [0, inf]. Finite values are exact rationals or binary64 approximations;
// arithmetic stays exact while every operand is exact.
class ExtReal {
 public:
  enum class Kind : std::uint8_t { Exact, Approx, Infinite };

  ExtReal() = default;
  ExtReal(int v);  // NOLINT: integer literals are the common case in tests

  static ExtReal exact(const Rational& q);
  static ExtReal approx(double d);
  static ExtReal inf();
  static ExtReal from_string(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  bool is_inf() const noexcept { return kind_ == Kind::Infinite; }
  bool is_finite() const noexcept { return kind_ != Kind::Infinite; }
  bool is_exact() const noexcept { return kind_ != Kind::Approx; }
  bool is_zero() const noexcept;
  bool is_positive() const noexcept { return !is_zero(); }

  double to_double() const noexcept;
  const Rational& rational() const;
  // The value as an exact rational; approximations convert their binary64 value.
  Rational to_rational() const;
  std::string str() const;

  friend bool operator==(const ExtReal& a, const ExtReal& b);
  friend std::weak_ordering operator<=>(const ExtReal& a, const ExtReal& b);

  // Same kind and same value.
  bool identical(const ExtReal& other) const;

 private:
  Kind kind_ = Kind::Exact;
  double approx_ = 0.0;
  Rational exact_{0};
};

ExtReal ext_add(const ExtReal& a, const ExtReal& b);
ExtReal ext_mul(const ExtReal& a, const ExtReal& b);
ExtReal ext_div(const ExtReal& a, const ExtReal& b);
// a - b for b <= a; inf - finite = inf; inf - inf is Indeterminate.
ExtReal ext_sub(const ExtReal& a, const ExtReal& b);
ExtReal ext_min(const ExtReal& a, const ExtReal& b);
ExtReal ext_max(const ExtReal& a, const ExtReal& b);
ExtReal ext_floor(const ExtReal& a);

inline ExtReal operator+(const ExtReal& a, const ExtReal& b) { return ext_add(a, b); }
inline ExtReal operator*(const ExtReal& a, const ExtReal& b) { return ext_mul(a, b); }
inline ExtReal& operator+=(ExtReal& a, const ExtReal& b) { return a = ext_add(a, b); }

}  // namespace sfk
