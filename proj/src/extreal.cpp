#include "sfk/extreal.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "sfk/errors.hpp"

namespace sfk {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

Rational pow10(int e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
  if (e >= 0) return Rational(p);
  Rational q(1, 1);
  q /= Rational(p);
  return q;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::string_view body = text;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  Rational result;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    std::string_view num = body.substr(0, slash);
    std::string_view den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) return std::nullopt;
    mpz_class n{std::string(num)}, d{std::string(den)};
    if (d == 0) return std::nullopt;
    result = Rational(n, d);
    result.canonicalize();
  } else {
    std::string_view mantissa = body;
    int exponent = 0;
    if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
      mantissa = body.substr(0, e);
      std::string_view exp_text = body.substr(e + 1);
      bool exp_neg = false;
      if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
        exp_neg = exp_text.front() == '-';
        exp_text.remove_prefix(1);
      }
      if (!all_digits(exp_text) || exp_text.size() > 4) return std::nullopt;
      exponent = std::stoi(std::string(exp_text));
      if (exponent > 400) return std::nullopt;
      if (exp_neg) exponent = -exponent;
    }
    std::string digits;
    int frac_len = 0;
    if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
      std::string_view whole = mantissa.substr(0, dot);
      std::string_view frac = mantissa.substr(dot + 1);
      if (whole.empty() && frac.empty()) return std::nullopt;
      if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)))
        return std::nullopt;
      digits = std::string(whole) + std::string(frac);
      frac_len = static_cast<int>(frac.size());
    } else {
      if (!all_digits(mantissa)) return std::nullopt;
      digits = std::string(mantissa);
    }
    result = Rational(mpz_class(digits)) * pow10(exponent - frac_len);
    result.canonicalize();
  }
  if (negative) result = -result;
  return result;
}

std::string rational_str(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string double_str(double d) {
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

ExtReal::ExtReal(int v) {
  if (v < 0) fail(Errc::NumericDomain, "negative ExtReal " + std::to_string(v));
  exact_ = v;
}

ExtReal ExtReal::exact(const Rational& q) {
  if (sgn(q) < 0) fail(Errc::NumericDomain, "negative ExtReal " + rational_str(q));
  ExtReal r;
  r.exact_ = q;
  r.exact_.canonicalize();
  return r;
}

ExtReal ExtReal::approx(double d) {
  if (std::isnan(d)) fail(Errc::NumericDomain, "NaN ExtReal");
  if (d < 0) fail(Errc::NumericDomain, "negative ExtReal " + double_str(d));
  if (std::isinf(d)) return inf();
  ExtReal r;
  r.kind_ = Kind::Approx;
  r.approx_ = d;
  return r;
}

ExtReal ExtReal::inf() {
  ExtReal r;
  r.kind_ = Kind::Infinite;
  return r;
}

ExtReal ExtReal::from_string(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "∞") return inf();
  auto q = parse_rational(text);
  if (!q) fail(Errc::NumericDomain, "not a number: " + std::string(text));
  return exact(*q);
}

bool ExtReal::is_zero() const noexcept {
  switch (kind_) {
    case Kind::Exact: return sgn(exact_) == 0;
    case Kind::Approx: return approx_ == 0.0;
    case Kind::Infinite: return false;
  }
  return false;
}

double ExtReal::to_double() const noexcept {
  switch (kind_) {
    case Kind::Exact: return exact_.get_d();
    case Kind::Approx: return approx_;
    case Kind::Infinite: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

const Rational& ExtReal::rational() const {
  if (kind_ != Kind::Exact) fail(Errc::NumericDomain, "ExtReal " + str() + " is not an exact rational");
  return exact_;
}

Rational ExtReal::to_rational() const {
  if (kind_ == Kind::Exact) return exact_;
  if (kind_ == Kind::Infinite) fail(Errc::NumericDomain, "inf has no rational value");
  return Rational(approx_);
}

std::string ExtReal::str() const {
  switch (kind_) {
    case Kind::Exact: return rational_str(exact_);
    case Kind::Approx: return double_str(approx_);
    case Kind::Infinite: return "inf";
  }
  return "?";
}

bool operator==(const ExtReal& a, const ExtReal& b) { return (a <=> b) == 0; }

std::weak_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
  if (a.is_inf() || b.is_inf()) {
    if (a.is_inf() && b.is_inf()) return std::weak_ordering::equivalent;
    return a.is_inf() ? std::weak_ordering::greater : std::weak_ordering::less;
  }
  int c = 0;
  if (a.kind_ == ExtReal::Kind::Exact && b.kind_ == ExtReal::Kind::Exact) {
    c = cmp(a.exact_, b.exact_);
  } else if (a.kind_ == ExtReal::Kind::Exact) {
    c = cmp(a.exact_, b.approx_);
  } else if (b.kind_ == ExtReal::Kind::Exact) {
    c = -cmp(b.exact_, a.approx_);
  } else {
    c = a.approx_ < b.approx_ ? -1 : (a.approx_ > b.approx_ ? 1 : 0);
  }
  if (c < 0) return std::weak_ordering::less;
  if (c > 0) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

bool ExtReal::identical(const ExtReal& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::Exact: return exact_ == other.exact_;
    case Kind::Approx: return approx_ == other.approx_;
    case Kind::Infinite: return true;
  }
  return false;
}

ExtReal ext_add(const ExtReal& a, const ExtReal& b) {
  if (a.is_inf() || b.is_inf()) return ExtReal::inf();
  if (a.is_exact() && b.is_exact()) return ExtReal::exact(a.rational() + b.rational());
  return ExtReal::approx(a.to_double() + b.to_double());
}

ExtReal ext_mul(const ExtReal& a, const ExtReal& b) {
  if (a.is_zero()) return a;
  if (b.is_zero()) return b;
  if (a.is_inf() || b.is_inf()) return ExtReal::inf();
  if (a.is_exact() && b.is_exact()) return ExtReal::exact(a.rational() * b.rational());
  return ExtReal::approx(a.to_double() * b.to_double());
}

ExtReal ext_div(const ExtReal& a, const ExtReal& b) {
  if (a.is_inf() && b.is_inf()) fail(Errc::Indeterminate, "inf / inf");
  if (a.is_zero()) return a;
  if (b.is_zero() || a.is_inf()) return ExtReal::inf();
  if (b.is_inf()) return a.is_exact() ? ExtReal(0) : ExtReal::approx(0.0);
  if (a.is_exact() && b.is_exact()) return ExtReal::exact(a.rational() / b.rational());
  return ExtReal::approx(a.to_double() / b.to_double());
}

ExtReal ext_sub(const ExtReal& a, const ExtReal& b) {
  if (a.is_inf() && b.is_inf()) fail(Errc::Indeterminate, "inf - inf");
  if (a.is_inf()) return a;
  if (b.is_inf()) fail(Errc::NumericDomain, "finite - inf");
  if (a.is_exact() && b.is_exact()) {
    Rational d = a.rational() - b.rational();
    if (sgn(d) < 0) fail(Errc::NumericDomain, "negative difference " + rational_str(d));
    return ExtReal::exact(d);
  }
  double d = a.to_double() - b.to_double();
  if (d < 0) {
    if (d > -1e-12 * std::max(1.0, a.to_double())) d = 0.0;
    else fail(Errc::NumericDomain, "negative difference " + double_str(d));
  }
  return ExtReal::approx(d);
}

ExtReal ext_min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }
ExtReal ext_max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }

ExtReal ext_floor(const ExtReal& a) {
  if (a.is_inf()) return a;
  if (a.is_exact()) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), a.rational().get_num_mpz_t(), a.rational().get_den_mpz_t());
    return ExtReal::exact(Rational(f));
  }
  return ExtReal::approx(std::floor(a.to_double()));
}

}  // namespace sfk
