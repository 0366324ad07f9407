#include <doctest.h>

#include "gen.hpp"
#include "sfk/errors.hpp"
#include "sfk/extreal.hpp"

using namespace sfk;

namespace {

ExtReal q(long n, long d = 1) { return ExtReal::exact(Rational(n, d)); }

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::Unsupported;
}

}  // namespace

TEST_CASE("infinity conventions") {
  const ExtReal inf = ExtReal::inf();
  CHECK(ext_mul(inf, 0) == ExtReal(0));
  CHECK(ext_mul(0, inf) == ExtReal(0));
  CHECK(ext_mul(inf, q(1, 3)).is_inf());
  CHECK(ext_div(q(5), inf) == ExtReal(0));
  CHECK(ext_add(inf, q(2)).is_inf());
  CHECK(code_of([&] { ext_div(inf, inf); }) == Errc::Indeterminate);
  CHECK(code_of([&] { ext_sub(inf, inf); }) == Errc::Indeterminate);
  CHECK(ext_sub(inf, q(7)).is_inf());
}

TEST_CASE("exact arithmetic stays exact") {
  ExtReal s = q(1, 3) + q(1, 6);
  CHECK(s.is_exact());
  CHECK(s == q(1, 2));
  CHECK(s.str() == "1/2");
  CHECK(ext_div(q(3, 4), q(3, 8)) == q(2));
  CHECK_FALSE((q(1, 3) + ExtReal::approx(0.5)).is_exact());
}

TEST_CASE("negative values are rejected") {
  CHECK(code_of([] { ExtReal(-1); }) == Errc::NumericDomain);
  CHECK(code_of([] { ext_sub(q(1), q(2)); }) == Errc::NumericDomain);
}

TEST_CASE("string round trip") {
  for (const char* s : {"0", "3", "7/2", "inf"}) CHECK(ExtReal::from_string(s).str() == s);
}

TEST_CASE("semiring laws on generated weights") {
  test::Gen g(11);
  for (int i = 0; i < 500; ++i) {
    ExtReal a = g.weight(), b = g.weight(), c = g.weight();
    CHECK(a + b == b + a);
    CHECK(a * b == b * a);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a * ExtReal(1) == a);
    CHECK(a + ExtReal(0) == a);
    CHECK(a <= a + b);
  }
}
