#include <doctest.h>

#include "gen.hpp"
#include "sfk/dsl.hpp"
#include "sfk/errors.hpp"
#include "sfk/oracle.hpp"

using namespace sfk;

namespace {

std::pair<int, int> syntax_position(const char* text) {
  try {
    parse_measure(text);
  } catch (const SyntaxError& e) {
    return {e.line(), e.column()};
  }
  return {0, 0};
}

}  // namespace

TEST_CASE("measure terms print back to themselves") {
  for (const char* t : {"(lebesgue -inf inf)", "(scale inf (dirac 0))", "(uniform 0 1)", "(normal 0 1)",
                        "(bernoulli 1/3)", "(sum (scale 1/2 (dirac 0)) (scale 1/2 (normal 0 1)))",
                        "(product (bernoulli 1/2) (uniform 0 1))", "(counting-nat (upto 9))"}) {
    std::string once = parse_measure(t).str();
    CHECK(parse_measure(once).str() == once);
  }
}

TEST_CASE("kernel terms print back to themselves") {
  for (const char* t : {"(constk (normal 0 1))", "(param normal id 1)", "(kcompose (constk (normal 0 1)) (param normal id 1))"}) {
    std::string once = parse_kernel(t).str();
    CHECK(parse_kernel(once).str() == once);
  }
}

TEST_CASE("generated finite measures and kernels round trip") {
  test::Gen g(17);
  for (int i = 0; i < 100; ++i) {
    SpaceExpr x = random_fin_space(g.rng(), 1, 4);
    SpaceExpr y = random_fin_space(g.rng(), 1, 4);
    MeasureExpr m = to_measure(random_dense(g.rng(), y, 0.15));
    CHECK(parse_measure(m.str()).str() == m.str());
    KernelExpr k = to_kernel(random_dense_kernel(g.rng(), x, y, 0.15));
    CHECK(parse_kernel(k.str()).str() == k.str());
    CHECK(dense_of(parse_kernel(k.str())) == dense_of(k));
  }
}

TEST_CASE("syntax errors carry positions") {
  CHECK(syntax_position("(lebesgue 0") == std::pair{1, 1});
  CHECK(syntax_position("(sum (dirac 0)\n  (frobnicate 1))").first == 2);
  CHECK(syntax_position("(normal 0 1) extra") != std::pair{0, 0});
}

TEST_CASE("comments are skipped") {
  CHECK(parse_measure("; a comment\n(uniform 0 1) ; trailing").str() == parse_measure("(uniform 0 1)").str());
}
