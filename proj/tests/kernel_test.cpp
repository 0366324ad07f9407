#include <doctest.h>

#include "gen.hpp"
#include "sfk/density.hpp"
#include "sfk/dsl.hpp"
#include "sfk/kernel.hpp"
#include "sfk/oracle.hpp"

using namespace sfk;

TEST_CASE("composition matches the oracle matrix product") {
  test::Gen g(23);
  for (int i = 0; i < 100; ++i) {
    SpaceExpr x = random_fin_space(g.rng(), 1, 4);
    SpaceExpr y = random_fin_space(g.rng(), 1, 4);
    SpaceExpr z = random_fin_space(g.rng(), 1, 4);
    DenseKernel k = random_dense_kernel(g.rng(), x, y, 0.1);
    DenseKernel l = random_dense_kernel(g.rng(), y, z, 0.1);
    auto got = dense_of(KernelExpr::compose(to_kernel(k), to_kernel(l)));
    REQUIRE(got);
    CHECK(*got == o_compose(k, l));
  }
}

TEST_CASE("composition is associative on generated kernels") {
  test::Gen g(29);
  for (int i = 0; i < 50; ++i) {
    SpaceExpr s = random_fin_space(g.rng(), 1, 3);
    DenseKernel a = random_dense_kernel(g.rng(), s, s, 0.1);
    DenseKernel b = random_dense_kernel(g.rng(), s, s, 0.1);
    DenseKernel c = random_dense_kernel(g.rng(), s, s, 0.1);
    CHECK(o_compose(o_compose(a, b), c) == o_compose(a, o_compose(b, c)));
    auto main = dense_of(KernelExpr::compose(KernelExpr::compose(to_kernel(a), to_kernel(b)), to_kernel(c)));
    REQUIRE(main);
    CHECK(*main == o_compose(a, o_compose(b, c)));
  }
}

TEST_CASE("kernel evaluation and classification") {
  KernelExpr k = parse_kernel("(param normal id 1)");
  MeasureExpr at2 = eval_kernel(k, Point::real(2));
  EvalResult r = measure_of(at2, SetExpr::real(RealSet::closed(Rational(2), Rational(100))));
  CHECK(r.value.to_double() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(classify_kernel(k) == MeasureClass::Probability);
  CHECK(classify_kernel(KernelExpr::constant(lebesgue(), SpaceExpr::unit())) == MeasureClass::SigmaFinite);
  CHECK(classify_kernel(KernelExpr::constant(parse_measure("(scale inf (uniform 0 1))"), SpaceExpr::unit())) ==
        MeasureClass::SFinite);
}

TEST_CASE("top 0-inf-sets") {
  CHECK(measure_of(normal(0, 1), top_zero_infty_set(normal(0, 1))).value.is_zero());
  MeasureExpr m = parse_measure("(sum (lebesgue -inf inf) (scale inf (dirac 1)))");
  SetExpr top = top_zero_infty_set(m);
  CHECK(measure_of(m, top).value.is_inf());
  CHECK_FALSE(finitely_approximable(m, parse_set("(ival 0 2)", m.space())));
  CHECK(finitely_approximable(m, parse_set("(ival 2 3)", m.space())));
}
