#include <cmath>

#include <doctest.h>

#include "gen.hpp"
#include "sfk/dsl.hpp"
#include "sfk/oracle.hpp"

using namespace sfk;

namespace {

EvalResult eval(const char* m, const char* set) {
  MeasureExpr mm = parse_measure(m);
  return measure_of(mm, parse_set(set, mm.space()));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("exact values") {
  CHECK(eval_result_str(eval("(lebesgue -inf inf)", "(ival 2 5)")) == "3 exact");
  CHECK(eval_result_str(eval("(scale inf (dirac 0))", "(atom 0)")) == "inf exact");
  CHECK(eval_result_str(eval("(uniform 0 2)", "(ival 1/2 1)")) == "1/4 exact");
  CHECK(eval_result_str(eval("(bernoulli 1/3)", "(nats 1)")) == "1/3 exact");
  CHECK(eval_result_str(eval("(binomial 5 1/2)", "(nats 2)")) == "5/16 exact");
  CHECK(eval_result_str(eval("(counting-nat (upto 9))", "(upto 4)")) == "5 exact");
  CHECK(eval_result_str(eval("(product (bernoulli 1/2) (uniform 0 1))", "(rect (nats 1) (ival 0 1/2))")) ==
        "1/4 exact");
  CHECK(eval_result_str(eval("(scale inf (uniform 0 1))", "(ival 2 3)")) == "0 exact");
  CHECK(eval_result_str(eval("(sum (lebesgue 0 1) (scale inf (dirac 0)))", "(atom 0)")) == "inf exact");
}

TEST_CASE("continuous values against closed forms") {
  for (double a : {-2.0, -0.5, 0.0, 1.25}) {
    for (double w : {0.5, 1.0, 3.0}) {
      EvalResult r = measure_of(normal(0, 1), SetExpr::real(RealSet::closed(Rational(a), Rational(a + w))));
      double want = normal_cdf(a + w) - normal_cdf(a);
      CHECK(r.value.to_double() == doctest::Approx(want).epsilon(1e-9));
      CHECK(r.mode != EvalMode::Diverges);
    }
  }
  EvalResult p = eval("(poisson 2)", "(nats 0 1)");
  CHECK(p.value.to_double() == doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("integrals") {
  MeasureExpr u = uniform(0, 1);
  EvalResult mean = integrate(u, parse_fn("id", u.space()));
  CHECK(mean.value.to_double() == doctest::Approx(0.5).epsilon(1e-12));
  MeasureExpr po = poisson(3);
  CHECK(integrate(po, parse_fn("id", po.space())).value.to_double() == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(total_mass(lebesgue()).value.is_inf());
}

TEST_CASE("finite measures agree with the brute-force oracle") {
  test::Gen g(5);
  for (int i = 0; i < 200; ++i) {
    SpaceExpr s = random_fin_space(g.rng(), 1, 6);
    DenseMeasure d = random_dense(g.rng(), s, 0.15);
    MeasureExpr m = to_measure(d);
    std::vector<bool> members;
    for (std::size_t j = 0; j < d.w.size(); ++j) members.push_back(g.coin());
    SetExpr a = SetExpr::fin(s, members);
    EvalResult r = measure_of(m, a);
    CHECK(r.mode == EvalMode::Exact);
    CHECK(r.value.identical(d.of(a)));
  }
}
