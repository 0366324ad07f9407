#include <cmath>

#include <doctest.h>

#include "sfk/calculus.hpp"
#include "sfk/dsl.hpp"
#include "sfk/errors.hpp"

using namespace sfk;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Unsupported;
}

double w(const FnExpr& f, double x) { return eval_weight(f, Point::real(x)).to_double(); }

}  // namespace

TEST_CASE("derivative of a rescaled measure") {
  MeasureExpr u = uniform(0, 1);
  MeasureRn r = rn_derivative(MeasureExpr::weighted(ExtReal(2), u), u);
  CHECK(w(r.derivative, 0.25) == doctest::Approx(2.0));
  CHECK(measure_of(u, r.infty_region).value.is_zero());
}

TEST_CASE("normal density against Lebesgue") {
  MeasureRn r = rn_derivative(normal(0, 1), lebesgue());
  for (double x : {-2.0, 0.0, 0.7}) {
    double want = std::exp(-x * x / 2) / std::sqrt(2 * M_PI);
    CHECK(w(r.derivative, x) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("counterexample: normal against a countable sum of Lebesgue copies") {
  CHECK(code_of([&] { rn_derivative(normal(0, 1), seq_constant_repeat(lebesgue())); }) ==
        Errc::NotZeroInftyAbsCont);
}

TEST_CASE("scoring by the derivative re-denotes the measure") {
  MeasureExpr nu = parse_measure("(scale inf (uniform 0 1))");
  MeasureExpr nup = parse_measure("(scale inf (uniform 0 1))");
  MeasureRn r = rn_derivative(nup, nu);
  MeasureExpr back = MeasureExpr::reweight(nu, r.derivative);
  SetExpr a = parse_set("(ival 0 1/2)", nu.space());
  CHECK(measure_of(back, a).value == measure_of(nup, a).value);
}

TEST_CASE("three-part decomposition") {
  MeasureExpr k = parse_measure("(sum (uniform 0 1) (sum (uniform 2 3) (dirac 5)))");
  MeasureExpr l = parse_measure("(sum (uniform 0 1) (scale inf (uniform 2 3)))");
  MeasureParts p = lebesgue_decompose(k, l);
  CHECK(total_mass(p.abs_cont).value.to_double() == doctest::Approx(1.0));
  CHECK(total_mass(p.inf_singular).value.to_double() == doctest::Approx(1.0));
  CHECK(total_mass(p.singular).value.to_double() == doctest::Approx(1.0));
  CHECK(measure_of(l, p.singular_witness).value.is_zero());
  CHECK(inf_singular(p.inf_singular, l));
}

TEST_CASE("sigma-finite mass over an infinite atom cannot be disintegrated") {
  MeasureExpr mu = parse_measure("(lebesgue 0 inf)");
  FnExpr bang = FnExpr::constant(Point::unit(), SpaceExpr::unit());
  MeasureExpr nu = MeasureExpr::push(mu, bang);
  CHECK(code_of([&] { disintegrate(mu, nu, bang); }) == Errc::InftyCompatibilityFailed);
}
