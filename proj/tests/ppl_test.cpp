#include <doctest.h>

#include "sfk/dsl.hpp"
#include "sfk/errors.hpp"
#include "sfk/ppl.hpp"

using namespace sfk;

namespace {

const Error* caught(auto&& f, std::unique_ptr<Error>& slot) {
  try {
    f();
  } catch (const SyntaxError& e) {
    slot = std::make_unique<SyntaxError>(e);
  } catch (const Error& e) {
    slot = std::make_unique<Error>(e);
  }
  return slot.get();
}

}  // namespace

TEST_CASE("programs print back to themselves") {
  for (const char* src : {"let x = sample(normal 0 1) in score(pdf_normal(1, x, 1)); x",
                          "let p = sample(uniform 0 1) in score(p); score(1 - p); p",
                          "if sample(bernoulli 1/3) == 1 then 2 else fail",
                          "let y = sample({(normal 1 1)}) in score({(pdf-normal id 0 1)}(y)); (y, y)",
                          "# comment\nsample(sum (scale 1/2 (dirac 0)) (normal 0 1))"}) {
    std::string once = ppl::print(ppl::parse_program(src));
    CHECK(ppl::print(ppl::parse_program(once)) == once);
  }
}

TEST_CASE("scope, type and syntax errors") {
  std::unique_ptr<Error> e;
  REQUIRE(caught([] { ppl::parse_and_check("let x = 1 in y"); }, e));
  CHECK(e->code() == Errc::ScopeError);
  REQUIRE(caught([] { ppl::parse_and_check("if 1 == 1 then (1, 2) else 3"); }, e));
  CHECK(e->code() == Errc::TypeError);
  REQUIRE(caught([] { ppl::parse_program("let x = in x"); }, e));
  auto* se = dynamic_cast<SyntaxError*>(e.get());
  REQUIRE(se);
  CHECK(se->line() == 1);
  CHECK(se->column() == 9);
}

TEST_CASE("denotation of a finite program") {
  auto p = ppl::parse_and_check("let x = sample(bernoulli 1/4) in score(2); x");
  MeasureExpr m = ppl::denote_measure(p);
  CHECK(measure_of(m, parse_set("(nats 1)", m.space())).value == ExtReal::exact(Rational(1, 2)));
  CHECK(total_mass(m).value == ExtReal(2));
}

TEST_CASE("let reordering preserves the denotation") {
  auto a = ppl::parse_and_check("let x = sample(bernoulli 1/3) in let y = sample(binomial 3 1/2) in score(y); (x, y)");
  auto b = ppl::parse_and_check("let y = sample(binomial 3 1/2) in let x = sample(bernoulli 1/3) in score(y); (x, y)");
  auto c = ppl::parse_and_check("let y = sample(binomial 3 1/2) in let x = sample(bernoulli 1/2) in score(y); (x, y)");
  CHECK(ppl::equivalent(a, b, ppl::EquivMode::ExactFinite));
  CHECK_FALSE(ppl::equivalent(a, c, ppl::EquivMode::ExactFinite));
}

TEST_CASE("importance transform") {
  ppl::TermPtr t = ppl::parse_program("let x = sample(normal 0 1) in x");
  ppl::TermPtr same = ppl::importance_transform(t, 0, normal(0, 1));
  CHECK(ppl::print(same).find("score({1}(y))") != std::string::npos);
  ppl::TermPtr shifted = ppl::importance_transform(t, 0, normal(1, 1));
  CHECK(ppl::equivalent(ppl::Program::check(t), ppl::Program::check(shifted), ppl::EquivMode::Probe));
  CHECK(ppl::find_site(t, normal(0, 1)) == std::optional<std::size_t>(0));
}

TEST_CASE("sampler is reproducible and carries weights") {
  auto p = ppl::parse_and_check("score(3); sample(uniform 0 1)");
  auto a = ppl::run_sampler(p, 5, 20);
  auto b = ppl::run_sampler(p, 5, 20);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].weight == ExtReal(3));
  }
}

TEST_CASE("rejection sampler bound check") {
  MeasureExpr target = parse_measure("(beta 2 2)");
  auto r = ppl::rejection_sampler(target, uniform(0, 1), 1.5, 1, 2000);
  CHECK(r.samples.size() == 2000);
  CHECK(r.acceptance() == doctest::Approx(2.0 / 3.0).epsilon(0.05));
  std::unique_ptr<Error> e;
  REQUIRE(caught([&] { ppl::rejection_sampler(target, uniform(0, 1), 0.5, 1, 10); }, e));
  CHECK(e->code() == Errc::BoundViolation);
}
