#include <doctest.h>

#include "sfk/errors.hpp"
#include "sfk/oracle.hpp"

using namespace sfk;

namespace {

const SpaceExpr kAb = SpaceExpr::fin({"a", "b"});
const SpaceExpr kAbc = SpaceExpr::fin({"a", "b", "c"});

ExtReal q(long n, long d = 1) { return ExtReal::exact(Rational(n, d)); }

DenseMeasure dm(const SpaceExpr& s, std::vector<ExtReal> w) {
  DenseMeasure m = DenseMeasure::zeros(s);
  m.w = std::move(w);
  return m;
}

DenseKernel dk(const SpaceExpr& dom, const SpaceExpr& cod, std::vector<std::vector<ExtReal>> rows) {
  DenseKernel k{dom, cod, {}};
  for (auto& r : rows) k.rows.push_back(dm(cod, std::move(r)));
  return k;
}

}  // namespace

TEST_CASE("o_compose") {
  DenseKernel k = dk(kAb, kAb, {{q(1, 3), q(2, 3)}, {q(2, 3), q(1, 3)}});
  CHECK(o_compose(DenseKernel::identity(kAb), k) == k);
  CHECK(o_compose(k, k) == dk(kAb, kAb, {{q(5, 9), q(4, 9)}, {q(4, 9), q(5, 9)}}));
  DenseKernel inf_row = dk(kAb, kAb, {{ExtReal::inf(), 0}, {1, 1}});
  DenseKernel zero_col = dk(kAb, kAb, {{0, 1}, {0, 1}});
  CHECK(o_compose(inf_row, zero_col) == dk(kAb, kAb, {{0, ExtReal::inf()}, {0, 2}}));
}

TEST_CASE("o_rn") {
  DenseMeasure nu = dm(kAbc, {1, q(1, 2), 0});
  DenseMeasure two = dm(kAbc, {2, 1, 0});
  auto d = o_rn(two, nu);
  CHECK(d[0] == ExtReal(2));
  CHECK(d[1] == ExtReal(2));
  CHECK(o_score(nu, d) == two);
  auto di = o_rn(dm(kAb, {ExtReal::inf(), 1}), dm(kAb, {ExtReal::inf(), 1}));
  CHECK(di[0] == ExtReal(1));
  bool raised = false;
  try {
    o_rn(dm(kAb, {3, 1}), dm(kAb, {ExtReal::inf(), 1}));
  } catch (const Error& e) {
    raised = e.code() == Errc::NotZeroInftyAbsCont;
  }
  CHECK(raised);
}

TEST_CASE("o_decompose") {
  DenseMeasure k = dm(kAbc, {1, 1, 1});
  DenseParts p = o_decompose(k, dm(kAbc, {ExtReal::inf(), 1, 0}));
  CHECK(p.abs_cont == dm(kAbc, {0, 1, 0}));
  CHECK(p.inf_singular == dm(kAbc, {1, 0, 0}));
  CHECK(p.singular == dm(kAbc, {0, 0, 1}));

  DenseMeasure same = dm(kAbc, {q(1, 2), 2, 0});
  DenseParts s = o_decompose(same, same);
  CHECK(s.abs_cont == same);
  CHECK(s.inf_singular == DenseMeasure::zeros(kAbc));
  CHECK(s.singular == DenseMeasure::zeros(kAbc));

  DenseParts i = o_decompose(dm(kAb, {ExtReal::inf(), 1}), dm(kAb, {ExtReal::inf(), 1}));
  CHECK(i.abs_cont == dm(kAb, {ExtReal::inf(), 1}));
  CHECK(i.inf_singular == DenseMeasure::zeros(kAb));
}

TEST_CASE("o_disintegrate") {
  SpaceExpr xy = SpaceExpr::prod(kAb, kAb);
  DenseDisintegration d = o_disintegrate(dm(xy, {1, 1, 2, 0}));
  CHECK(d.kernel.rows[0] == dm(kAb, {q(1, 2), q(1, 2)}));
  CHECK(d.kernel.rows[1] == dm(kAb, {1, 0}));
  CHECK(d.marginal == dm(kAb, {2, 2}));

  DenseDisintegration z = o_disintegrate(dm(xy, {0, 0, 1, 3}));
  CHECK(z.arbitrary[0]);
  CHECK_FALSE(z.arbitrary[1]);
  CHECK(z.kernel.rows[1] == dm(kAb, {q(1, 4), q(3, 4)}));

  DenseDisintegration ind = o_disintegrate(dm(xy, {q(1, 6), q(1, 3), q(1, 6), q(1, 3)}));
  CHECK(ind.kernel.rows[0] == dm(kAb, {q(1, 3), q(2, 3)}));
  CHECK(ind.kernel.rows[1] == ind.kernel.rows[0]);
}
