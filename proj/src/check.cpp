#include "sfk/check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "sfk/calculus.hpp"
#include "sfk/density.hpp"
#include "sfk/errors.hpp"
#include "sfk/oracle.hpp"
#include "sfk/ppl.hpp"
#include "sfk/randomise.hpp"

namespace sfk {
namespace {

struct Suite {
  SuiteReport& report;
  std::mt19937_64 rng;
  EvalConfig cfg;

  // Records one case; a thrown Error counts as a failure with its message.
  void run_case(const std::function<std::string()>& body) {
    std::size_t i = report.cases++;
    std::string detail;
    try {
      detail = body();
    } catch (const Error& e) {
      detail = std::string("unexpected ") + errc_name(e.code()) + ": " + e.what();
    }
    if (!detail.empty()) report.failures.push_back({i, detail});
  }

  template <class T>
  T pick(const std::vector<T>& xs) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
  }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  Rational small_rational(int lo, int hi, int max_den = 4) {
    int den = uniform_int(1, max_den);
    Rational q(uniform_int(lo * den, hi * den), den);
    q.canonicalize();
    return q;
  }
};

std::string expect_error(Errc code, const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    if (e.code() == code) return {};
    return std::string("expected ") + errc_name(code) + ", got " + errc_name(e.code()) + ": " + e.what();
  }
  return std::string("expected ") + errc_name(code) + ", got success";
}

bool near(const ExtReal& a, const ExtReal& b, double tol) {
  if (a.is_inf() || b.is_inf()) return a.is_inf() && b.is_inf();
  double x = a.to_double();
  double y = b.to_double();
  return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
}

std::vector<SetExpr> half_line_probes(std::size_t n, double lo, double hi) {
  std::vector<SetExpr> out;
  for (std::size_t i = 0; i < n; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back(SetExpr::real(RealSet::interval(std::nullopt, Rational(t), false, true)));
  }
  return out;
}

// ExtReal lattice: a value is (is_inf, q).
struct Lat {
  bool inf;
  Rational q;
};

void extreal_suite(Suite& s) {
  std::vector<Lat> lattice;
  for (auto q : {Rational(0), Rational(1, 3), Rational(1, 2), Rational(1), Rational(2), Rational(7, 3), Rational(5),
                 Rational(10), Rational(1, 1000), Rational(1000000), Rational(22, 7)})
    lattice.push_back({false, q});
  lattice.push_back({true, Rational(0)});
  auto to_ext = [](const Lat& v) { return v.inf ? ExtReal::inf() : ExtReal::exact(v.q); };
  auto same = [](const ExtReal& got, const Lat& want) {
    if (want.inf) return got.is_inf();
    return !got.is_inf() && got.is_exact() && got.rational() == want.q;
  };
  for (const auto& a : lattice) {
    for (const auto& b : lattice) {
      s.run_case([&]() -> std::string {
        ExtReal x = to_ext(a);
        ExtReal y = to_ext(b);
        Lat sum = (a.inf || b.inf) ? Lat{true, 0} : Lat{false, a.q + b.q};
        Lat prod;
        if ((!a.inf && a.q == 0) || (!b.inf && b.q == 0)) prod = {false, 0};
        else if (a.inf || b.inf) prod = {true, 0};
        else prod = {false, a.q * b.q};
        if (!same(x + y, sum)) return "add " + x.str() + " " + y.str() + " gave " + (x + y).str();
        if (!same(x * y, prod)) return "mul " + x.str() + " " + y.str() + " gave " + (x * y).str();
        if (!same(y * x, prod)) return "mul not commutative at " + x.str() + " " + y.str();
        if (a.inf && b.inf) {
          return expect_error(Errc::Indeterminate, [&] { ext_div(x, y); });
        }
        Lat quo;
        if (b.inf) quo = {false, 0};
        else if (a.inf) quo = {true, 0};
        else if (b.q == 0) quo = a.q == 0 ? Lat{false, 0} : Lat{true, 0};
        else quo = {false, a.q / b.q};
        ExtReal d = ext_div(x, y);
        if (!same(d, quo)) return "div " + x.str() + " " + y.str() + " gave " + d.str();
        bool lt = a.inf ? false : (b.inf ? true : a.q < b.q);
        if ((x < y) != lt) return "order " + x.str() + " " + y.str();
        return {};
      });
    }
  }
}

void fubini_suite(Suite& s) {
  for (int i = 0; i < 200; ++i) {
    s.run_case([&]() -> std::string {
      SpaceExpr x = random_fin_space(s.rng, 1, 4);
      SpaceExpr y = random_fin_space(s.rng, 1, 4);
      SpaceExpr z = random_fin_space(s.rng, 1, 4);
      DenseKernel k = random_dense_kernel(s.rng, x, y);
      DenseKernel l = random_dense_kernel(s.rng, x, z);
      KernelExpr kk = to_kernel(k);
      KernelExpr ll = to_kernel(l);
      auto left = dense_of(KernelExpr::prod_l(kk, lift(ll, y)));
      auto right = dense_of(KernelExpr::prod_r(kk, ll));
      DenseKernel yz = o_prod_yz(k, l);
      DenseKernel zy = o_prod_zy(k, l);
      if (!(yz == zy)) return "oracle iterated sums differ";
      if (!left || !right) return "product has no finite table";
      if (!(*left == yz)) return "left product differs from oracle";
      if (!(*right == yz)) return "right product differs from oracle";
      return {};
    });
  }
}

void diagonal_suite(Suite& s) {
  MeasureExpr m = MeasureExpr::weighted(ExtReal::inf(), lebesgue());
  SpaceExpr r = SpaceExpr::real();
  KernelExpr first = KernelExpr::constant(m, SpaceExpr::unit());
  KernelExpr second = KernelExpr::constant(m, SpaceExpr::prod(SpaceExpr::unit(), r));
  KernelExpr prod = KernelExpr::push(KernelExpr::prod_l(first, second), FnExpr::id());
  FnExpr diag = FnExpr::compose(FnExpr::indicator(SetExpr::real(RealSet::point(Rational(0)))),
                                FnExpr::sub(FnExpr::proj1(), FnExpr::proj2()));
  s.run_case([&]() -> std::string {
    MeasureExpr joint = eval_kernel(prod, Point::unit());
    EvalResult v = integrate(joint, diag, s.cfg);
    if (v.mode != EvalMode::Exact || !v.value.is_zero()) return "diagonal integral " + eval_result_str(v);
    return {};
  });
  s.run_case([&]() -> std::string {
    // The same product charges every rectangle of positive area with infinity.
    MeasureExpr joint = eval_kernel(prod, Point::unit());
    SetExpr box = SetExpr::rect(SetExpr::real(RealSet::closed(0, 1)), SetExpr::real(RealSet::closed(0, 1)));
    EvalResult v = measure_of(joint, box, s.cfg);
    if (!v.value.is_inf()) return "unit square " + eval_result_str(v);
    return {};
  });
}

void composition_suite(Suite& s) {
  for (int i = 0; i < 500; ++i) {
    s.run_case([&]() -> std::string {
      SpaceExpr x = random_fin_space(s.rng, 1, 4);
      SpaceExpr y = random_fin_space(s.rng, 1, 4);
      SpaceExpr z = random_fin_space(s.rng, 1, 4);
      DenseKernel k = random_dense_kernel(s.rng, x, y);
      DenseKernel l = random_dense_kernel(s.rng, y, z);
      KernelExpr c = KernelExpr::compose(to_kernel(k), to_kernel(l));
      DenseKernel want = o_compose(k, l);
      if (i % 5 == 0) {
        SpaceExpr w = random_fin_space(s.rng, 1, 3);
        DenseKernel m = random_dense_kernel(s.rng, z, w);
        c = KernelExpr::compose(c, to_kernel(m));
        want = o_compose(want, m);
      }
      MeasureClass cls = classify_kernel(c, s.cfg);
      if (!class_implies(cls, MeasureClass::SFinite)) return std::string("class ") + measure_class_name(cls);
      auto got = dense_of(c);
      if (!got) return "composite has no finite table";
      if (!(*got == want)) return "composite differs from oracle matrix product";
      return {};
    });
  }
}

DenseMeasure scaled(const DenseMeasure& m, const ExtReal& c) {
  DenseMeasure out = m;
  for (auto& v : out.w) v = v * c;
  return out;
}

void rn_roundtrip_suite(Suite& s) {
  for (int i = 0; i < 250; ++i) {
    s.run_case([&]() -> std::string {
      SpaceExpr y = random_fin_space(s.rng, 1, 6);
      DenseMeasure nu = random_dense(s.rng, y);
      std::vector<ExtReal> d;
      for (std::size_t j = 0; j < nu.w.size(); ++j) d.push_back(random_weight(s.rng));
      DenseMeasure nu_prime = o_score(nu, d);
      MeasureExpr n = to_measure(nu);
      MeasureRn rn = rn_derivative(to_measure(nu_prime), n, s.cfg);
      auto back = dense_of(MeasureExpr::reweight(n, rn.derivative));
      if (!back) return "rescored measure has no table";
      if (!(*back == nu_prime)) return "score(nu, d) = " + back->str() + " but nu' = " + nu_prime.str();
      if (!(o_score(nu, o_rn(nu_prime, nu)) == nu_prime)) return "oracle roundtrip fails";
      return {};
    });
  }
  struct Pair {
    MeasureExpr nu_prime;
    MeasureExpr nu;
  };
  auto continuous = [&]() -> Pair {
    Rational a = s.small_rational(-3, 1);
    Rational b = a + s.small_rational(1, 3);
    double m = static_cast<double>(s.uniform_int(-2, 2));
    double sd = static_cast<double>(s.uniform_int(1, 3));
    switch (s.uniform_int(0, 7)) {
      case 0:
        return {uniform(a, b), lebesgue()};
      case 1:
        return {normal(m, sd), lebesgue()};
      case 2:
        return {normal(m, sd), normal(0, 1)};
      case 3:
        return {beta_dist(s.uniform_int(1, 4), s.uniform_int(1, 4)), uniform(0, 1)};
      case 4:
        return {uniform(0, 1), beta_dist(2, 2)};
      case 5:
        return {MeasureExpr::weighted(ExtReal::inf(), uniform(a, b)), lebesgue()};
      case 6:
        return {MeasureExpr::sum({uniform(a, b), dirac(Point::real(0.5), SpaceExpr::real())}),
                MeasureExpr::sum({lebesgue(), dirac(Point::real(0.5), SpaceExpr::real())})};
      default:
        return {MeasureExpr::weighted(ExtReal::inf(), uniform(a, b)),
                MeasureExpr::weighted(ExtReal::inf(), lebesgue(RealSet::closed(a - 1, b + 1)))};
    }
  };
  auto probes = half_line_probes(20, -4.0, 4.0);
  for (int i = 0; i < 50; ++i) {
    s.run_case([&]() -> std::string {
      Pair p = continuous();
      MeasureRn rn = rn_derivative(p.nu_prime, p.nu, s.cfg);
      MeasureExpr back = MeasureExpr::reweight(p.nu, rn.derivative);
      for (const auto& a : probes) {
        ExtReal want = measure_of(p.nu_prime, a, s.cfg).value;
        ExtReal got = measure_of(back, a, s.cfg).value;
        if (!near(got, want, 1e-6))
          return p.nu_prime.str() + " vs " + p.nu.str() + " on " + a.str() + ": " + got.str() + " != " + want.str();
      }
      return {};
    });
  }
}

void rn_counterexample_suite(Suite& s) {
  s.run_case([&] {
    return expect_error(Errc::NotZeroInftyAbsCont,
                        [&] { rn_derivative(normal(0, 1), seq_constant_repeat(lebesgue()), s.cfg); });
  });
  s.run_case([&] {
    DenseMeasure nu = DenseMeasure::zeros(SpaceExpr::fin({"a"}));
    DenseMeasure nu_prime = nu;
    nu.w[0] = ExtReal::inf();
    nu_prime.w[0] = ExtReal(3);
    return expect_error(Errc::NotZeroInftyAbsCont, [&] { rn_derivative(to_measure(nu_prime), to_measure(nu), s.cfg); });
  });
}

void rn_uniqueness_suite(Suite& s) {
  SpaceExpr y = SpaceExpr::fin({"a", "b", "c", "d"});
  std::vector<Point> pts = enumerate(y);
  const std::vector<ExtReal> nu_vals = {ExtReal(0), ExtReal(1), ExtReal::inf()};
  const std::vector<ExtReal> f_vals = {ExtReal(0), ExtReal(1), ExtReal(2), ExtReal::inf()};
  auto table = [&](const std::vector<ExtReal>& w) {
    std::vector<std::pair<Point, ExtReal>> e;
    for (std::size_t i = 0; i < pts.size(); ++i) e.emplace_back(pts[i], w[i]);
    return FnExpr::table(e, ExtReal(0));
  };
  for (int code = 0; code < 81; ++code) {
    DenseMeasure nu = DenseMeasure::zeros(y);
    for (int i = 0, c = code; i < 4; ++i, c /= 3) nu.w[i] = nu_vals[c % 3];
    for (int rep = 0; rep < 2; ++rep) {
      s.run_case([&]() -> std::string {
        std::vector<ExtReal> d0;
        for (int i = 0; i < 4; ++i) d0.push_back(s.pick(f_vals));
        DenseMeasure nu_prime = o_score(nu, d0);
        MeasureExpr n = to_measure(nu);
        FnExpr g = rn_derivative(to_measure(nu_prime), n, s.cfg).derivative;
        for (int fc = 0; fc < 256; ++fc) {
          std::vector<ExtReal> f;
          for (int i = 0, c = fc; i < 4; ++i, c /= 4) f.push_back(f_vals[c % 4]);
          bool redenotes = o_score(nu, f) == nu_prime;
          bool equal = rn_equal(table(f), g, n, s.cfg);
          if (redenotes != equal)
            return "nu " + nu.str() + ", f " + table(f).str() + ": rn_equal " + (equal ? "true" : "false") +
                   ", re-denotes " + (redenotes ? "true" : "false");
        }
        return {};
      });
    }
  }
}

std::string compare_parts(const MeasureParts& p, const DenseParts& want) {
  auto a = dense_of(p.abs_cont);
  auto i = dense_of(p.inf_singular);
  auto s = dense_of(p.singular);
  if (!a || !i || !s) return "parts have no finite table";
  if (!(*a == want.abs_cont)) return "abs-cont part " + a->str() + " want " + want.abs_cont.str();
  if (!(*i == want.inf_singular)) return "inf-singular part " + i->str() + " want " + want.inf_singular.str();
  if (!(*s == want.singular)) return "singular part " + s->str() + " want " + want.singular.str();
  return {};
}

DenseMeasure halved(const DenseMeasure& m) { return scaled(m, ExtReal::exact(Rational(1, 2))); }

void decomposition_suite(Suite& s) {
  for (int n = 0; n < 200; ++n) {
    s.run_case([&]() -> std::string {
      SpaceExpr y = random_fin_space(s.rng, 1, 6);
      DenseMeasure k = random_dense(s.rng, y);
      DenseMeasure l = random_dense(s.rng, y);
      DenseParts want = o_decompose(k, l);
      DenseMeasure total = want.abs_cont;
      for (std::size_t i = 0; i < total.w.size(); ++i) total.w[i] = want.abs_cont.w[i] + want.inf_singular.w[i] + want.singular.w[i];
      if (!(total == k)) return "oracle parts do not sum to k";
      return compare_parts(lebesgue_decompose(to_measure(k), to_measure(l), s.cfg), want);
    });
  }
  // Re-presentations of the same pair give the same parts.
  for (int n = 0; n < 40; ++n) {
    s.run_case([&]() -> std::string {
      SpaceExpr y = random_fin_space(s.rng, 1, 6);
      DenseMeasure k = random_dense(s.rng, y);
      DenseMeasure l = random_dense(s.rng, y);
      MeasureExpr k2 = MeasureExpr::sum({to_measure(halved(k)), to_measure(halved(k))});
      MeasureExpr l2 = MeasureExpr::weighted(ExtReal(2), to_measure(halved(l)));
      return compare_parts(lebesgue_decompose(k2, l2, s.cfg), o_decompose(k, l));
    });
  }
  auto probes = half_line_probes(25, -1.0, 6.0);
  auto same_on_probes = [&](const MeasureExpr& a, const MeasureExpr& b) {
    for (const auto& p : probes) {
      if (!near(measure_of(a, p, s.cfg).value, measure_of(b, p, s.cfg).value, 1e-9)) return false;
    }
    return true;
  };
  for (int n = 0; n < 10; ++n) {
    s.run_case([&]() -> std::string {
      Rational a = s.small_rational(0, 2);
      Rational mid = a + Rational(1, 2);
      Rational b = a + 1;
      MeasureExpr u = uniform(a, b);
      MeasureExpr u_split = MeasureExpr::sum({MeasureExpr::weighted(ExtReal::exact(Rational(1, 2)), uniform(a, mid)),
                                              MeasureExpr::weighted(ExtReal::exact(Rational(1, 2)), uniform(mid, b))});
      MeasureExpr l = MeasureExpr::sum({MeasureExpr::weighted(ExtReal::inf(), uniform(a, mid)), uniform(4, 5)});
      MeasureExpr atom = dirac(Point::real(5.5), SpaceExpr::real());
      MeasureExpr k1 = MeasureExpr::sum({u, uniform(4, 5), atom});
      MeasureExpr k2 = MeasureExpr::sum({u_split, atom, uniform(4, 5)});
      MeasureParts p1 = lebesgue_decompose(k1, l, s.cfg);
      MeasureParts p2 = lebesgue_decompose(k2, l, s.cfg);
      if (!same_on_probes(p1.abs_cont, p2.abs_cont)) return "abs-cont parts differ";
      if (!same_on_probes(p1.inf_singular, p2.inf_singular)) return "inf-singular parts differ";
      if (!same_on_probes(p1.singular, p2.singular)) return "singular parts differ";
      return {};
    });
  }
  s.run_case([&]() -> std::string {
    MeasureExpr l = MeasureExpr::sum({MeasureExpr::weighted(ExtReal::inf(), uniform(0, 1)), uniform(2, 3)});
    MeasureExpr k = MeasureExpr::sum({uniform(0, 1), uniform(2, 3), dirac(Point::real(5), SpaceExpr::real())});
    MeasureParts p = lebesgue_decompose(k, l, s.cfg);
    if (!same_on_probes(p.abs_cont, uniform(2, 3))) return "abs-cont part is " + p.abs_cont.str();
    if (!same_on_probes(p.inf_singular, uniform(0, 1))) return "inf-singular part is " + p.inf_singular.str();
    if (!same_on_probes(p.singular, dirac(Point::real(5), SpaceExpr::real()))) return "singular part is " + p.singular.str();
    if (!measure_abs_continuous(p.abs_cont, l, AbsMode::ZeroInfty, s.cfg)) return "abs-cont part not 0-inf-abs-cont";
    if (!inf_singular(p.inf_singular, l, s.cfg)) return "middle part not inf-singular";
    auto w = singular_witness(p.singular, l, s.cfg);
    if (!w) return "singular part has no witness";
    if (!measure_of(l, *w, s.cfg).value.is_zero()) return "reference charges the witness";
    if (!measure_of(p.singular, w->complement(), s.cfg).value.is_zero()) return "singular part escapes the witness";
    MeasureExpr sum = MeasureExpr::sum({p.abs_cont, p.inf_singular, p.singular});
    if (!same_on_probes(sum, k)) return "parts do not sum to k";
    return {};
  });
}

void disintegration_suite(Suite& s) {
  for (int n = 0; n < 100; ++n) {
    s.run_case([&]() -> std::string {
      SpaceExpr x = random_fin_space(s.rng, 1, 4);
      SpaceExpr t = random_fin_space(s.rng, 1, 4);
      DenseMeasure joint = random_dense(s.rng, SpaceExpr::prod(x, t), 0.0);
      DenseDisintegration want = o_disintegrate(joint);
      MeasureExpr mu = to_measure(joint);
      MeasureExpr nu = MeasureExpr::push(mu, FnExpr::proj1());
      Disintegration got = disintegrate(mu, nu, FnExpr::proj1(), s.cfg);
      auto xs = enumerate(x);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (want.arbitrary[i]) continue;
        auto row = dense_of(MeasureExpr::push(eval_kernel(got.kernel, xs[i]), FnExpr::proj2()));
        if (!row) return "row has no table";
        if (!(*row == want.kernel.rows[i])) return "row " + xs[i].str() + " = " + row->str() + " want " + want.kernel.rows[i].str();
      }
      return {};
    });
  }
  s.run_case([&]() -> std::string {
    SpaceExpr nat = SpaceExpr::nat();
    FnExpr th = FnExpr::proj2();
    FnExpr f = FnExpr::mul(FnExpr::pmf_binomial(FnExpr::proj1(), FnExpr::lit(Rational(5)), th),
                           FnExpr::pdf_beta(th, FnExpr::lit(Rational(2)), FnExpr::lit(Rational(3))));
    MeasureExpr mu = MeasureExpr::reweight(MeasureExpr::product(counting_nat(), lebesgue_on(0, 1)), f);
    MeasureExpr nu = MeasureExpr::push(mu, FnExpr::proj1());
    Disintegration d = disintegrate(mu, nu, FnExpr::proj1(), s.cfg);
    MeasureExpr post = MeasureExpr::push(eval_kernel(d.kernel, Point::nat(2)), FnExpr::proj2());
    FnExpr dens = rn_derivative(post, lebesgue_on(0, 1), s.cfg).derivative;
    // Composite Simpson on the slice theta |-> C(5,2) theta^2 (1-theta)^3 * 12 theta (1-theta)^2.
    auto slice = [](double q) { return 10.0 * q * q * std::pow(1 - q, 3) * 12.0 * q * std::pow(1 - q, 2); };
    const int m = 20000;
    double acc = slice(0) + slice(1);
    for (int j = 1; j < m; ++j) acc += (j % 2 ? 4.0 : 2.0) * slice(static_cast<double>(j) / m);
    double marginal = acc / (3.0 * m);
    for (int j = 0; j <= 20; ++j) {
      double q = j / 20.0;
      double want = slice(q) / marginal;
      double got = eval_weight(dens, Point::real(q)).to_double();
      if (std::abs(got - want) > 1e-6)
        return "posterior density at " + double_str(q) + ": " + double_str(got) + " want " + double_str(want);
    }
    return {};
  });
  s.run_case([&] {
    MeasureExpr mu = lebesgue();
    FnExpr bang = FnExpr::constant(Point::unit(), SpaceExpr::unit());
    MeasureExpr nu = MeasureExpr::push(mu, bang);
    return expect_error(Errc::InftyCompatibilityFailed, [&] { disintegrate(mu, nu, bang, s.cfg); });
  });
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

void randomise_suite(Suite& s) {
  SpaceExpr u = SpaceExpr::unit();
  // Discrete pushforward lengths.
  for (int n = 0; n < 30; ++n) {
    s.run_case([&]() -> std::string {
      SpaceExpr y = random_fin_space(s.rng, 1, 5);
      DenseMeasure m = random_dense(s.rng, y, 0.0);
      bool sub = n % 3 == 0;
      ExtReal tot = m.total();
      if (tot.is_zero()) {
        m.w[0] = ExtReal(1);
        tot = ExtReal(1);
      }
      ExtReal scale = ext_div(ExtReal(1), tot);
      if (sub) scale = scale * ExtReal::exact(Rational(2, 3));
      DenseMeasure p = scaled(m, scale);
      KernelExpr k = KernelExpr::constant(to_measure(p), u);
      Randomiser r = sub ? randomise_subprob(k, 1e-9, s.cfg) : randomise_prob(k, 1e-9, s.cfg);
      SpaceExpr dom = SpaceExpr::prod(u, source_space(r.source));
      for (std::size_t i = 0; i < p.points.size(); ++i) {
        SetExpr pre = preimage(r.det, dom, SetExpr::singleton(y, p.points[i])).section(Point::unit());
        ExtReal len = pre.real_set().length();
        if (!(len == p.w[i])) return "preimage of " + p.points[i].str() + " has length " + len.str() + " want " + p.w[i].str();
      }
      return {};
    });
  }
  s.run_case([&]() -> std::string {
    Randomiser r = randomise_prob(KernelExpr::constant(normal(0, 1), u), 1e-9, s.cfg);
    for (int j = 0; j <= 20; ++j) {
      double t = -3.0 + 0.3 * j;
      double lo = 0.0;
      double hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        Point v = eval_fn(r.det, Point::pair(Point::unit(), Point::real(mid)));
        (v.real() <= t ? lo : hi) = mid;
      }
      if (std::abs(lo - normal_cdf(t)) > 1e-6)
        return "CDF at " + double_str(t) + ": " + double_str(lo) + " want " + double_str(normal_cdf(t));
    }
    return {};
  });
  // R <-> [0, inf): bijective on intervals and length-preserving.
  for (int n = 0; n < 100; ++n) {
    s.run_case([&]() -> std::string {
      Rational a = s.small_rational(-5, 4, 8);
      Rational b = a + s.small_rational(0, 3, 8) + Rational(1, 8);
      RealSet i = RealSet::interval(a, b, true, false);
      RealSet img = image_real_to_halfline(i);
      if (!(img.length() == i.length())) return "real->halfline changes length of " + i.str();
      if (!(image_halfline_to_real(img) == i)) return "real->halfline not invertible on " + i.str();
      Rational c = s.small_rational(0, 9, 8);
      RealSet j = RealSet::interval(c, c + s.small_rational(0, 3, 8) + Rational(1, 8), true, false);
      RealSet back = image_halfline_to_real(j);
      if (!(back.length() == j.length())) return "halfline->real changes length of " + j.str();
      if (!(image_real_to_halfline(back) == j)) return "halfline->real not invertible on " + j.str();
      double x = std::floor(a.get_d() * 64.0) / 64.0;
      if (iso_halfline_to_real(iso_real_to_halfline(x)) != x) return "point iso fails at " + double_str(x);
      Point np = Point::pair(Point::nat(static_cast<std::uint64_t>(s.uniform_int(0, 50))), Point::real(s.uniform_int(0, 63) / 64.0));
      if (!(iso_halfline_to_nat_unit(iso_nat_unit_to_halfline(np)) == np)) return "nat-unit iso fails at " + np.str();
      return {};
    });
  }
  s.run_case([&] { return expect_error(Errc::FiniteTotalMass, [&] { total_randomise(uniform(0, 1), 1e-9, s.cfg); }); });
  s.run_case([&]() -> std::string {
    // Negative branch r - 3 floor(r) - 1 on [-n-1, -n).
    for (double r : {-0.5, -1.25, -2.75, -7.5}) {
      double y = iso_real_to_halfline(r);
      double want = r - 3.0 * std::floor(r) - 1.0;
      if (y != want) return "iso at " + double_str(r) + " gave " + double_str(y);
    }
    return {};
  });
  s.run_case([&]() -> std::string {
    Randomiser r = randomise_sfinite(KernelExpr::constant(MeasureExpr::weighted(ExtReal(3), beta_dist(2, 2)), u),
                                     Source::HalfLine, 1e-9, s.cfg);
    MeasureClass c = classify_kernel(randomised_kernel(r), s.cfg);
    if (!class_implies(c, MeasureClass::SFinite)) return std::string("class ") + measure_class_name(c);
    return {};
  });
}

// Finite distributions for generated programs, with their exact atom tables.
struct FiniteDist {
  std::string text;
  std::map<long, Rational> atoms;
};

FiniteDist random_finite_dist(Suite& s) {
  FiniteDist d;
  if (s.uniform_int(0, 1) == 0) {
    Rational p(s.uniform_int(0, 4), 4);
    p.canonicalize();
    d.text = "bernoulli " + rational_str(p);
    d.atoms = {{0, 1 - p}, {1, p}};
  } else {
    int n = s.uniform_int(1, 3);
    Rational p(s.uniform_int(1, 2), 3);
    p.canonicalize();
    d.text = "binomial " + std::to_string(n) + " " + rational_str(p);
    for (int k = 0; k <= n; ++k) {
      mpz_class c;
      mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
      Rational w = c;
      for (int j = 0; j < k; ++j) w *= p;
      for (int j = 0; j < n - k; ++j) w *= 1 - p;
      d.atoms[k] = w;
    }
  }
  return d;
}

void let_commutativity_suite(Suite& s) {
  for (int n = 0; n < 100; ++n) {
    s.run_case([&]() -> std::string {
      FiniteDist da = random_finite_dist(s);
      FiniteDist db = random_finite_dist(s);
      int body_kind = s.uniform_int(0, 3);
      std::string body;
      switch (body_kind) {
        case 0: body = "(a, b)"; break;
        case 1: body = "a + b"; break;
        case 2: body = "score(a + 1); (b, a)"; break;
        default: body = "if a == 1 then b else fail"; break;
      }
      std::string p = "let a = sample(" + da.text + ") in let b = sample(" + db.text + ") in " + body;
      std::string q = "let b = sample(" + db.text + ") in let a = sample(" + da.text + ") in " + body;
      ppl::Program pp = ppl::parse_and_check(p, s.cfg);
      ppl::Program pq = ppl::parse_and_check(q, s.cfg);
      if (!ppl::equivalent(pp, pq, ppl::EquivMode::ExactFinite, 0.0, s.cfg)) return "reordering changes " + p;
      // Brute-force table of the program, summed over both supports.
      auto table = discrete_table(ppl::denote_measure(pp));
      if (!table) return "no table for " + p;
      std::map<std::string, Rational> want;
      for (const auto& [a, wa] : da.atoms) {
        for (const auto& [b, wb] : db.atoms) {
          Rational w = wa * wb;
          std::string key;
          auto nat = [](long v) { return Point::nat(static_cast<std::uint64_t>(v)).str(); };
          switch (body_kind) {
            case 0: key = Point::pair(Point::nat(a), Point::nat(b)).str(); break;
            case 1: key = nat(a + b); break;
            case 2:
              key = Point::pair(Point::nat(b), Point::nat(a)).str();
              w *= Rational(a + 1);
              break;
            default:
              if (a != 1) w = 0;
              key = nat(b);
              break;
          }
          if (w != 0) want[key] += w;
        }
      }
      std::map<std::string, Rational> got;
      for (const auto& [pt, w] : normalized(*table)) {
        if (!w.is_exact() || w.is_inf()) return "inexact weight in " + p;
        got[pt.str()] += w.rational();
      }
      if (got != want) return "table of " + p + " differs from brute force: " + atom_table_str(*table);
      return {};
    });
  }
}

void importance_suite(Suite& s) {
  struct Inst {
    std::string program;
    MeasureExpr proposal;
    bool finite;
  };
  std::vector<Inst> cases = {
      {"let x = sample(binomial 4 1/3) in x + 1", binomial(4, ExtReal::exact(Rational(1, 2))), true},
      {"let x = sample(bernoulli 1/4) in (x, x)", bernoulli(ExtReal::exact(Rational(2, 3))), true},
      {"let x = sample(binomial 3 1/2) in if x == 2 then fail else x", binomial(3, ExtReal::exact(Rational(1, 3))), true},
      {"let z = sample(normal 0 1) in z + 1", normal(1, 1), false},
      {"sample(normal 0 1)", normal(0, 2), false},
      {"let t = sample(beta 2 3) in t", uniform(0, 1), false},
      {"sample(uniform 0 1)", beta_dist(2, 2), false},
      {"let z = sample(normal 0 1) in score(2); z", normal(0, 1), false},
  };
  for (const auto& c : cases) {
    s.run_case([&]() -> std::string {
      ppl::TermPtr t = ppl::parse_program(c.program);
      ppl::TermPtr it = ppl::importance_transform(t, 0, c.proposal, s.cfg);
      std::string text = ppl::print(it);
      if (ppl::print(ppl::parse_program(text)) != text) return "transformed program does not re-parse: " + text;
      ppl::Program a = ppl::Program::check(t, s.cfg);
      ppl::Program b = ppl::Program::check(ppl::parse_program(text), s.cfg);
      auto mode = c.finite ? ppl::EquivMode::ExactFinite : ppl::EquivMode::Probe;
      if (!ppl::equivalent(a, b, mode, c.finite ? 0.0 : 1e-6, s.cfg)) return "denotation changed: " + text;
      return {};
    });
  }
  s.run_case([&]() -> std::string {
    ppl::TermPtr t = ppl::parse_program("sample(normal 0 1)");
    std::string text = ppl::print(ppl::importance_transform(t, 0, normal(0, 1), s.cfg));
    if (text.find("score({1}(y))") == std::string::npos) return "identity proposal gave " + text;
    return {};
  });
  s.run_case([&]() -> std::string {
    ppl::TermPtr t = ppl::parse_program("sample(counting-nat)");
    ppl::TermPtr it = ppl::importance_transform(t, 0, poisson(1), s.cfg);
    ppl::Program b = ppl::Program::check(it, s.cfg);
    auto runs = ppl::run_sampler(b, s.rng(), 200, s.cfg);
    for (const auto& r : runs) {
      double want = std::exp(1.0) * std::tgamma(static_cast<double>(r.value.nat()) + 1.0);
      if (std::abs(r.weight.to_double() - want) > 1e-9 * want)
        return "weight at " + r.value.str() + " is " + r.weight.str() + " want " + double_str(want);
    }
    return {};
  });
}

void rejection_suite(Suite& s) {
  MeasureExpr target = density_measure(
      RealSet::closed(0, 1), FnExpr::mul(FnExpr::lit(Rational(6)),
                                         FnExpr::mul(FnExpr::id(), FnExpr::sub(FnExpr::lit(Rational(1)), FnExpr::id()))));
  s.run_case([&]() -> std::string {
    ppl::RejectionResult r = ppl::rejection_sampler(target, uniform(0, 1), 1.5, s.report.seed, 10000, s.cfg);
    std::vector<double> v;
    for (const auto& p : r.samples) v.push_back(p.real());
    std::sort(v.begin(), v.end());
    double ks = 0.0;
    double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double f = 3 * v[i] * v[i] - 2 * v[i] * v[i] * v[i];
      ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    if (v.size() != 10000) return "only " + std::to_string(v.size()) + " samples";
    if (!(ks < 0.02)) return "KS statistic " + double_str(ks);
    if (std::abs(r.acceptance() - 2.0 / 3.0) > 0.02) return "acceptance " + double_str(r.acceptance());
    return {};
  });
  s.run_case([&] {
    return expect_error(Errc::BoundViolation,
                        [&] { ppl::rejection_sampler(target, uniform(0, 1), 0.5, s.report.seed, 100, s.cfg); });
  });
  s.run_case([&]() -> std::string {
    ppl::RejectionResult r = ppl::rejection_sampler(uniform(0, 1), uniform(0, 1), 1.0, s.report.seed, 1000, s.cfg);
    if (r.acceptance() != 1.0) return "acceptance " + double_str(r.acceptance());
    return {};
  });
}

void beta_bernoulli_suite(Suite& s) {
  // Posterior mean of theta ~ Beta(2,3) after k=2 successes in n=5, by composite Simpson.
  auto post = [](double q) { return q * q * std::pow(1 - q, 3) * q * std::pow(1 - q, 2); };
  const int m = 20000;
  double z = 0.0;
  double zt = 0.0;
  for (int j = 0; j <= m; ++j) {
    double q = static_cast<double>(j) / m;
    double c = (j == 0 || j == m) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    z += c * post(q);
    zt += c * q * post(q);
  }
  double want = zt / z;
  s.run_case([&]() -> std::string {
    auto p = ppl::parse_and_check("let t = sample(beta 2 3) in score(pmf_binomial(2, 5, t)); t", s.cfg);
    double got = ppl::weighted_mean(ppl::run_sampler(p, s.report.seed, 100000, s.cfg));
    if (std::abs(got - want) > 0.02) return "posterior mean " + double_str(got) + " want " + double_str(want);
    return {};
  });
  s.run_case([&]() -> std::string {
    auto p = ppl::parse_and_check("let x = sample(bernoulli 0.5) in x", s.cfg);
    double got = ppl::weighted_mean(ppl::run_sampler(p, s.report.seed, 10000, s.cfg));
    if (std::abs(got - 0.5) > 0.02) return "bernoulli mean " + double_str(got);
    return {};
  });
  s.run_case([&]() -> std::string {
    auto p = ppl::parse_and_check("score(2); sample(normal 0 1)", s.cfg);
    for (const auto& r : ppl::run_sampler(p, s.report.seed, 100, s.cfg)) {
      if (!(r.weight == ExtReal(2))) return "weight " + r.weight.str();
    }
    return {};
  });
  s.run_case([&] {
    auto p = ppl::parse_and_check("sample(counting-nat)", s.cfg);
    return expect_error(Errc::UnsampleableSite, [&] { ppl::run_sampler(p, s.report.seed, 1, s.cfg); });
  });
}

// Measures with a known top 0-inf-set: `sigma` when it is null, `charged(A)` whether A meets it
// in positive measure.
struct KnownMeasure {
  MeasureExpr m;
  bool sigma;
  std::function<bool(const RealSet&)> charged;
};

void top_sets_suite(Suite& s) {
  for (int n = 0; n < 100; ++n) {
    s.run_case([&]() -> std::string {
      SpaceExpr y = random_fin_space(s.rng, 1, 6);
      DenseMeasure d = random_dense(s.rng, y, 0.25);
      MeasureExpr m = to_measure(d);
      bool sigma = std::none_of(d.w.begin(), d.w.end(), [](const ExtReal& w) { return w.is_inf(); });
      MeasureClass c = classify_measure(m, s.cfg);
      bool classified = class_implies(c, MeasureClass::SigmaFinite);
      SetExpr top = top_zero_infty_set(m);
      bool trivial = measure_of(m, top, s.cfg).value.is_zero();
      if (classified != sigma || trivial != sigma)
        return d.str() + ": class " + measure_class_name(c) + ", top " + top.str();
      std::vector<bool> members;
      for (std::size_t i = 0; i < d.w.size(); ++i) members.push_back(s.uniform_int(0, 1) == 1);
      SetExpr a = SetExpr::fin(y, members);
      bool want = true;
      for (std::size_t i = 0; i < d.w.size(); ++i) want = want && !(members[i] && d.w[i].is_inf());
      bool fa = finitely_approximable(m, a, s.cfg);
      bool null_meet = measure_of(m, a.intersect(top), s.cfg).value.is_zero();
      if (fa != want || null_meet != want) return d.str() + " on " + a.str() + ": finitely approximable " + (fa ? "true" : "false");
      return {};
    });
  }
  auto overlaps = [](const RealSet& a, const RealSet& b) {
    ExtReal len = a.intersect(b).length();
    return !len.is_zero();
  };
  for (int n = 0; n < 100; ++n) {
    s.run_case([&]() -> std::string {
      Rational a = s.small_rational(-3, 2);
      Rational b = a + s.small_rational(1, 2);
      RealSet ab = RealSet::closed(a, b);
      Rational x(s.uniform_int(-24, 24), 8);
      x.canonicalize();
      std::vector<KnownMeasure> ms = {
          {uniform(a, b), true, [](const RealSet&) { return false; }},
          {normal(0, 1), true, [](const RealSet&) { return false; }},
          {lebesgue(), true, [](const RealSet&) { return false; }},
          {seq_lebesgue_slices(), true, [](const RealSet&) { return false; }},
          {MeasureExpr::weighted(ExtReal::inf(), uniform(a, b)), false, [&](const RealSet& r) { return overlaps(r, ab); }},
          {seq_constant_repeat(uniform(a, b)), false, [&](const RealSet& r) { return overlaps(r, ab); }},
          {MeasureExpr::sum({normal(0, 1), MeasureExpr::weighted(ExtReal::inf(), uniform(a, b))}), false,
           [&](const RealSet& r) { return overlaps(r, ab); }},
          {MeasureExpr::weighted(ExtReal::inf(), dirac(Point::real(x.get_d()), SpaceExpr::real())), false,
           [&](const RealSet& r) { return r.contains(x); }},
          {MeasureExpr::sum({lebesgue(), MeasureExpr::weighted(ExtReal::inf(), dirac(Point::real(x.get_d()), SpaceExpr::real()))}),
           false, [&](const RealSet& r) { return r.contains(x); }},
      };
      const KnownMeasure& k = ms[static_cast<std::size_t>(s.uniform_int(0, static_cast<int>(ms.size()) - 1))];
      MeasureClass c = classify_measure(k.m, s.cfg);
      SetExpr top = top_zero_infty_set(k.m);
      bool trivial = measure_of(k.m, top, s.cfg).value.is_zero();
      if (class_implies(c, MeasureClass::SigmaFinite) != k.sigma || trivial != k.sigma)
        return k.m.str() + ": class " + measure_class_name(c) + ", top " + top.str();
      Rational lo = s.small_rational(-4, 3);
      RealSet r = s.uniform_int(0, 3) == 0 ? RealSet::point(x) : RealSet::closed(lo, lo + s.small_rational(0, 2));
      SetExpr as = SetExpr::real(r);
      bool fa = finitely_approximable(k.m, as, s.cfg);
      bool null_meet = measure_of(k.m, as.intersect(top), s.cfg).value.is_zero();
      bool want = !k.charged(r);
      if (fa != want || null_meet != want)
        return k.m.str() + " on " + r.str() + ": finitely approximable " + (fa ? "true" : "false") + ", null meet " +
               (null_meet ? "true" : "false");
      return {};
    });
  }
}

using SuiteFn = void (*)(Suite&);

const std::map<std::string, SuiteFn, std::less<>>& registry() {
  static const std::map<std::string, SuiteFn, std::less<>> r = {
      {"beta-bernoulli", beta_bernoulli_suite},
      {"composition", composition_suite},
      {"decomposition", decomposition_suite},
      {"diagonal", diagonal_suite},
      {"disintegration", disintegration_suite},
      {"extreal", extreal_suite},
      {"fubini", fubini_suite},
      {"importance", importance_suite},
      {"let-commutativity", let_commutativity_suite},
      {"randomise", randomise_suite},
      {"rejection", rejection_suite},
      {"rn-counterexample", rn_counterexample_suite},
      {"rn-roundtrip", rn_roundtrip_suite},
      {"rn-uniqueness", rn_uniqueness_suite},
      {"top-sets", top_sets_suite},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

bool is_suite(std::string_view name) { return registry().count(name) > 0; }

std::uint64_t suite_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return derive_seed(seed, h);
}

SuiteReport run_suite(std::string_view name, std::uint64_t seed, const EvalConfig& cfg) {
  auto it = registry().find(name);
  if (it == registry().end()) fail(Errc::Unsupported, "unknown suite " + std::string(name));
  SuiteReport report;
  report.suite = std::string(name);
  report.seed = suite_seed(seed, name);
  Suite s{report, std::mt19937_64(report.seed), cfg};
  auto t0 = std::chrono::steady_clock::now();
  it->second(s);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace sfk
