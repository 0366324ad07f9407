#include "sfk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfk/errors.hpp"

namespace sfk {

namespace {

struct Sampler {
  const std::function<ExtReal(double)>& g;
  std::size_t evals = 0;
  std::size_t max_evals;
  bool nonzero = false;
  bool inf = false;
  bool capped = false;

  // Value at x; an infinite value at an outer endpoint is ignored (a null set).
  double at(double x, bool endpoint) {
    ++evals;
    ExtReal v = g(x);
    if (v.is_inf()) {
      if (!endpoint) inf = true;
      return 0.0;
    }
    if (!v.is_zero()) nonzero = true;
    return v.to_double();
  }
};

struct Simpson {
  Sampler& s;
  std::function<double(double, bool)> f;  // integrand in the integration variable
  int max_depth;
  double error = 0.0;

  double step(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm, false), frm = f(rm, false);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (s.inf) return 0.0;
    if (depth >= max_depth || s.evals >= s.max_evals) {
      s.capped = true;
      error += std::fabs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    if (std::fabs(delta) <= 15.0 * tol) {
      error += std::fabs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return step(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) + step(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }

  double run(double a, double b, double tol) {
    // A fixed initial subdivision keeps narrow features from hiding between samples.
    constexpr int kInitial = 8;
    double total = 0.0;
    double h = (b - a) / kInitial;
    for (int i = 0; i < kInitial; ++i) {
      double lo = a + h * i, hi = (i + 1 == kInitial) ? b : a + h * (i + 1);
      double flo = f(lo, i == 0), fhi = f(hi, i + 1 == kInitial);
      double fm = f(0.5 * (lo + hi), false);
      double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
      total += step(lo, hi, flo, fm, fhi, whole, tol / kInitial, 0);
      if (s.inf) return 0.0;
    }
    return total;
  }
};

}  // namespace

QuadResult integrate_lebesgue(const std::function<ExtReal(double)>& g, const RealSet& region,
                              const std::vector<double>& hints, const QuadOptions& opts) {
  struct Piece {
    double lo, hi;  // may be infinite
  };
  std::vector<Piece> pieces;
  for (const auto& iv : region.intervals()) {
    double lo = iv.lo ? iv.lo->get_d() : -std::numeric_limits<double>::infinity();
    double hi = iv.hi ? iv.hi->get_d() : std::numeric_limits<double>::infinity();
    if (!(lo < hi)) continue;
    std::vector<double> cuts{lo};
    for (double h : hints)
      if (h > lo && h < hi) cuts.push_back(h);
    if (std::isinf(lo) && std::isinf(hi) && cuts.size() == 1) cuts.push_back(0.0);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) pieces.push_back({cuts[i], cuts[i + 1]});
  }
  QuadResult res;
  if (pieces.empty()) {
    res.value = ExtReal(0);
    return res;
  }
  Sampler sampler{g, 0, opts.max_evals};
  double total = 0.0, error = 0.0;
  double tol = opts.tol / static_cast<double>(pieces.size());
  for (const auto& p : pieces) {
    Simpson simp{sampler, {}, opts.max_depth};
    if (std::isfinite(p.lo) && std::isfinite(p.hi)) {
      simp.f = [&](double x, bool end) { return sampler.at(x, end); };
      total += simp.run(p.lo, p.hi, tol);
    } else if (std::isfinite(p.lo)) {
      double a = p.lo;
      simp.f = [&, a](double t, bool end) {
        if (t >= 1.0) return 0.0;
        double u = 1.0 - t;
        return sampler.at(a + t / u, end && t <= 0.0) / (u * u);
      };
      total += simp.run(0.0, 1.0, tol);
    } else if (std::isfinite(p.hi)) {
      double b = p.hi;
      simp.f = [&, b](double t, bool end) {
        if (t >= 1.0) return 0.0;
        double u = 1.0 - t;
        return sampler.at(b - t / u, end && t <= 0.0) / (u * u);
      };
      total += simp.run(0.0, 1.0, tol);
    } else {
      fail(Errc::NumericDomain, "unsplit infinite quadrature range");
    }
    error += simp.error;
    if (sampler.inf) {
      res.value = ExtReal::inf();
      return res;
    }
  }
  res.error = error;
  res.capped = sampler.capped;
  if (!sampler.nonzero) {
    res.value = ExtReal(0);
    return res;
  }
  if (std::isinf(total)) res.value = ExtReal::inf();
  else res.value = ExtReal::approx(std::max(0.0, total));
  return res;
}

double simpson(const std::function<double(double)>& g, double a, double b, double tol, int max_depth) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fm, double fhi, double whole, double eps, int depth) {
        double m = 0.5 * (lo + hi);
        double lm = 0.5 * (lo + m), rm = 0.5 * (m + hi);
        double flm = g(lm), frm = g(rm);
        double left = (m - lo) / 6.0 * (flo + 4.0 * flm + fm);
        double right = (hi - m) / 6.0 * (fm + 4.0 * frm + fhi);
        double delta = left + right - whole;
        if (depth >= max_depth || std::fabs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
        return rec(lo, m, flo, flm, fm, left, 0.5 * eps, depth + 1) + rec(m, hi, fm, frm, fhi, right, 0.5 * eps, depth + 1);
      };
  double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0);
}

}  // namespace sfk
