#include "sfk/oracle.hpp"

#include <algorithm>

#include "sfk/errors.hpp"

namespace sfk {

namespace {

std::size_t index_of(const std::vector<Point>& pts, const Point& p) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i] == p) return i;
  fail(Errc::TypeMismatch, "point " + p.str() + " outside the finite space");
}

bool same_weights(const std::vector<ExtReal>& a, const std::vector<ExtReal>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i])) return false;
  return true;
}

}  // namespace

DenseMeasure DenseMeasure::zeros(const SpaceExpr& space) {
  DenseMeasure m{space, enumerate(space), {}};
  m.w.assign(m.points.size(), ExtReal(0));
  return m;
}

ExtReal DenseMeasure::at(const Point& p) const { return w[index_of(points, p)]; }

ExtReal DenseMeasure::of(const SetExpr& a) const {
  ExtReal acc(0);
  for (std::size_t i = 0; i < points.size(); ++i)
    if (a.member(points[i])) acc += w[i];
  return acc;
}

ExtReal DenseMeasure::total() const {
  ExtReal acc(0);
  for (const auto& v : w) acc += v;
  return acc;
}

std::string DenseMeasure::str() const {
  std::string s = "{";
  for (std::size_t i = 0; i < points.size(); ++i) s += (i ? ", " : "") + points[i].str() + ": " + w[i].str();
  return s + "}";
}

bool operator==(const DenseMeasure& a, const DenseMeasure& b) {
  return a.space == b.space && same_weights(a.w, b.w);
}

DenseKernel DenseKernel::identity(const SpaceExpr& space) {
  DenseKernel k{space, space, {}};
  auto pts = enumerate(space);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto row = DenseMeasure::zeros(space);
    row.w[i] = ExtReal(1);
    k.rows.push_back(row);
  }
  return k;
}

bool operator==(const DenseKernel& a, const DenseKernel& b) {
  if (!(a.dom == b.dom) || !(a.cod == b.cod) || a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    if (!(a.rows[i] == b.rows[i])) return false;
  return true;
}

DenseKernel o_compose(const DenseKernel& k, const DenseKernel& l) {
  if (!(k.cod == l.dom)) fail(Errc::TypeMismatch, "oracle composition shapes");
  DenseKernel out{k.dom, l.cod, {}};
  for (const auto& row : k.rows) {
    auto r = DenseMeasure::zeros(l.cod);
    for (std::size_t j = 0; j < row.w.size(); ++j)
      for (std::size_t m = 0; m < r.w.size(); ++m) r.w[m] += row.w[j] * l.rows[j].w[m];
    out.rows.push_back(r);
  }
  return out;
}

DenseKernel o_prod_yz(const DenseKernel& k, const DenseKernel& l) {
  SpaceExpr yz = SpaceExpr::prod(k.cod, l.cod);
  DenseKernel out{k.dom, yz, {}};
  for (std::size_t x = 0; x < k.rows.size(); ++x) {
    auto r = DenseMeasure::zeros(yz);
    std::size_t nz = l.rows[x].w.size();
    for (std::size_t y = 0; y < k.rows[x].w.size(); ++y)
      for (std::size_t z = 0; z < nz; ++z) r.w[y * nz + z] += k.rows[x].w[y] * l.rows[x].w[z];
    out.rows.push_back(r);
  }
  return out;
}

DenseKernel o_prod_zy(const DenseKernel& k, const DenseKernel& l) {
  SpaceExpr yz = SpaceExpr::prod(k.cod, l.cod);
  DenseKernel out{k.dom, yz, {}};
  for (std::size_t x = 0; x < k.rows.size(); ++x) {
    auto r = DenseMeasure::zeros(yz);
    std::size_t nz = l.rows[x].w.size();
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t y = 0; y < k.rows[x].w.size(); ++y) r.w[y * nz + z] += l.rows[x].w[z] * k.rows[x].w[y];
    out.rows.push_back(r);
  }
  return out;
}

DenseKernel o_prod_l(const DenseKernel& k, const DenseKernel& l) {
  SpaceExpr yz = SpaceExpr::prod(k.cod, l.cod);
  DenseKernel out{k.dom, yz, {}};
  std::size_t ny = enumerate(k.cod).size();
  for (std::size_t x = 0; x < k.rows.size(); ++x) {
    auto r = DenseMeasure::zeros(yz);
    for (std::size_t y = 0; y < ny; ++y) {
      const DenseMeasure& inner = l.rows[x * ny + y];
      for (std::size_t z = 0; z < inner.w.size(); ++z) r.w[y * inner.w.size() + z] += k.rows[x].w[y] * inner.w[z];
    }
    out.rows.push_back(r);
  }
  return out;
}

std::vector<ExtReal> o_rn(const DenseMeasure& nu_prime, const DenseMeasure& nu) {
  std::vector<ExtReal> d;
  for (std::size_t i = 0; i < nu.w.size(); ++i) {
    const ExtReal& a = nu_prime.w[i];
    const ExtReal& b = nu.w[i];
    if (b.is_zero() && !a.is_zero())
      fail(Errc::NotZeroInftyAbsCont, "null point " + nu.points[i].str() + " carries mass " + a.str());
    if (b.is_inf() && !a.is_zero() && !a.is_inf())
      fail(Errc::NotZeroInftyAbsCont, "0-inf point " + nu.points[i].str() + " carries finite mass " + a.str());
    if (b.is_inf()) d.push_back(a.is_inf() ? ExtReal(1) : ExtReal(0));
    else d.push_back(ext_div(a, b));
  }
  return d;
}

DenseMeasure o_score(const DenseMeasure& nu, const std::vector<ExtReal>& d) {
  DenseMeasure out = nu;
  for (std::size_t i = 0; i < out.w.size(); ++i) out.w[i] = nu.w[i] * d[i];
  return out;
}

DenseParts o_decompose(const DenseMeasure& k, const DenseMeasure& l) {
  DenseParts p{DenseMeasure::zeros(k.space), DenseMeasure::zeros(k.space), DenseMeasure::zeros(k.space)};
  for (std::size_t i = 0; i < k.w.size(); ++i) {
    const ExtReal& a = k.w[i];
    const ExtReal& b = l.w[i];
    if (b.is_zero()) p.singular.w[i] = a;
    else if (b.is_inf() && a.is_finite()) p.inf_singular.w[i] = a;
    else p.abs_cont.w[i] = a;
  }
  return p;
}

DenseDisintegration o_disintegrate(const DenseMeasure& joint) {
  const SpaceExpr& x = joint.space.left();
  const SpaceExpr& t = joint.space.right();
  auto xs = enumerate(x);
  std::size_t nt = enumerate(t).size();
  DenseDisintegration out{DenseKernel{x, t, {}}, DenseMeasure::zeros(x), {}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ExtReal marg(0);
    for (std::size_t j = 0; j < nt; ++j) marg += joint.w[i * nt + j];
    out.marginal.w[i] = marg;
    auto row = DenseMeasure::zeros(t);
    if (marg.is_zero()) {
      for (auto& v : row.w) v = ExtReal::exact(Rational(1, static_cast<long>(nt)));
      out.arbitrary.push_back(true);
    } else if (marg.is_inf()) {
      for (std::size_t j = 0; j < nt; ++j) {
        const ExtReal& p = joint.w[i * nt + j];
        if (!p.is_zero() && p.is_finite())
          fail(Errc::InftyCompatibilityFailed, "finite mass over an infinite marginal at " + xs[i].str());
        row.w[j] = p.is_inf() ? ExtReal(1) : ExtReal(0);
      }
      out.arbitrary.push_back(false);
    } else {
      for (std::size_t j = 0; j < nt; ++j) row.w[j] = ext_div(joint.w[i * nt + j], marg);
      out.arbitrary.push_back(false);
    }
    out.kernel.rows.push_back(row);
  }
  return out;
}

MeasureExpr to_measure(const DenseMeasure& m) {
  std::vector<std::pair<Point, ExtReal>> entries;
  for (std::size_t i = 0; i < m.points.size(); ++i) entries.emplace_back(m.points[i], m.w[i]);
  return categorical(m.space, entries);
}

KernelExpr to_kernel(const DenseKernel& k) {
  std::vector<std::pair<Point, ExtReal>> entries;
  auto xs = enumerate(k.dom);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < k.rows[i].points.size(); ++j)
      if (!k.rows[i].w[j].is_zero()) entries.emplace_back(Point::pair(xs[i], k.rows[i].points[j]), k.rows[i].w[j]);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return KernelExpr::score(KernelExpr::constant(counting(k.cod), k.dom), FnExpr::table(entries, ExtReal(0)));
}

std::optional<DenseMeasure> dense_of(const MeasureExpr& m) {
  if (!m.space().is_finite()) return std::nullopt;
  auto t = discrete_table(m);
  if (!t) return std::nullopt;
  auto out = DenseMeasure::zeros(m.space());
  for (const auto& [p, v] : *t) out.w[index_of(out.points, p)] += v;
  return out;
}

std::optional<DenseKernel> dense_of(const KernelExpr& k) {
  auto rows = finite_rows(k);
  if (!rows || !k.cod().is_finite()) return std::nullopt;
  DenseKernel out{k.dom(), k.cod(), {}};
  for (const auto& [x, m] : *rows) {
    auto d = dense_of(m);
    if (!d) return std::nullopt;
    out.rows.push_back(*d);
  }
  return out;
}

ExtReal random_weight(std::mt19937_64& rng, double inf_rate, double zero_rate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  if (r < inf_rate) return ExtReal::inf();
  if (r < inf_rate + zero_rate) return ExtReal(0);
  std::uniform_int_distribution<long> num(1, 6), den(1, 4);
  return ExtReal::exact(Rational(num(rng), den(rng)));
}

SpaceExpr random_fin_space(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> n(lo, hi);
  std::vector<std::string> labels;
  std::size_t k = n(rng);
  for (std::size_t i = 0; i < k; ++i) labels.push_back("p" + std::to_string(i));
  return SpaceExpr::fin(labels);
}

DenseMeasure random_dense(std::mt19937_64& rng, const SpaceExpr& space, double inf_rate) {
  auto m = DenseMeasure::zeros(space);
  for (auto& v : m.w) v = random_weight(rng, inf_rate);
  return m;
}

DenseKernel random_dense_kernel(std::mt19937_64& rng, const SpaceExpr& dom, const SpaceExpr& cod, double inf_rate) {
  DenseKernel k{dom, cod, {}};
  for (std::size_t i = 0, n = enumerate(dom).size(); i < n; ++i) k.rows.push_back(random_dense(rng, cod, inf_rate));
  return k;
}

}  // namespace sfk
