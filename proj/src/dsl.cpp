#include "sfk/dsl.hpp"

#include <cstdlib>
#include <functional>

#include "sfk/calculus.hpp"
#include "sfk/errors.hpp"
#include "sfk/randomise.hpp"

namespace sfk {

std::string_view Sexp::head() const {
  if (!is_list || items.empty() || items[0].is_list) return {};
  return items[0].atom;
}

std::string Sexp::str() const {
  if (!is_list) return atom;
  std::string s = "(";
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? " " : "") + items[i].str();
  return s + ")";
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Sexp> all() {
    std::vector<Sexp> out;
    skip();
    while (pos_ < text_.size()) {
      out.push_back(one());
      skip();
    }
    return out;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  Sexp one() {
    Sexp e;
    e.line = line_;
    e.column = col_;
    char c = text_[pos_];
    if (c == ')') throw SyntaxError("unexpected ')'", line_, col_);
    if (c == '(') {
      e.is_list = true;
      advance();
      skip();
      while (true) {
        if (pos_ >= text_.size()) throw SyntaxError("unclosed '('", e.line, e.column);
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        e.items.push_back(one());
        skip();
      }
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (d == '(' || d == ')' || d == ';' || d == ' ' || d == '\t' || d == '\n' || d == '\r') break;
      advance();
    }
    e.atom = std::string(text_.substr(start, pos_ - start));
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

[[noreturn]] void bad(const Sexp& e, const std::string& msg) { throw SyntaxError(msg + " in " + e.str(), e.line, e.column); }

// Runs a constructor, reporting library errors at the expression's position.
template <class F>
auto guarded(const Sexp& e, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const SyntaxError&) {
    throw;
  } catch (const Error& err) {
    bad(e, err.what());
  }
}

const std::string& atom_of(const Sexp& e) {
  if (e.is_list) bad(e, "expected an atom");
  return e.atom;
}

void arity(const Sexp& e, std::size_t n) {
  if (e.items.size() != n + 1) bad(e, std::string(e.head()) + " takes " + std::to_string(n) + " arguments");
}

Rational rational_of(const Sexp& e) {
  auto q = parse_rational(atom_of(e));
  if (!q) bad(e, "expected a number");
  return *q;
}

double double_of(const Sexp& e) {
  const auto& a = atom_of(e);
  if (a == "inf") return HUGE_VAL;
  if (a == "-inf") return -HUGE_VAL;
  if (auto q = parse_rational(a)) {
    if (a.find_first_of(".eE") == std::string::npos) return q->get_d();
  }
  char* end = nullptr;
  double d = std::strtod(a.c_str(), &end);
  if (a.empty() || *end != '\0') bad(e, "expected a number");
  return d;
}

std::uint64_t nat_of(const Sexp& e) {
  const auto& a = atom_of(e);
  if (a.empty() || a.find_first_not_of("0123456789") != std::string::npos) bad(e, "expected a natural number");
  return std::stoull(a);
}

RealSet::Bound bound_of(const Sexp& e) {
  const auto& a = atom_of(e);
  if (a == "inf" || a == "-inf") return std::nullopt;
  return rational_of(e);
}

// Positional arguments and `:key value` pairs of a list.
struct Args {
  std::vector<const Sexp*> pos;
  std::vector<std::pair<std::string, const Sexp*>> keys;

  const Sexp* key(std::string_view k) const {
    for (const auto& [name, v] : keys)
      if (name == k) return v;
    return nullptr;
  }
};

Args split_args(const Sexp& e) {
  Args a;
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    const Sexp& it = e.items[i];
    if (!it.is_list && !it.atom.empty() && it.atom[0] == ':' && it.atom.size() > 1) {
      if (i + 1 >= e.items.size()) bad(it, "keyword without a value");
      a.keys.emplace_back(it.atom.substr(1), &e.items[++i]);
    } else {
      a.pos.push_back(&it);
    }
  }
  return a;
}

void need(const Sexp& e, const Args& a, std::size_t n) {
  if (a.pos.size() != n) bad(e, std::string(e.head()) + " takes " + std::to_string(n) + " arguments");
}

SpaceExpr dom_or(const Args& a, const SpaceExpr& dflt) {
  const Sexp* d = a.key("dom");
  return d ? parse_space(*d) : dflt;
}

}  // namespace

std::vector<Sexp> read_sexps(std::string_view text) { return Reader(text).all(); }

Sexp read_sexp(std::string_view text) {
  auto all = read_sexps(text);
  if (all.empty()) throw SyntaxError("empty input", 1, 1);
  if (all.size() > 1) throw SyntaxError("trailing input after the first expression", all[1].line, all[1].column);
  return all[0];
}

SpaceExpr parse_space(const Sexp& e) {
  if (!e.is_list) {
    if (e.atom == "unit") return SpaceExpr::unit();
    if (e.atom == "nat") return SpaceExpr::nat();
    if (e.atom == "real") return SpaceExpr::real();
    if (e.atom == "ext") return SpaceExpr::ext();
    bad(e, "unknown space");
  }
  auto h = e.head();
  if (h == "fin") {
    std::vector<std::string> labels;
    for (std::size_t i = 1; i < e.items.size(); ++i) labels.push_back(atom_of(e.items[i]));
    return guarded(e, [&] { return SpaceExpr::fin(labels); });
  }
  if (h == "prod" || h == "sum") {
    arity(e, 2);
    SpaceExpr a = parse_space(e.items[1]), b = parse_space(e.items[2]);
    return h == "prod" ? SpaceExpr::prod(a, b) : SpaceExpr::sum(a, b);
  }
  bad(e, "unknown space");
}

Point parse_point(const Sexp& e, const SpaceExpr& space) {
  if (e.is_atom("bottom")) return Point::bottom();
  using K = SpaceExpr::Kind;
  switch (space.kind()) {
    case K::Unit:
      if (e.is_atom("unit")) return Point::unit();
      break;
    case K::Fin:
      if (!e.is_list && space.label_index(e.atom)) return Point::label(e.atom);
      break;
    case K::Nat:
      if (!e.is_list) return Point::nat(nat_of(e));
      break;
    case K::Real:
      if (!e.is_list) return Point::real(double_of(e));
      break;
    case K::Ext:
      if (e.head() == "ext") {
        arity(e, 1);
        return Point::weight(parse_weight(e.items[1]));
      }
      if (!e.is_list) return Point::weight(parse_weight(e));
      break;
    case K::Prod:
      if (e.head() == "pair") {
        arity(e, 2);
        return Point::pair(parse_point(e.items[1], space.left()), parse_point(e.items[2], space.right()));
      }
      break;
    case K::Sum:
      if (e.head() == "inl" || e.head() == "inr") {
        arity(e, 1);
        if (e.head() == "inl") return Point::inl(parse_point(e.items[1], space.left()));
        return Point::inr(parse_point(e.items[1], space.right()));
      }
      break;
  }
  bad(e, "not a point of " + space.str());
}

ExtReal parse_weight(const Sexp& e) {
  const auto& a = atom_of(e);
  if (a == "inf") return ExtReal::inf();
  auto q = parse_rational(a);
  if (!q || sgn(*q) < 0) bad(e, "expected a weight in [0, inf]");
  if (a.find_first_of(".eE") != std::string::npos) return ExtReal::approx(std::strtod(a.c_str(), nullptr));
  return ExtReal::exact(*q);
}

namespace {

SetExpr real_prim(const RealSet& r, const SpaceExpr& space) {
  if (space.kind() == SpaceExpr::Kind::Real) return SetExpr::real(r);
  return SetExpr::ext(r.intersect(RealSet::interval(Rational(0), std::nullopt, true, false)), false);
}

SetExpr parse_set_impl(const Sexp& e, const SpaceExpr& space) {
  if (e.is_atom("empty")) return SetExpr::empty(space);
  if (e.is_atom("full")) return SetExpr::full(space);
  if (!e.is_list || e.items.empty()) bad(e, "expected a set");
  auto h = e.head();
  if (h == "union" || h == "inter") {
    SetExpr acc = h == "union" ? SetExpr::empty(space) : SetExpr::full(space);
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      SetExpr s = parse_set(e.items[i], space);
      acc = h == "union" ? acc.unite(s) : acc.intersect(s);
    }
    return acc;
  }
  if (h == "diff") {
    arity(e, 2);
    return parse_set(e.items[1], space).minus(parse_set(e.items[2], space));
  }
  if (h == "complement") {
    arity(e, 1);
    return parse_set(e.items[1], space).complement();
  }
  using K = SpaceExpr::Kind;
  K k = space.kind();
  if (k == K::Real || k == K::Ext) {
    if (h == "ival") {
      Args a = split_args(e);
      need(e, a, 2);
      auto closed = [&](const char* key) {
        const Sexp* v = a.key(key);
        if (!v) return true;
        if (v->is_atom("closed")) return true;
        if (v->is_atom("open")) return false;
        bad(*v, "expected closed or open");
      };
      return real_prim(RealSet::interval(bound_of(*a.pos[0]), bound_of(*a.pos[1]), closed("lo"), closed("hi")), space);
    }
    if (h == "atom") {
      arity(e, 1);
      if (k == K::Ext && e.items[1].is_atom("inf")) return SetExpr::ext(RealSet::empty(), true);
      return real_prim(RealSet::point(rational_of(e.items[1])), space);
    }
    if (h == "points") {
      std::vector<Rational> xs;
      for (std::size_t i = 1; i < e.items.size(); ++i) xs.push_back(rational_of(e.items[i]));
      return real_prim(RealSet::points(xs), space);
    }
  }
  if (k == K::Fin && h == "labels") {
    std::vector<std::string> ls;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      if (!space.label_index(atom_of(e.items[i]))) bad(e.items[i], "unknown label");
      ls.push_back(e.items[i].atom);
    }
    return SetExpr::fin_labels(space, ls);
  }
  if (k == K::Nat && (h == "nats" || h == "cofinite")) {
    std::vector<std::uint64_t> ns;
    for (std::size_t i = 1; i < e.items.size(); ++i) ns.push_back(nat_of(e.items[i]));
    return h == "nats" ? SetExpr::nat_finite(ns) : SetExpr::nat_cofinite(ns);
  }
  if (k == K::Nat && h == "upto") {
    arity(e, 1);
    return SetExpr::nat_upto(nat_of(e.items[1]));
  }
  if (k == K::Prod && h == "rect") {
    arity(e, 2);
    return SetExpr::rect(parse_set(e.items[1], space.left()), parse_set(e.items[2], space.right()));
  }
  if (k == K::Sum && h == "sumset") {
    arity(e, 2);
    return SetExpr::sum(parse_set(e.items[1], space.left()), parse_set(e.items[2], space.right()));
  }
  if (h == "singleton") {
    arity(e, 1);
    return SetExpr::singleton(space, parse_point(e.items[1], space));
  }
  bad(e, "not a set of " + space.str());
}

std::optional<FnOp> unary_op(std::string_view name) {
  for (FnOp op : {FnOp::Neg, FnOp::Abs, FnOp::Floor, FnOp::Exp, FnOp::Log, FnOp::Sqrt, FnOp::NatOfFloor})
    if (name == fn_op_name(op)) return op;
  return std::nullopt;
}

std::optional<FnOp> binary_op(std::string_view name) {
  for (FnOp op : {FnOp::Add, FnOp::Sub, FnOp::Mul, FnOp::Div, FnOp::Pow, FnOp::Min, FnOp::Max})
    if (name == fn_op_name(op)) return op;
  return std::nullopt;
}

FnExpr parse_fn_impl(const Sexp& e, const SpaceExpr& dom) {
  if (!e.is_list) {
    const auto& a = e.atom;
    if (a == "id") return FnExpr::id();
    if (a == "fst") return FnExpr::proj1();
    if (a == "snd") return FnExpr::proj2();
    if (a == "inf") return FnExpr::lit_inf();
    if (auto op = unary_op(a)) return FnExpr::unary(*op);
    if (auto q = parse_rational(a)) return FnExpr::lit(*q);
    bad(e, "unknown function");
  }
  auto h = e.head();
  auto sub = [&](std::size_t i, const SpaceExpr& d) { return parse_fn(e.items[i], d); };
  if (h == "const") {
    arity(e, 2);
    SpaceExpr s = parse_space(e.items[2]);
    return FnExpr::constant(parse_point(e.items[1], s), s);
  }
  if (h == "inl" || h == "inr") {
    arity(e, 1);
    SpaceExpr s = parse_space(e.items[1]);
    return h == "inl" ? FnExpr::inj_l(s) : FnExpr::inj_r(s);
  }
  if (h == "indicator" || h == "restrict") {
    arity(e, 1);
    SetExpr s = parse_set(e.items[1], dom);
    return h == "indicator" ? FnExpr::indicator(s) : FnExpr::restrict_to(s);
  }
  if (h == "ifset") {
    arity(e, 3);
    return FnExpr::if_set(parse_set(e.items[1], dom), sub(2, dom), sub(3, dom));
  }
  if (h == "table") {
    if (e.items.size() < 2) bad(e, "table needs a default weight");
    std::vector<std::pair<Point, ExtReal>> entries;
    for (std::size_t i = 2; i < e.items.size(); ++i) {
      const Sexp& en = e.items[i];
      if (!en.is_list || en.items.size() != 2) bad(en, "table entries are (point weight)");
      entries.emplace_back(parse_point(en.items[0], dom), parse_weight(en.items[1]));
    }
    return FnExpr::table(entries, parse_weight(e.items[1]));
  }
  if (h == "layer") {
    arity(e, 2);
    return FnExpr::layer(parse_weight(e.items[1]), sub(2, dom));
  }
  if (h == "pair") {
    arity(e, 2);
    return FnExpr::pair(sub(1, dom), sub(2, dom));
  }
  if (h == "case") {
    arity(e, 2);
    if (dom.kind() != SpaceExpr::Kind::Sum) bad(e, "case needs a sum domain");
    return FnExpr::case_of(sub(1, dom.left()), sub(2, dom.right()));
  }
  if (h == "compose") {
    arity(e, 2);
    FnExpr inner = sub(2, dom);
    SpaceExpr mid = guarded(e, [&] { return codomain(inner, dom); });
    return FnExpr::compose(sub(1, mid), inner);
  }
  if (auto op = binary_op(h)) {
    arity(e, 2);
    return FnExpr::binary(*op, sub(1, dom), sub(2, dom));
  }
  if (auto op = unary_op(h)) {
    arity(e, 1);
    return FnExpr::unary(*op, sub(1, dom));
  }
  if (h == "pdf-normal" || h == "pdf-beta" || h == "pmf-binomial") {
    arity(e, 3);
    if (h == "pdf-normal") return FnExpr::pdf_normal(sub(1, dom), sub(2, dom), sub(3, dom));
    if (h == "pdf-beta") return FnExpr::pdf_beta(sub(1, dom), sub(2, dom), sub(3, dom));
    return FnExpr::pmf_binomial(sub(1, dom), sub(2, dom), sub(3, dom));
  }
  if (h == "pmf-poisson") {
    arity(e, 2);
    return FnExpr::pmf_poisson(sub(1, dom), sub(2, dom));
  }
  if (h == "randomiser") {
    arity(e, 2);
    auto src = parse_source(atom_of(e.items[1]));
    if (!src) bad(e.items[1], "unknown randomness source");
    KernelExpr k = parse_kernel(e.items[2]);
    return guarded(e, [&] { return (*src == Source::Unit01 ? randomise_subprob(k) : randomise_sfinite(k, *src)).det; });
  }
  if (h == "total-randomiser") {
    arity(e, 1);
    MeasureExpr m = parse_measure(e.items[1]);
    return guarded(e, [&] { return total_randomise(m); });
  }
  if (h == "marginal-density") {
    arity(e, 3);
    SpaceExpr s = parse_space(e.items[2]);
    return marginal_density(sub(1, s), s, parse_measure(e.items[3]));
  }
  bad(e, "unknown function");
}

MeasureExpr parse_measure_impl(const Sexp& e) {
  if (e.is_atom("zero")) return MeasureExpr::zero(SpaceExpr::real());
  if (!e.is_list || e.items.empty()) bad(e, "expected a measure");
  auto h = e.head();
  const auto& it = e.items;
  if (h == "zero") {
    arity(e, 1);
    return MeasureExpr::zero(parse_space(it[1]));
  }
  if (h == "dirac") {
    if (it.size() == 2) return dirac(parse_point(it[1], SpaceExpr::real()), SpaceExpr::real());
    arity(e, 2);
    SpaceExpr s = parse_space(it[2]);
    return dirac(parse_point(it[1], s), s);
  }
  if (h == "counting-fin") {
    arity(e, 2);
    return counting_fin(parse_set(it[2], parse_space(it[1])));
  }
  if (h == "counting-nat") {
    arity(e, 1);
    if (it[1].is_atom("all")) return counting_nat();
    return counting_nat(parse_set(it[1], SpaceExpr::nat()));
  }
  if (h == "counting") {
    arity(e, 1);
    return counting(parse_space(it[1]));
  }
  if (h == "lebesgue") {
    arity(e, 2);
    auto lo = bound_of(it[1]), hi = bound_of(it[2]);
    return lebesgue(RealSet::interval(lo, hi, lo.has_value(), hi.has_value()));
  }
  if (h == "density") {
    arity(e, 2);
    return density_measure(parse_set(it[1], SpaceExpr::real()).real_set(), parse_fn(it[2], SpaceExpr::real()));
  }
  if (h == "uniform") {
    arity(e, 2);
    return uniform(rational_of(it[1]), rational_of(it[2]));
  }
  if (h == "normal" || h == "beta") {
    arity(e, 2);
    double a = double_of(it[1]), b = double_of(it[2]);
    return h == "normal" ? normal(a, b) : beta_dist(a, b);
  }
  if (h == "bernoulli") {
    arity(e, 1);
    return bernoulli(parse_weight(it[1]));
  }
  if (h == "binomial") {
    arity(e, 2);
    return binomial(nat_of(it[1]), parse_weight(it[2]));
  }
  if (h == "poisson") {
    arity(e, 1);
    return poisson(double_of(it[1]));
  }
  if (h == "scale") {
    arity(e, 2);
    return MeasureExpr::weighted(parse_weight(it[1]), parse_measure(it[2]));
  }
  if (h == "sum") {
    if (it.size() < 2) bad(e, "sum needs at least one measure");
    std::vector<MeasureExpr> ms;
    for (std::size_t i = 1; i < it.size(); ++i) ms.push_back(parse_measure(it[i]));
    return MeasureExpr::sum(ms);
  }
  if (h == "push" || h == "reweight") {
    arity(e, 2);
    MeasureExpr m = parse_measure(it[1]);
    FnExpr f = parse_fn(it[2], m.space());
    return h == "push" ? MeasureExpr::push(m, f) : MeasureExpr::reweight(m, f);
  }
  if (h == "product") {
    arity(e, 2);
    return MeasureExpr::product(parse_measure(it[1]), parse_measure(it[2]));
  }
  if (h == "seqsum") {
    if (it.size() < 2) bad(e, "seqsum needs a family");
    const auto& fam = atom_of(it[1]);
    if (fam == "constant-repeat" && it.size() == 3) return seq_constant_repeat(parse_measure(it[2]));
    if (fam == "geometric-weights" && it.size() == 4) return seq_geometric(rational_of(it[2]), parse_measure(it[3]));
    if (fam == "lebesgue-slices" && it.size() == 2) return seq_lebesgue_slices();
    bad(e, "unknown seqsum family");
  }
  if (h == "bind") {
    arity(e, 2);
    return bind_measure(parse_measure(it[1]), parse_kernel(it[2]));
  }
  if (h == "kapply") {
    arity(e, 2);
    KernelExpr k = parse_kernel(it[1]);
    return eval_kernel(k, parse_point(it[2], k.dom()));
  }
  bad(e, "unknown measure");
}

KernelExpr parse_kernel_impl(const Sexp& e) {
  if (!e.is_list || e.items.empty()) bad(e, "expected a kernel");
  auto h = e.head();
  Args a = split_args(e);
  auto k_at = [&](std::size_t i) { return parse_kernel(*a.pos[i]); };
  if (h == "kzero") {
    need(e, a, 2);
    return KernelExpr::zero(parse_space(*a.pos[0]), parse_space(*a.pos[1]));
  }
  if (h == "det") {
    need(e, a, 1);
    SpaceExpr d = dom_or(a, SpaceExpr::real());
    return KernelExpr::det(parse_fn(*a.pos[0], d), d);
  }
  if (h == "constk") {
    need(e, a, 1);
    return KernelExpr::constant(parse_measure(*a.pos[0]), dom_or(a, SpaceExpr::unit()));
  }
  if (h == "param") {
    if (a.pos.empty()) bad(e, "param needs a family");
    SpaceExpr d = dom_or(a, SpaceExpr::real());
    std::vector<FnExpr> args;
    for (std::size_t i = 1; i < a.pos.size(); ++i) args.push_back(parse_fn(*a.pos[i], d));
    return KernelExpr::param(atom_of(*a.pos[0]), args, d);
  }
  if (h == "kcompose" || h == "prodl" || h == "prodr") {
    need(e, a, 2);
    KernelExpr k = k_at(0), l = k_at(1);
    if (h == "kcompose") return KernelExpr::compose(k, l);
    return h == "prodl" ? KernelExpr::prod_l(k, l) : KernelExpr::prod_r(k, l);
  }
  if (h == "kpush") {
    need(e, a, 2);
    KernelExpr k = k_at(0);
    return KernelExpr::push(k, parse_fn(*a.pos[1], k.cod()));
  }
  if (h == "kpull") {
    need(e, a, 2);
    SpaceExpr d = dom_or(a, SpaceExpr::real());
    return KernelExpr::pull(parse_fn(*a.pos[0], d), k_at(1), d);
  }
  if (h == "kscore") {
    need(e, a, 2);
    KernelExpr k = k_at(0);
    return KernelExpr::score(k, parse_fn(*a.pos[1], SpaceExpr::prod(k.dom(), k.cod())));
  }
  if (h == "ksum") {
    if (a.pos.empty()) bad(e, "ksum needs at least one kernel");
    std::vector<KernelExpr> ks;
    for (std::size_t i = 0; i < a.pos.size(); ++i) ks.push_back(k_at(i));
    return KernelExpr::sum(ks);
  }
  if (h == "sigma-part") {
    need(e, a, 1);
    return factorize_one_infty(k_at(0)).kernel;
  }
  if (h == "sigma-finite-presentation") {
    need(e, a, 1);
    return sigma_finite_presentation(k_at(0)).kernel;
  }
  if (h == "abs-cont-part" || h == "inf-singular-part" || h == "singular-part") {
    need(e, a, 2);
    auto p = lebesgue_decompose(k_at(0), k_at(1));
    if (h == "abs-cont-part") return p.abs_cont;
    return h == "inf-singular-part" ? p.inf_singular : p.singular;
  }
  if (h == "disintegration") {
    need(e, a, 3);
    KernelExpr mu = k_at(0), nu = k_at(1);
    return disintegrate(mu, nu, parse_fn(*a.pos[2], mu.cod())).kernel;
  }
  bad(e, "unknown kernel");
}

}  // namespace

SetExpr parse_set(const Sexp& e, const SpaceExpr& space) {
  return guarded(e, [&] { return parse_set_impl(e, space); });
}

FnExpr parse_fn(const Sexp& e, const SpaceExpr& dom) {
  return guarded(e, [&] { return parse_fn_impl(e, dom); });
}

MeasureExpr parse_measure(const Sexp& e) {
  return guarded(e, [&] { return parse_measure_impl(e); });
}

KernelExpr parse_kernel(const Sexp& e) {
  return guarded(e, [&] { return parse_kernel_impl(e); });
}

SpaceExpr parse_space(std::string_view text) { return parse_space(read_sexp(text)); }
SetExpr parse_set(std::string_view text, const SpaceExpr& space) { return parse_set(read_sexp(text), space); }
FnExpr parse_fn(std::string_view text, const SpaceExpr& dom) { return parse_fn(read_sexp(text), dom); }
MeasureExpr parse_measure(std::string_view text) { return parse_measure(read_sexp(text)); }
KernelExpr parse_kernel(std::string_view text) { return parse_kernel(read_sexp(text)); }

bool is_kernel_head(std::string_view h) {
  for (const char* k : {"kzero", "det", "constk", "param", "kcompose", "kpush", "kpull", "kscore", "ksum", "prodl",
                        "prodr", "sigma-part", "sigma-finite-presentation", "abs-cont-part", "inf-singular-part",
                        "singular-part", "disintegration"})
    if (h == k) return true;
  return false;
}

Term parse_term(const Sexp& e) {
  if (is_kernel_head(e.head())) return parse_kernel(e);
  return parse_measure(e);
}

Term parse_term(std::string_view text) { return parse_term(read_sexp(text)); }

std::string term_str(const Term& t) {
  return std::visit([](const auto& x) { return x.str(); }, t);
}

}  // namespace sfk
