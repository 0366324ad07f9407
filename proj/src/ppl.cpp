#include "sfk/ppl.hpp"

#include <cmath>
#include <functional>
#include <mutex>
#include <random>
#include <set>

#include "sfk/calculus.hpp"
#include "sfk/dsl.hpp"
#include "sfk/errors.hpp"
#include "sfk/randomise.hpp"

namespace sfk::ppl {

struct Node {
  enum class Kind : std::uint8_t { Pure, Let, Sample, Score, If, Pair, Fail };
  Kind kind = Kind::Pure;
  SpaceExpr ctx;
  SpaceExpr type;
  FnExpr fn;                         // Pure value, Score weight
  SetExpr guard = SetExpr::full({}); // If: region taking the first branch
  KernelExpr site;                   // Sample
  std::optional<MeasureExpr> site_measure;
  std::vector<NodePtr> kids;

  mutable std::once_flag icdf_once;
  mutable std::shared_ptr<const InverseCdf> icdf;
  mutable std::optional<Error> icdf_error;
};

namespace {

[[noreturn]] void fail_at(Errc code, const Term& t, const std::string& msg) {
  fail(code, msg + " at " + std::to_string(t.line) + ":" + std::to_string(t.column));
}

struct Ctx {
  SpaceExpr space;
  std::vector<std::pair<std::string, FnExpr>> vars;

  Ctx extend(const std::string& name, const SpaceExpr& a) const {
    Ctx c;
    c.space = SpaceExpr::prod(space, a);
    for (const auto& [n, f] : vars) c.vars.emplace_back(n, FnExpr::compose(f, FnExpr::proj1()));
    c.vars.emplace_back(name, FnExpr::proj2());
    return c;
  }
  const FnExpr* lookup(const std::string& name) const {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
      if (it->first == name) return &it->second;
    }
    return nullptr;
  }
};

bool closed(const TermPtr& t) {
  if (t->kind == Term::Kind::Var) return false;
  for (const auto& k : t->kids) {
    if (!closed(k)) return false;
  }
  return true;
}

std::shared_ptr<Term> clone_with(const Term& at, Term::Kind kind, std::string name, std::vector<TermPtr> kids) {
  auto t = std::make_shared<Term>();
  t->kind = kind;
  t->name = std::move(name);
  t->kids = std::move(kids);
  t->line = at.line;
  t->column = at.column;
  return t;
}

// Rewrites effectful operands of an operation into preceding lets.
TermPtr lift_effects(const TermPtr& t, int& fresh) {
  std::vector<std::pair<std::string, TermPtr>> binds;
  std::vector<TermPtr> kids;
  for (const auto& k : t->kids) {
    if (is_pure(k)) {
      kids.push_back(k);
    } else {
      std::string n = "%" + std::to_string(fresh++);
      binds.emplace_back(n, k);
      kids.push_back(clone_with(*k, Term::Kind::Var, n, {}));
    }
  }
  auto op = std::make_shared<Term>(*t);
  op->kids = kids;
  TermPtr out = op;
  for (auto it = binds.rbegin(); it != binds.rend(); ++it) out = clone_with(*t, Term::Kind::Let, it->first, {it->second, out});
  return out;
}

Rational closed_rational(const FnExpr& f, const Term& at) {
  Point v = eval_fn(f, Point::unit());
  if (v.kind() == Point::Kind::Real) return Rational(v.real());
  if (v.kind() == Point::Kind::Nat) return Rational(static_cast<unsigned long>(v.nat()));
  if (v.kind() == Point::Kind::Weight && !v.weight().is_inf()) return v.weight().to_rational();
  fail_at(Errc::TypeError, at, "expected a finite number");
}

std::optional<FnOp> unary_op(std::string_view name) {
  if (name == "exp") return FnOp::Exp;
  if (name == "log") return FnOp::Log;
  if (name == "sqrt") return FnOp::Sqrt;
  if (name == "abs") return FnOp::Abs;
  if (name == "floor") return FnOp::Floor;
  if (name == "neg") return FnOp::Neg;
  return std::nullopt;
}

std::optional<FnOp> binary_op(std::string_view name) {
  if (name == "+") return FnOp::Add;
  if (name == "-") return FnOp::Sub;
  if (name == "*") return FnOp::Mul;
  if (name == "/") return FnOp::Div;
  if (name == "^" || name == "pow") return FnOp::Pow;
  if (name == "min") return FnOp::Min;
  if (name == "max") return FnOp::Max;
  return std::nullopt;
}

bool is_comparison(std::string_view op) {
  return op == "<" || op == "<=" || op == ">" || op == ">=" || op == "==" || op == "!=";
}

std::string flip(std::string_view op) {
  if (op == "<") return ">";
  if (op == "<=") return ">=";
  if (op == ">") return "<";
  if (op == ">=") return "<=";
  return std::string(op);
}

// {x in R : x op c}
RealSet real_region(std::string_view op, const Rational& c) {
  if (op == "<") return RealSet::interval(std::nullopt, c, false, false);
  if (op == "<=") return RealSet::interval(std::nullopt, c, false, true);
  if (op == ">") return RealSet::interval(c, std::nullopt, false, false);
  if (op == ">=") return RealSet::interval(c, std::nullopt, true, false);
  if (op == "==") return RealSet::point(c);
  return RealSet::point(c).complement();
}

SetExpr region_on(const SpaceExpr& space, std::string_view op, const std::optional<Rational>& c, const Term& at) {
  bool inf_member = !c ? (op == "==" || op == ">=" || op == "<=") : (op == ">" || op == ">=" || op == "!=");
  switch (space.kind()) {
    case SpaceExpr::Kind::Real:
      if (!c) return op == "<" || op == "<=" || op == "!=" ? SetExpr::full(space) : SetExpr::empty(space);
      return SetExpr::real(real_region(op, *c));
    case SpaceExpr::Kind::Ext: {
      RealSet fin = c ? real_region(op, *c) : (op == "<" || op == "!=" || op == "<=" ? RealSet::full() : RealSet::empty());
      return SetExpr::ext(fin.intersect(RealSet::interval(Rational(0), std::nullopt, true, false)), inf_member);
    }
    case SpaceExpr::Kind::Nat: {
      if (!c) return op == "<" || op == "<=" || op == "!=" ? SetExpr::full(space) : SetExpr::empty(space);
      RealSet r = real_region(op, *c);
      Rational top = *c < 0 ? Rational(0) : *c;
      auto n = static_cast<std::uint64_t>(mpz_class(top.get_num() / top.get_den()).get_ui()) + 2;
      std::vector<std::uint64_t> in;
      std::vector<std::uint64_t> out;
      for (std::uint64_t k = 0; k <= n; ++k) (r.contains(Rational(static_cast<unsigned long>(k))) ? in : out).push_back(k);
      if (r.contains(Rational(static_cast<unsigned long>(n + 1)))) return SetExpr::nat_cofinite(out);
      return SetExpr::nat_finite(in);
    }
    default:
      fail_at(Errc::TypeError, at, "comparison needs a numeric operand, got " + space.str());
  }
}

struct Checker {
  EvalConfig cfg;
  std::size_t sites = 0;
  int fresh = 0;

  FnExpr pure(const TermPtr& t, const Ctx& ctx) {
    try {
      return pure_raw(t, ctx);
    } catch (const SyntaxError&) {
      throw;
    } catch (const Error& e) {
      if (e.code() == Errc::ScopeError || e.code() == Errc::TypeError) throw;
      fail_at(Errc::TypeError, *t, e.what());
    }
  }

  SpaceExpr type_of(const FnExpr& f, const Ctx& ctx, const Term& at) {
    try {
      return codomain(f, ctx.space);
    } catch (const Error& e) {
      fail_at(Errc::TypeError, at, e.what());
    }
  }

  FnExpr pure_raw(const TermPtr& t, const Ctx& ctx) {
    switch (t->kind) {
      case Term::Kind::Var: {
        const FnExpr* f = ctx.lookup(t->name);
        if (!f) fail_at(Errc::ScopeError, *t, "unbound name '" + t->name + "'");
        return *f;
      }
      case Term::Kind::Num: {
        auto q = parse_rational(t->num);
        if (!q) fail_at(Errc::TypeError, *t, "bad number " + t->num);
        return FnExpr::lit(*q);
      }
      case Term::Kind::Inf:
        return FnExpr::lit_inf();
      case Term::Kind::Unit:
        return FnExpr::constant(Point::unit(), SpaceExpr::unit());
      case Term::Kind::Pair:
        return FnExpr::pair(pure(t->kids[0], ctx), pure(t->kids[1], ctx));
      case Term::Kind::FnLit: {
        FnExpr arg = pure(t->kids[0], ctx);
        SpaceExpr dom = type_of(arg, ctx, *t);
        FnExpr f;
        try {
          f = parse_fn(t->name, dom);
        } catch (const SyntaxError& e) {
          fail_at(Errc::TypeError, *t, e.what());
        }
        return FnExpr::compose(f, arg);
      }
      case Term::Kind::Op:
        return op(t, ctx);
      default:
        fail_at(Errc::TypeError, *t, "expected a pure expression");
    }
  }

  FnExpr op(const TermPtr& t, const Ctx& ctx) {
    const std::string& name = t->name;
    auto arity = [&](std::size_t n) {
      if (t->kids.size() != n) fail_at(Errc::TypeError, *t, name + " takes " + std::to_string(n) + " arguments");
    };
    if (is_comparison(name)) return comparison(t, ctx);
    if (auto u = unary_op(name)) {
      arity(1);
      return FnExpr::unary(*u, pure(t->kids[0], ctx));
    }
    if (auto b = binary_op(name)) {
      arity(2);
      return FnExpr::binary(*b, pure(t->kids[0], ctx), pure(t->kids[1], ctx));
    }
    if (name == "fst" || name == "snd") {
      arity(1);
      FnExpr a = pure(t->kids[0], ctx);
      if (type_of(a, ctx, *t).kind() != SpaceExpr::Kind::Prod) fail_at(Errc::TypeError, *t, name + " needs a pair");
      return FnExpr::compose(name == "fst" ? FnExpr::proj1() : FnExpr::proj2(), a);
    }
    std::vector<FnExpr> a;
    for (const auto& k : t->kids) a.push_back(pure(k, ctx));
    if (name == "pdf_normal") {
      arity(3);
      return FnExpr::pdf_normal(a[0], a[1], a[2]);
    }
    if (name == "pdf_beta") {
      arity(3);
      return FnExpr::pdf_beta(a[0], a[1], a[2]);
    }
    if (name == "pmf_poisson") {
      arity(2);
      return FnExpr::pmf_poisson(a[0], a[1]);
    }
    if (name == "pmf_binomial") {
      arity(3);
      return FnExpr::pmf_binomial(a[0], a[1], a[2]);
    }
    fail_at(Errc::ScopeError, *t, "unknown function '" + name + "'");
  }

  FnExpr comparison(const TermPtr& t, const Ctx& ctx) {
    std::string op = t->name;
    TermPtr lhs = t->kids[0];
    TermPtr rhs = t->kids[1];
    if (closed(lhs) && !closed(rhs)) {
      std::swap(lhs, rhs);
      op = flip(op);
    }
    FnExpr a = pure(lhs, ctx);
    FnExpr b = pure(rhs, ctx);
    if (!closed(rhs)) {
      a = FnExpr::sub(a, b);
      b = FnExpr::lit(Rational(0));
    }
    SpaceExpr cod = type_of(a, ctx, *t);
    std::optional<Rational> c;
    if (!closed(rhs) || !(eval_fn(b, Point::unit()).kind() == Point::Kind::Weight &&
                          eval_fn(b, Point::unit()).weight().is_inf()))
      c = closed_rational(b, *rhs);
    SetExpr target = region_on(cod, op, c, *t);
    auto pre = try_preimage(a, ctx.space, target);
    if (!pre) fail_at(Errc::TypeError, *t, "comparison has no computable region");
    return FnExpr::indicator(*pre);
  }

  KernelExpr dist(const Dist& d, const Ctx& ctx, const Term& at) {
    switch (d.kind) {
      case Dist::Kind::Literal: {
        MeasureExpr m;
        try {
          m = parse_measure(d.literal);
        } catch (const SyntaxError& e) {
          fail_at(Errc::TypeError, at, e.what());
        }
        return KernelExpr::constant(m, ctx.space);
      }
      case Dist::Kind::Scale: {
        KernelExpr k = dist(d.parts.at(0), ctx, at);
        const TermPtr& w = d.args.at(0);
        if (!is_pure(w)) fail_at(Errc::TypeError, *w, "distribution parameters must be pure");
        FnExpr wf = pure(w, ctx);
        if (closed(w)) {
          if (auto m = constant_measure(k)) {
            Point v = eval_fn(wf, Point::unit());
            return KernelExpr::constant(MeasureExpr::weighted(as_weight(v), *m), ctx.space);
          }
        }
        return KernelExpr::score(k, FnExpr::compose(wf, FnExpr::proj1()));
      }
      case Dist::Kind::Sum: {
        std::vector<KernelExpr> ks;
        std::vector<MeasureExpr> ms;
        for (const auto& p : d.parts) {
          ks.push_back(dist(p, ctx, at));
          if (auto m = constant_measure(ks.back())) ms.push_back(*m);
        }
        for (std::size_t i = 1; i < ks.size(); ++i) {
          if (!(ks[i].cod() == ks[0].cod())) fail_at(Errc::TypeError, at, "sum of distributions on different spaces");
        }
        if (ms.size() == ks.size()) return KernelExpr::constant(MeasureExpr::sum(ms), ctx.space);
        return KernelExpr::sum(ks);
      }
      case Dist::Kind::Family:
        break;
    }
    bool all_closed = true;
    for (const auto& a : d.args) {
      if (!is_pure(a)) fail_at(Errc::TypeError, *a, "distribution parameters must be pure");
      all_closed = all_closed && closed(a);
    }
    if (d.family == "counting-nat") return KernelExpr::constant(counting_nat(), ctx.space);
    if (d.family == "lebesgue") {
      if (d.args.empty()) return KernelExpr::constant(lebesgue(), ctx.space);
      if (!all_closed) fail_at(Errc::TypeError, at, "lebesgue bounds must be constants");
      auto bound = [&](const TermPtr& a) -> RealSet::Bound {
        bool first = a == d.args[0];
        if (a->kind == Term::Kind::Op && a->name == "neg" && a->kids[0]->kind == Term::Kind::Inf) {
          if (!first) fail_at(Errc::TypeError, *a, "upper bound cannot be -inf");
          return std::nullopt;
        }
        if (a->kind == Term::Kind::Inf) {
          if (first) fail_at(Errc::TypeError, *a, "lower bound cannot be inf");
          return std::nullopt;
        }
        return closed_rational(pure(a, Ctx{}), *a);
      };
      return KernelExpr::constant(lebesgue(RealSet::interval(bound(d.args[0]), bound(d.args[1]), true, true)),
                                  ctx.space);
    }
    std::string fam = d.family == "beta-density" ? "beta" : d.family;
    if (fam == "dirac" && all_closed) {
      Point v = eval_fn(pure(d.args[0], Ctx{}), Point::unit());
      if (v.kind() == Point::Kind::Weight && !v.weight().is_inf())
        return KernelExpr::constant(dirac(Point::real(v.weight().to_double()), SpaceExpr::real()), ctx.space);
    }
    std::vector<FnExpr> args;
    for (const auto& a : d.args) args.push_back(pure(a, all_closed ? Ctx{} : ctx));
    try {
      if (all_closed) {
        MeasureExpr m = eval_kernel(KernelExpr::param(fam, args, SpaceExpr::unit()), Point::unit());
        return KernelExpr::constant(m, ctx.space);
      }
      return KernelExpr::param(fam, args, ctx.space);
    } catch (const Error& e) {
      fail_at(Errc::TypeError, at, e.what());
    }
  }

  NodePtr node(const TermPtr& t, const Ctx& ctx, const std::optional<SpaceExpr>& expected) {
    auto n = std::make_shared<Node>();
    n->ctx = ctx.space;
    switch (t->kind) {
      case Term::Kind::Var:
      case Term::Kind::Num:
      case Term::Kind::Inf:
      case Term::Kind::Unit:
      case Term::Kind::FnLit:
      case Term::Kind::Op:
      case Term::Kind::Pair:
        if (!is_pure(t)) {
          if (t->kind == Term::Kind::Pair) {
            n->kind = Node::Kind::Pair;
            std::optional<SpaceExpr> ea;
            std::optional<SpaceExpr> eb;
            if (expected && expected->kind() == SpaceExpr::Kind::Prod) {
              ea = expected->left();
              eb = expected->right();
            }
            n->kids = {node(t->kids[0], ctx, ea), node(t->kids[1], ctx, eb)};
            n->type = SpaceExpr::prod(n->kids[0]->type, n->kids[1]->type);
            return n;
          }
          return node(lift_effects(t, fresh), ctx, expected);
        }
        n->kind = Node::Kind::Pure;
        n->fn = pure(t, ctx);
        n->type = type_of(n->fn, ctx, *t);
        return n;
      case Term::Kind::Fail:
        n->kind = Node::Kind::Fail;
        n->type = expected.value_or(SpaceExpr::unit());
        return n;
      case Term::Kind::Let: {
        n->kind = Node::Kind::Let;
        auto a = node(t->kids[0], ctx, std::nullopt);
        auto b = node(t->kids[1], ctx.extend(t->name, a->type), expected);
        n->type = b->type;
        n->kids = {a, b};
        return n;
      }
      case Term::Kind::Sample:
        n->kind = Node::Kind::Sample;
        n->site = dist(t->dist, ctx, *t);
        n->site_measure = constant_measure(n->site);
        n->type = n->site.cod();
        ++sites;
        return n;
      case Term::Kind::Score: {
        n->kind = Node::Kind::Score;
        if (!is_pure(t->kids[0])) fail_at(Errc::TypeError, *t->kids[0], "score takes a pure expression");
        n->fn = pure(t->kids[0], ctx);
        if (!type_of(n->fn, ctx, *t).is_numeric()) fail_at(Errc::TypeError, *t->kids[0], "score needs a numeric weight");
        n->kids = {node(t->kids[1], ctx, expected)};
        n->type = n->kids[0]->type;
        return n;
      }
      case Term::Kind::If: {
        n->kind = Node::Kind::If;
        if (!is_pure(t->kids[0])) fail_at(Errc::TypeError, *t->kids[0], "if takes a pure guard");
        FnExpr g = pure(t->kids[0], ctx);
        if (!type_of(g, ctx, *t).is_numeric()) fail_at(Errc::TypeError, *t->kids[0], "guard must be numeric");
        if (g.op() == FnOp::Indicator) {
          n->guard = g.set();
        } else {
          try {
            n->guard = value_classes(g, ctx.space).zero.complement();
          } catch (const Error& e) {
            fail_at(Errc::TypeError, *t->kids[0], e.what());
          }
        }
        NodePtr a;
        NodePtr b;
        if (t->kids[1]->kind == Term::Kind::Fail) {
          b = node(t->kids[2], ctx, expected);
          a = node(t->kids[1], ctx, b->type);
        } else {
          a = node(t->kids[1], ctx, expected);
          b = node(t->kids[2], ctx, a->type);
        }
        if (!(a->type == b->type))
          fail_at(Errc::TypeError, *t, "branches have types " + a->type.str() + " and " + b->type.str());
        n->type = a->type;
        n->kids = {a, b};
        return n;
      }
    }
    fail_at(Errc::TypeError, *t, "unexpected term");
  }
};

KernelExpr denote_node(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Pure:
      return KernelExpr::det(n.fn, n.ctx);
    case Node::Kind::Fail:
      return KernelExpr::zero(n.ctx, n.type);
    case Node::Kind::Sample:
      return n.site;
    case Node::Kind::Let:
      return KernelExpr::push(KernelExpr::prod_l(denote_node(*n.kids[0]), denote_node(*n.kids[1])), FnExpr::proj2());
    case Node::Kind::Score:
      return KernelExpr::score(denote_node(*n.kids[0]), FnExpr::compose(n.fn, FnExpr::proj1()));
    case Node::Kind::If: {
      SetExpr then_region = SetExpr::rect(n.guard, SetExpr::full(n.type));
      SetExpr else_region = SetExpr::rect(n.guard.complement(), SetExpr::full(n.type));
      return KernelExpr::sum({KernelExpr::score(denote_node(*n.kids[0]), FnExpr::indicator(then_region)),
                              KernelExpr::score(denote_node(*n.kids[1]), FnExpr::indicator(else_region))});
    }
    case Node::Kind::Pair: {
      KernelExpr a = denote_node(*n.kids[0]);
      return KernelExpr::prod_l(a, lift(denote_node(*n.kids[1]), a.cod()));
    }
  }
  return {};
}

struct Runner {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> unit{0.0, 1.0};
  double tol;
  EvalConfig cfg;
};

const InverseCdf& site_icdf(const Node& n, const Runner& r) {
  std::call_once(n.icdf_once, [&] {
    try {
      n.icdf = std::make_shared<InverseCdf>(*n.site_measure, r.tol, r.cfg);
    } catch (const Error& e) {
      n.icdf_error = e;
    }
  });
  if (n.icdf_error) fail(Errc::UnsampleableSite, std::string("sample site is not a subprobability: ") + n.icdf_error->what());
  return *n.icdf;
}

std::optional<Point> run_node(const Node& n, const Point& env, Runner& r, ExtReal& w) {
  switch (n.kind) {
    case Node::Kind::Pure:
      return eval_fn(n.fn, env);
    case Node::Kind::Fail:
      w = ExtReal(0);
      return std::nullopt;
    case Node::Kind::Sample: {
      double u = r.unit(r.rng);
      Point p;
      if (n.site_measure) {
        p = site_icdf(n, r).at(u);
      } else {
        MeasureExpr m = eval_kernel(n.site, env);
        try {
          p = InverseCdf(m, r.tol, r.cfg).at(u);
        } catch (const Error& e) {
          if (e.code() != Errc::NotSubprobability) throw;
          fail(Errc::UnsampleableSite, std::string("sample site is not a subprobability: ") + e.what());
        }
      }
      if (p.is_bottom()) return std::nullopt;
      return p;
    }
    case Node::Kind::Score:
      w = w * eval_weight(n.fn, env);
      return run_node(*n.kids[0], env, r, w);
    case Node::Kind::If:
      return run_node(*n.kids[n.guard.member(env) ? 0 : 1], env, r, w);
    case Node::Kind::Let: {
      auto v = run_node(*n.kids[0], env, r, w);
      if (!v) return std::nullopt;
      return run_node(*n.kids[1], Point::pair(env, *v), r, w);
    }
    case Node::Kind::Pair: {
      auto a = run_node(*n.kids[0], env, r, w);
      if (!a) return std::nullopt;
      auto b = run_node(*n.kids[1], env, r, w);
      if (!b) return std::nullopt;
      return Point::pair(*a, *b);
    }
  }
  return std::nullopt;
}

double point_double(const Point& p) {
  switch (p.kind()) {
    case Point::Kind::Real:
      return p.real();
    case Point::Kind::Nat:
      return static_cast<double>(p.nat());
    case Point::Kind::Weight:
      return p.weight().to_double();
    default:
      fail(Errc::TypeMismatch, "not a number: " + p.str());
  }
}

void collect_names(const TermPtr& t, std::set<std::string>& out) {
  if (t->kind == Term::Kind::Var || t->kind == Term::Kind::Let) out.insert(t->name);
  for (const auto& k : t->kids) collect_names(k, out);
  for (const auto& a : t->dist.args) collect_names(a, out);
}

TermPtr replace(const TermPtr& t, const TermPtr& target, const TermPtr& with) {
  if (t == target) return with;
  bool changed = false;
  std::vector<TermPtr> kids;
  for (const auto& k : t->kids) {
    kids.push_back(replace(k, target, with));
    changed = changed || kids.back() != k;
  }
  if (!changed) return t;
  auto c = std::make_shared<Term>(*t);
  c->kids = std::move(kids);
  return c;
}

std::optional<MeasureExpr> closed_site_measure(const TermPtr& site) {
  for (const auto& a : site->dist.args) {
    if (!closed(a)) return std::nullopt;
  }
  Checker c;
  try {
    return constant_measure(c.dist(site->dist, Ctx{}, *site));
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<SetExpr> probes(const SpaceExpr& s, std::size_t limit) {
  std::vector<SetExpr> out;
  switch (s.kind()) {
    case SpaceExpr::Kind::Unit:
    case SpaceExpr::Kind::Fin:
      for (const auto& p : enumerate(s)) out.push_back(SetExpr::singleton(s, p));
      break;
    case SpaceExpr::Kind::Nat:
      for (std::uint64_t k = 0; k <= 20; ++k) out.push_back(SetExpr::nat_finite({k}));
      break;
    case SpaceExpr::Kind::Real:
    case SpaceExpr::Kind::Ext:
      for (int i = -10; i <= 10; ++i) {
        RealSet r = RealSet::interval(std::nullopt, Rational(i, 2), false, true);
        out.push_back(s.kind() == SpaceExpr::Kind::Real ? SetExpr::real(r) : SetExpr::ext(r, false));
      }
      if (s.kind() == SpaceExpr::Kind::Ext) out.push_back(SetExpr::ext(RealSet::empty(), true));
      break;
    case SpaceExpr::Kind::Prod: {
      auto a = probes(s.left(), 6);
      auto b = probes(s.right(), 6);
      for (const auto& x : a) {
        for (const auto& y : b) out.push_back(SetExpr::rect(x, y));
      }
      break;
    }
    case SpaceExpr::Kind::Sum: {
      for (const auto& x : probes(s.left(), limit)) out.push_back(SetExpr::sum(x, SetExpr::empty(s.right())));
      for (const auto& y : probes(s.right(), limit)) out.push_back(SetExpr::sum(SetExpr::empty(s.left()), y));
      break;
    }
  }
  if (out.size() > limit) {
    std::vector<SetExpr> thin;
    for (std::size_t i = 0; i < limit; ++i) thin.push_back(out[i * out.size() / limit]);
    out = std::move(thin);
  }
  out.push_back(SetExpr::full(s));
  return out;
}

bool close_enough(const ExtReal& a, const ExtReal& b, double tol) {
  if (a.is_inf() || b.is_inf()) return a.is_inf() && b.is_inf();
  if (a.is_exact() && b.is_exact()) return a == b;
  double x = a.to_double();
  double y = b.to_double();
  return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
}

}  // namespace

Program Program::check(const TermPtr& t, const EvalConfig& cfg) {
  Checker c;
  c.cfg = cfg;
  Program p;
  p.term_ = t;
  p.root_ = c.node(t, Ctx{}, std::nullopt);
  p.sites_ = c.sites;
  return p;
}

const SpaceExpr& Program::type() const { return root_->type; }

std::size_t Program::site_count() const { return sites_; }

Program parse_and_check(std::string_view text, const EvalConfig& cfg) {
  return Program::check(parse_program(text), cfg);
}

KernelExpr denote(const Program& p) { return denote_node(*p.root()); }

MeasureExpr denote_measure(const Program& p) { return eval_kernel(denote(p), Point::unit()); }

std::vector<WeightedSample> run_sampler(const Program& p, std::uint64_t seed, std::uint64_t n, const EvalConfig& cfg) {
  std::vector<WeightedSample> out;
  out.reserve(n);
  Runner r{std::mt19937_64(derive_seed(seed, 0)), {}, cfg.tol, cfg};
  for (std::uint64_t i = 0; i < n; ++i) {
    r.rng.seed(derive_seed(seed, i));
    ExtReal w(1);
    auto v = run_node(*p.root(), Point::unit(), r, w);
    out.push_back({v ? *v : Point::bottom(), v ? w : ExtReal(0)});
  }
  return out;
}

double weighted_mean(const std::vector<WeightedSample>& samples) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : samples) {
    if (s.value.is_bottom() || s.weight.is_zero()) continue;
    double w = s.weight.to_double();
    num += w * point_double(s.value);
    den += w;
  }
  if (den == 0.0) fail(Errc::NumericDomain, "all sample weights are zero");
  return num / den;
}

std::optional<std::size_t> find_site(const TermPtr& program, const MeasureExpr& target) {
  auto sites = sample_sites(program);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    auto m = closed_site_measure(sites[i]);
    if (m && m->str() == target.str()) return i;
  }
  return std::nullopt;
}

TermPtr importance_transform(const TermPtr& program, std::size_t site, const MeasureExpr& proposal,
                             const EvalConfig& cfg) {
  auto sites = sample_sites(program);
  if (site >= sites.size()) fail(Errc::Unsupported, "no sample site " + std::to_string(site));
  const TermPtr& s = sites[site];
  auto target = closed_site_measure(s);
  if (!target) fail_at(Errc::Unsupported, *s, "importance transform needs a site with constant parameters");
  if (!(target->space() == proposal.space()))
    fail_at(Errc::TypeError, *s, "proposal lives on " + proposal.space().str() + ", site on " + target->space().str());
  MeasureRn rn = rn_derivative(*target, proposal, cfg);
  std::set<std::string> names;
  collect_names(program, names);
  std::string y = "y";
  for (int i = 1; names.count(y); ++i) y = "y" + std::to_string(i);
  auto var = clone_with(*s, Term::Kind::Var, y, {});
  auto draw = clone_with(*s, Term::Kind::Sample, {}, {});
  draw->dist.kind = Dist::Kind::Literal;
  draw->dist.literal = proposal.str();
  auto weight = clone_with(*s, Term::Kind::FnLit, rn.derivative.str(), {var});
  auto body = clone_with(*s, Term::Kind::Score, {}, {weight, var});
  auto let = clone_with(*s, Term::Kind::Let, y, {draw, body});
  return replace(program, s, let);
}

RejectionResult rejection_sampler(const MeasureExpr& target, const MeasureExpr& proposal, double bound,
                                  std::uint64_t seed, std::uint64_t n, const EvalConfig& cfg) {
  if (!(bound > 0.0)) fail(Errc::BoundViolation, "bound must be positive");
  MeasureRn rn = rn_derivative(target, proposal, cfg);
  InverseCdf icdf(proposal, cfg.tol, cfg);
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&]() -> std::optional<Point> {
    Point y = icdf.at(unit(rng));
    if (y.is_bottom()) return std::nullopt;
    return y;
  };
  const double slack = bound * (1.0 + 1e-9);
  std::mt19937_64 probe_rng(derive_seed(seed, 1));
  for (int i = 0; i < 2000; ++i) {
    Point y = icdf.at(unit(probe_rng));
    if (y.is_bottom()) continue;
    ExtReal r = eval_weight(rn.derivative, y);
    if (r.is_inf() || r.to_double() > slack)
      fail(Errc::BoundViolation, "density ratio " + r.str() + " at " + y.str() + " exceeds bound " + double_str(bound));
  }
  RejectionResult out;
  const std::uint64_t cap = 1000 * n + 1'000'000;
  while (out.samples.size() < n && out.proposals < cap) {
    ++out.proposals;
    auto y = draw();
    double u = unit(rng);
    if (!y) continue;
    ExtReal r = eval_weight(rn.derivative, *y);
    if (r.is_inf() || r.to_double() > slack)
      fail(Errc::BoundViolation, "density ratio " + r.str() + " at " + y->str() + " exceeds bound " + double_str(bound));
    if (u * bound <= r.to_double()) out.samples.push_back(*y);
  }
  return out;
}

bool equivalent_measures(const MeasureExpr& a, const MeasureExpr& b, EquivMode mode, double tol, const EvalConfig& cfg) {
  if (!(a.space() == b.space())) return false;
  if (mode == EquivMode::ExactFinite) {
    auto ta = discrete_table(a);
    auto tb = discrete_table(b);
    if (!ta || !tb) fail(Errc::Unsupported, "exact comparison needs finitely many atoms");
    auto na = normalized(*ta);
    auto nb = normalized(*tb);
    if (na.size() != nb.size()) return false;
    for (const auto& [p, w] : na) {
      auto it = nb.find(p);
      if (it == nb.end() || !close_enough(w, it->second, tol)) return false;
    }
    return true;
  }
  for (const auto& s : probes(a.space(), 64)) {
    if (!close_enough(measure_of(a, s, cfg).value, measure_of(b, s, cfg).value, tol)) return false;
  }
  return true;
}

bool equivalent(const Program& p, const Program& q, EquivMode mode, double tol, const EvalConfig& cfg) {
  if (!(p.type() == q.type())) return false;
  return equivalent_measures(denote_measure(p), denote_measure(q), mode, tol, cfg);
}

}  // namespace sfk::ppl
