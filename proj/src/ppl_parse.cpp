#include <cctype>
#include <set>

#include "sfk/errors.hpp"
#include "sfk/ppl.hpp"

namespace sfk::ppl {
namespace {

enum class Tok : std::uint8_t { Ident, Number, Brace, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

const std::set<std::string, std::less<>> kKeywords = {"let", "in", "sample", "score", "if", "then", "else", "fail", "inf"};
const std::set<std::string, std::less<>> kHyphenated = {"beta-density", "counting-nat"};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < s.size(); ++k, ++i) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
        ++col;
      }
    }
  };
  auto word_at = [&](std::size_t j) {
    std::size_t k = j;
    while (k < s.size() && (std::isalnum(static_cast<unsigned char>(s[k])) || s[k] == '_' || s[k] == '\'')) ++k;
    return k;
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t k = word_at(i);
      while (k < s.size() && s[k] == '-' && k + 1 < s.size() && std::isalpha(static_cast<unsigned char>(s[k + 1]))) {
        std::size_t k2 = word_at(k + 1);
        if (!kHyphenated.count(s.substr(i, k2 - i))) break;
        k = k2;
      }
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(i, k - i));
      advance(k - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t k = i;
      while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
      if (k < s.size() && s[k] == '.') {
        ++k;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
      }
      if (k < s.size() && (s[k] == 'e' || s[k] == 'E')) {
        std::size_t e = k + 1;
        if (e < s.size() && (s[e] == '+' || s[e] == '-')) ++e;
        if (e < s.size() && std::isdigit(static_cast<unsigned char>(s[e]))) {
          k = e;
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(s.substr(i, k - i));
      advance(k - i);
    } else if (c == '{') {
      int depth = 0;
      std::size_t k = i;
      for (; k < s.size(); ++k) {
        if (s[k] == '{') ++depth;
        if (s[k] == '}' && --depth == 0) break;
      }
      if (k >= s.size()) throw SyntaxError("unclosed '{'", line, col);
      std::string body(s.substr(i + 1, k - i - 1));
      auto b = body.find_first_not_of(" \t\r\n");
      auto e = body.find_last_not_of(" \t\r\n");
      t.kind = Tok::Brace;
      t.text = b == std::string::npos ? "" : body.substr(b, e - b + 1);
      advance(k + 1 - i);
    } else {
      static const char* two[] = {"<=", ">=", "==", "!="};
      t.kind = Tok::Sym;
      for (const char* op : two) {
        if (s.substr(i, 2) == op) t.text = op;
      }
      if (t.text.empty()) {
        if (std::string_view("(),;=+-*/^<>").find(c) == std::string_view::npos)
          throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

std::shared_ptr<Term> make(Term::Kind kind, const Token& at, std::string name = {}, std::vector<TermPtr> kids = {}) {
  auto t = std::make_shared<Term>();
  t->kind = kind;
  t->name = std::move(name);
  t->kids = std::move(kids);
  t->line = at.line;
  t->column = at.column;
  return t;
}

struct FamilyInfo {
  const char* name;
  int min_args;
  int max_args;
};

const FamilyInfo kFamilies[] = {
    {"uniform", 2, 2},     {"normal", 2, 2},  {"bernoulli", 1, 1}, {"poisson", 1, 1},      {"beta", 2, 2},
    {"beta-density", 2, 2}, {"binomial", 2, 2}, {"dirac", 1, 1},     {"lebesgue", 0, 2}, {"counting-nat", 0, 0},
};

const FamilyInfo* family_info(std::string_view name) {
  for (const auto& f : kFamilies) {
    if (name == f.name) return &f;
  }
  return nullptr;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  TermPtr program() {
    auto t = term();
    if (peek().kind != Tok::End) error("unexpected '" + peek().text + "'");
    return t;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool is_sym(std::string_view s, std::size_t k = 0) const { return peek(k).kind == Tok::Sym && peek(k).text == s; }
  bool is_kw(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }

  [[noreturn]] void error(const std::string& msg) const {
    const auto& t = peek();
    throw SyntaxError(t.kind == Tok::End ? msg + " at end of input" : msg, t.line, t.column);
  }
  void expect_sym(std::string_view s) {
    if (!is_sym(s)) error("expected '" + std::string(s) + "'");
    ++pos_;
  }
  void expect_kw(std::string_view s) {
    if (!is_kw(s)) error("expected '" + std::string(s) + "'");
    ++pos_;
  }
  std::string ident() {
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text)) error("expected a name");
    return next().text;
  }

  TermPtr term() {
    const Token& at = peek();
    if (is_kw("let")) {
      ++pos_;
      std::string name = ident();
      expect_sym("=");
      auto bound = term();
      expect_kw("in");
      auto body = term();
      return make(Term::Kind::Let, at, name, {bound, body});
    }
    if (is_kw("score")) {
      ++pos_;
      expect_sym("(");
      auto w = term();
      expect_sym(")");
      expect_sym(";");
      auto body = term();
      return make(Term::Kind::Score, at, {}, {w, body});
    }
    if (is_kw("if")) {
      ++pos_;
      auto g = term();
      expect_kw("then");
      auto a = term();
      expect_kw("else");
      auto b = term();
      return make(Term::Kind::If, at, {}, {g, a, b});
    }
    return comparison();
  }

  TermPtr comparison() {
    auto lhs = additive();
    for (const char* op : {"<=", ">=", "==", "!=", "<", ">"}) {
      if (is_sym(op)) {
        const Token& at = next();
        auto rhs = additive();
        return make(Term::Kind::Op, at, op, {lhs, rhs});
      }
    }
    return lhs;
  }

  TermPtr additive() {
    auto lhs = multiplicative();
    while (is_sym("+") || is_sym("-")) {
      const Token& at = next();
      lhs = make(Term::Kind::Op, at, at.text, {lhs, multiplicative()});
    }
    return lhs;
  }

  TermPtr multiplicative() {
    auto lhs = unary();
    while (is_sym("*") || is_sym("/")) {
      const Token& at = next();
      lhs = make(Term::Kind::Op, at, at.text, {lhs, unary()});
    }
    return lhs;
  }

  TermPtr unary() {
    if (is_sym("-")) {
      const Token& at = next();
      return make(Term::Kind::Op, at, "neg", {unary()});
    }
    auto base = primary();
    if (is_sym("^")) {
      const Token& at = next();
      return make(Term::Kind::Op, at, "^", {base, unary()});
    }
    return base;
  }

  TermPtr primary() {
    const Token& at = peek();
    switch (at.kind) {
      case Tok::Number: {
        ++pos_;
        auto t = make(Term::Kind::Num, at);
        t->num = at.text;
        return t;
      }
      case Tok::Brace: {
        ++pos_;
        expect_sym("(");
        auto arg = term();
        expect_sym(")");
        return make(Term::Kind::FnLit, at, at.text, {arg});
      }
      case Tok::Ident: {
        if (at.text == "inf") {
          ++pos_;
          return make(Term::Kind::Inf, at);
        }
        if (at.text == "fail") {
          ++pos_;
          return make(Term::Kind::Fail, at);
        }
        if (at.text == "sample") {
          ++pos_;
          expect_sym("(");
          auto t = make(Term::Kind::Sample, at);
          t->dist = dist();
          expect_sym(")");
          return t;
        }
        std::string name = ident();
        if (is_sym("(")) {
          ++pos_;
          std::vector<TermPtr> args;
          if (!is_sym(")")) {
            args.push_back(term());
            while (is_sym(",")) {
              ++pos_;
              args.push_back(term());
            }
          }
          expect_sym(")");
          return make(Term::Kind::Op, at, name, std::move(args));
        }
        return make(Term::Kind::Var, at, name);
      }
      case Tok::Sym:
        if (at.text == "(") {
          ++pos_;
          if (is_sym(")")) {
            ++pos_;
            return make(Term::Kind::Unit, at);
          }
          auto a = term();
          if (is_sym(",")) {
            ++pos_;
            auto b = term();
            expect_sym(")");
            return make(Term::Kind::Pair, at, {}, {a, b});
          }
          expect_sym(")");
          return a;
        }
        break;
      case Tok::End:
        break;
    }
    error(at.kind == Tok::End ? "expected a term" : "unexpected '" + at.text + "'");
  }

  bool dist_arg_start() const {
    const auto& t = peek();
    if (t.kind == Tok::Number) return true;
    if (t.kind == Tok::Ident) return !kKeywords.count(t.text) || t.text == "inf";
    return is_sym("(") || (is_sym("-") && (peek(1).kind == Tok::Number || peek(1).text == "inf"));
  }

  TermPtr dist_arg() {
    const Token& at = peek();
    if (at.kind == Tok::Number) {
      auto t = primary();
      if (is_sym("/") && peek(1).kind == Tok::Number) {
        const Token& op = next();
        return make(Term::Kind::Op, op, "/", {t, primary()});
      }
      return t;
    }
    if (at.kind == Tok::Ident) {
      ++pos_;
      return at.text == "inf" ? make(Term::Kind::Inf, at) : make(Term::Kind::Var, at, at.text);
    }
    if (is_sym("-")) {
      ++pos_;
      return make(Term::Kind::Op, at, "neg", {dist_arg()});
    }
    expect_sym("(");
    auto t = term();
    expect_sym(")");
    return t;
  }

  // A distribution in argument position: bracketed, a literal, or a parameterless family.
  Dist dist_part() {
    if (is_sym("(")) {
      ++pos_;
      auto d = dist();
      expect_sym(")");
      return d;
    }
    if (peek().kind == Tok::Brace) return dist();
    if (peek().kind == Tok::Ident) {
      const auto* info = family_info(peek().text);
      if (info && info->min_args == 0) {
        Dist d;
        d.family = next().text;
        return d;
      }
    }
    error("expected a distribution");
  }

  Dist dist() {
    Dist d;
    if (peek().kind == Tok::Brace) {
      d.kind = Dist::Kind::Literal;
      d.literal = next().text;
      return d;
    }
    if (is_sym("(")) {
      ++pos_;
      d = dist();
      expect_sym(")");
      return d;
    }
    if (peek().kind != Tok::Ident) error("expected a distribution");
    const Token& at = next();
    if (at.text == "scale") {
      d.kind = Dist::Kind::Scale;
      d.args.push_back(dist_arg());
      d.parts.push_back(dist_part());
      return d;
    }
    if (at.text == "sum") {
      d.kind = Dist::Kind::Sum;
      while (!is_sym(")")) d.parts.push_back(dist_part());
      if (d.parts.size() < 2) error("sum needs at least two distributions");
      return d;
    }
    const auto* info = family_info(at.text);
    if (!info) throw SyntaxError("unknown distribution '" + at.text + "'", at.line, at.column);
    d.family = at.text;
    while (dist_arg_start() && static_cast<int>(d.args.size()) < info->max_args) d.args.push_back(dist_arg());
    int n = static_cast<int>(d.args.size());
    if (n < info->min_args || (info->max_args == 2 && info->min_args == 0 && n == 1))
      throw SyntaxError(at.text + ": wrong number of parameters", at.line, at.column);
    return d;
  }
};

bool atomic(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Var:
    case Term::Kind::Num:
    case Term::Kind::Inf:
    case Term::Kind::Unit:
    case Term::Kind::Fail:
    case Term::Kind::Sample:
    case Term::Kind::Pair:
    case Term::Kind::FnLit:
      return true;
    case Term::Kind::Op:
      return true;  // printed with its own brackets or as a call
    default:
      return false;
  }
}

std::string wrap(const TermPtr& t) {
  std::string s = print(t);
  return atomic(t) ? s : "(" + s + ")";
}

bool is_infix(const std::string& op) {
  static const std::set<std::string, std::less<>> ops = {"+", "-", "*", "/", "^", "<", "<=", ">", ">=", "==", "!="};
  return ops.count(op) > 0;
}

std::string dist_arg_str(const TermPtr& t) {
  if (t->kind == Term::Kind::Var || t->kind == Term::Kind::Num || t->kind == Term::Kind::Inf) return print(t);
  return "(" + print(t) + ")";
}

std::string dist_part_str(const Dist& d) {
  if (d.kind == Dist::Kind::Literal || (d.kind == Dist::Kind::Family && d.args.empty())) return print_dist(d);
  return "(" + print_dist(d) + ")";
}

void collect_sites(const TermPtr& t, std::vector<TermPtr>& out) {
  if (t->kind == Term::Kind::Sample) out.push_back(t);
  for (const auto& k : t->kids) collect_sites(k, out);
}

}  // namespace

TermPtr parse_program(std::string_view text) { return Parser(text).program(); }

std::string print_dist(const Dist& d) {
  switch (d.kind) {
    case Dist::Kind::Literal:
      return "{" + d.literal + "}";
    case Dist::Kind::Scale:
      return "scale " + dist_arg_str(d.args.at(0)) + " " + dist_part_str(d.parts.at(0));
    case Dist::Kind::Sum: {
      std::string s = "sum";
      for (const auto& p : d.parts) s += " " + dist_part_str(p);
      return s;
    }
    case Dist::Kind::Family: {
      std::string s = d.family;
      for (const auto& a : d.args) s += " " + dist_arg_str(a);
      return s;
    }
  }
  return {};
}

std::string print(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Var:
      return t->name;
    case Term::Kind::Num:
      return t->num;
    case Term::Kind::Inf:
      return "inf";
    case Term::Kind::Unit:
      return "()";
    case Term::Kind::Fail:
      return "fail";
    case Term::Kind::Let:
      return "let " + t->name + " = " + wrap(t->kids[0]) + " in " + print(t->kids[1]);
    case Term::Kind::Sample:
      return "sample(" + print_dist(t->dist) + ")";
    case Term::Kind::Score:
      return "score(" + print(t->kids[0]) + "); " + print(t->kids[1]);
    case Term::Kind::If:
      return "if " + wrap(t->kids[0]) + " then " + wrap(t->kids[1]) + " else " + print(t->kids[2]);
    case Term::Kind::Pair:
      return "(" + print(t->kids[0]) + ", " + print(t->kids[1]) + ")";
    case Term::Kind::FnLit:
      return "{" + t->name + "}(" + print(t->kids[0]) + ")";
    case Term::Kind::Op: {
      if (t->name == "neg") return "(-" + wrap(t->kids[0]) + ")";
      if (is_infix(t->name) && t->kids.size() == 2)
        return "(" + wrap(t->kids[0]) + " " + t->name + " " + wrap(t->kids[1]) + ")";
      std::string s = t->name + "(";
      for (std::size_t i = 0; i < t->kids.size(); ++i) s += (i ? ", " : "") + print(t->kids[i]);
      return s + ")";
    }
  }
  return {};
}

bool is_pure(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Var:
    case Term::Kind::Num:
    case Term::Kind::Inf:
    case Term::Kind::Unit:
      return true;
    case Term::Kind::Op:
    case Term::Kind::Pair:
    case Term::Kind::FnLit:
      for (const auto& k : t->kids) {
        if (!is_pure(k)) return false;
      }
      return true;
    default:
      return false;
  }
}

std::vector<TermPtr> sample_sites(const TermPtr& t) {
  std::vector<TermPtr> out;
  collect_sites(t, out);
  return out;
}

}  // namespace sfk::ppl
