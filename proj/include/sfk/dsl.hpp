#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sfk/kernel.hpp"

namespace sfk {

struct Sexp {
  bool is_list = false;
  std::string atom;
  std::vector<Sexp> items;
  int line = 1;
  int column = 1;

  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
  // Head symbol of a list, empty for atoms and empty lists.
  std::string_view head() const;
  std::string str() const;
};

// Reads every top-level expression; `;` starts a comment running to the end of the line.
std::vector<Sexp> read_sexps(std::string_view text);
Sexp read_sexp(std::string_view text);

// All parse failures throw SyntaxError carrying the offending expression's position.
SpaceExpr parse_space(const Sexp& e);
Point parse_point(const Sexp& e, const SpaceExpr& space);
SetExpr parse_set(const Sexp& e, const SpaceExpr& space);
FnExpr parse_fn(const Sexp& e, const SpaceExpr& dom);
ExtReal parse_weight(const Sexp& e);
MeasureExpr parse_measure(const Sexp& e);
KernelExpr parse_kernel(const Sexp& e);

SpaceExpr parse_space(std::string_view text);
SetExpr parse_set(std::string_view text, const SpaceExpr& space);
FnExpr parse_fn(std::string_view text, const SpaceExpr& dom);
MeasureExpr parse_measure(std::string_view text);
KernelExpr parse_kernel(std::string_view text);

// A measure or a kernel, decided by the head symbol.
using Term = std::variant<MeasureExpr, KernelExpr>;
bool is_kernel_head(std::string_view head);
Term parse_term(const Sexp& e);
Term parse_term(std::string_view text);
std::string term_str(const Term& t);

}  // namespace sfk
