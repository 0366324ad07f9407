#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfk/kernel.hpp"

namespace sfk::ppl {

struct Term;
using TermPtr = std::shared_ptr<const Term>;

// Distribution inside sample(...).
struct Dist {
  enum class Kind : std::uint8_t { Family, Scale, Sum, Literal };
  Kind kind = Kind::Family;
  std::string family;         // Family
  std::vector<TermPtr> args;  // Family parameters, or the Scale weight
  std::vector<Dist> parts;    // Scale: one part, Sum: two or more
  std::string literal;        // Literal: measure in the s-expression syntax
};

struct Term {
  enum class Kind : std::uint8_t { Var, Num, Inf, Unit, Let, Sample, Score, If, Pair, Fail, Op, FnLit };
  Kind kind = Kind::Unit;
  std::string name;  // Var and Let binder, Op name, FnLit text
  std::string num;   // Num source text
  std::vector<TermPtr> kids;
  Dist dist;  // Sample
  int line = 1;
  int column = 1;
};

// Recursive-descent parser for the .sfk surface syntax. SyntaxError with position.
TermPtr parse_program(std::string_view text);
// Canonical text; parse_program(print(t)) prints back identically.
std::string print(const TermPtr& t);
std::string print_dist(const Dist& d);

bool is_pure(const TermPtr& t);
// Sample sites in pre-order.
std::vector<TermPtr> sample_sites(const TermPtr& t);

// Resolved program: every term typed against its context space.
struct Node;
using NodePtr = std::shared_ptr<const Node>;

class Program {
 public:
  // ScopeError for unbound names, TypeError for ill-typed terms.
  static Program check(const TermPtr& t, const EvalConfig& cfg = {});

  const TermPtr& term() const { return term_; }
  const SpaceExpr& type() const;
  const NodePtr& root() const { return root_; }
  std::size_t site_count() const;

 private:
  TermPtr term_;
  NodePtr root_;
  std::size_t sites_ = 0;
};

Program parse_and_check(std::string_view text, const EvalConfig& cfg = {});

// Kernel unit ~> T.
KernelExpr denote(const Program& p);
MeasureExpr denote_measure(const Program& p);

struct WeightedSample {
  Point value;  // bottom when the run failed or fell beyond a subprobability's mass
  ExtReal weight;
};

// n independent runs; sites are drawn by inverse-CDF randomisation with per-run derived seeds.
std::vector<WeightedSample> run_sampler(const Program& p, std::uint64_t seed, std::uint64_t n,
                                        const EvalConfig& cfg = {});
// Self-normalised mean of a real coordinate of the samples.
double weighted_mean(const std::vector<WeightedSample>& samples);

// Replaces sample site `site` (pre-order index) by
//   let y = sample(proposal) in score(d target / d proposal (y)); y
TermPtr importance_transform(const TermPtr& program, std::size_t site, const MeasureExpr& proposal,
                             const EvalConfig& cfg = {});
// The first site whose constant distribution prints as `target`.
std::optional<std::size_t> find_site(const TermPtr& program, const MeasureExpr& target);

struct RejectionResult {
  std::vector<Point> samples;
  std::uint64_t proposals = 0;
  double acceptance() const { return proposals ? static_cast<double>(samples.size()) / proposals : 0.0; }
};

// Draws y from proposal and accepts when u <= (d target / d proposal)(y) / bound. BoundViolation
// when a probed ratio exceeds the bound.
RejectionResult rejection_sampler(const MeasureExpr& target, const MeasureExpr& proposal, double bound,
                                  std::uint64_t seed, std::uint64_t n, const EvalConfig& cfg = {});

enum class EquivMode : std::uint8_t { ExactFinite, Probe };

bool equivalent(const Program& p, const Program& q, EquivMode mode, double tol = 1e-6, const EvalConfig& cfg = {});
bool equivalent_measures(const MeasureExpr& a, const MeasureExpr& b, EquivMode mode, double tol = 1e-6,
                         const EvalConfig& cfg = {});

}  // namespace sfk::ppl
