#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfk/extreal.hpp"
#include "sfk/fn.hpp"
#include "sfk/set.hpp"
#include "sfk/space.hpp"

namespace sfk {

struct EvalConfig {
  double tol = 1e-9;
  std::uint64_t max_terms = 1'000'000;
  std::uint64_t seed = 0;
};

class BaseMeasure {
 public:
  enum class Kind : std::uint8_t { Dirac, CountingFin, CountingNat, LebesgueDensity, Product };

  static BaseMeasure dirac(const Point& p, const SpaceExpr& space);
  // Counting measure on a finite set of any space.
  static BaseMeasure counting_fin(const SetExpr& support);
  static BaseMeasure counting_nat(const SetExpr& support);
  // g . Lebesgue restricted to `support`.
  static BaseMeasure lebesgue_density(const RealSet& support, const FnExpr& density);
  static BaseMeasure product(const BaseMeasure& a, const BaseMeasure& b);

  Kind kind() const;
  const SpaceExpr& space() const;
  const Point& point() const;
  const SetExpr& support_set() const;  // CountingFin, CountingNat
  const RealSet& support() const;      // LebesgueDensity
  const FnExpr& density() const;
  const BaseMeasure& left() const;
  const BaseMeasure& right() const;

  std::string str() const;

 private:
  struct Node;
  explicit BaseMeasure(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

class MeasureExpr;

enum class SeqFamily : std::uint8_t { None, ConstantRepeat, GeometricWeights, LebesgueSlices };

// A countable sum sum_n gen(n). tail(A, n) bounds sum_{i>=n} gen(i)(A); A may be null (whole space).
struct SeqSpec {
  std::function<MeasureExpr(std::uint64_t)> gen;
  std::function<ExtReal(const SetExpr*, std::uint64_t)> tail;
  SeqFamily family = SeqFamily::None;
  std::shared_ptr<const MeasureExpr> base;  // ConstantRepeat, GeometricWeights
  Rational ratio{0};                        // GeometricWeights
  bool disjoint = false;                    // pieces live on pairwise disjoint sets
  std::optional<std::uint64_t> length;      // finitely many nonzero terms
  std::string text;
};

// y |-> measure, integrated against an outer measure.
struct MixSpec {
  std::function<MeasureExpr(const Point&)> at;
  SpaceExpr codomain;
  std::string text;
};

// Named distribution parameters, used for closed-form CDFs and printing.
struct Family {
  std::string name;
  std::vector<double> params;
};

class MeasureExpr {
 public:
  enum class Kind : std::uint8_t { Zero, Base, Weighted, Sum, SeqSum, Mixture, Push, Reweight, Product };

  MeasureExpr();  // zero on unit

  static MeasureExpr zero(const SpaceExpr& space);
  static MeasureExpr base(const BaseMeasure& b);
  static MeasureExpr weighted(const ExtReal& w, const MeasureExpr& m);
  static MeasureExpr sum(const std::vector<MeasureExpr>& ms);
  static MeasureExpr seq_sum(const SpaceExpr& space, std::shared_ptr<const SeqSpec> spec);
  static MeasureExpr mixture(const MeasureExpr& outer, std::shared_ptr<const MixSpec> spec);
  static MeasureExpr push(const MeasureExpr& m, const FnExpr& f);
  static MeasureExpr reweight(const MeasureExpr& m, const FnExpr& f);
  static MeasureExpr product(const MeasureExpr& a, const MeasureExpr& b);

  // Copies sharing structure but carrying a display form, total mass or family tag.
  MeasureExpr labelled(std::string text) const;
  MeasureExpr with_mass(const ExtReal& mass) const;
  MeasureExpr with_family(Family fam) const;

  Kind kind() const;
  const SpaceExpr& space() const;
  const BaseMeasure& base_measure() const;
  const ExtReal& weight() const;
  const std::vector<MeasureExpr>& children() const;
  const MeasureExpr& child(std::size_t i = 0) const { return children().at(i); }
  const FnExpr& fn() const;
  const SeqSpec& seq() const;
  const MixSpec& mix() const;
  const std::optional<ExtReal>& mass_hint() const;
  const std::optional<Family>& family() const;
  const std::string& label() const;

  std::string str() const;

 private:
  struct Node;
  explicit MeasureExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

// Standard measures.
MeasureExpr dirac(const Point& p, const SpaceExpr& space);
MeasureExpr lebesgue();
MeasureExpr lebesgue(const RealSet& support);
MeasureExpr lebesgue_on(const Rational& a, const Rational& b);
MeasureExpr uniform(const Rational& a, const Rational& b);
MeasureExpr normal(double mean, double sd);
MeasureExpr beta_dist(double a, double b);
MeasureExpr bernoulli(const ExtReal& p);
MeasureExpr binomial(std::uint64_t n, const ExtReal& p);
MeasureExpr poisson(double rate);
MeasureExpr counting_nat(const SetExpr& support);
MeasureExpr counting_nat();
MeasureExpr counting_fin(const SetExpr& support);
MeasureExpr counting(const SpaceExpr& space);  // countable spaces
MeasureExpr density_measure(const RealSet& support, const FnExpr& g);
MeasureExpr seq_constant_repeat(const MeasureExpr& m);
MeasureExpr seq_geometric(const Rational& r, const MeasureExpr& m);
MeasureExpr seq_lebesgue_slices();
// Generic lazily generated sum.
MeasureExpr seq_generated(const SpaceExpr& space, std::function<MeasureExpr(std::uint64_t)> gen,
                          std::function<ExtReal(const SetExpr*, std::uint64_t)> tail, std::string text,
                          bool disjoint = false, std::optional<std::uint64_t> length = std::nullopt);
MeasureExpr categorical(const SpaceExpr& space, const std::vector<std::pair<Point, ExtReal>>& weights);

enum class EvalMode : std::uint8_t { Exact, Truncated, Diverges };

struct EvalResult {
  ExtReal value;
  EvalMode mode = EvalMode::Exact;
  double error_bound = 0.0;  // Truncated only
};

const char* eval_mode_name(EvalMode m);
std::string eval_result_str(const EvalResult& r);

// Threaded through nested evaluation.
struct EvalCtx {
  EvalConfig cfg;
  double error = 0.0;
  bool truncated = false;
  bool diverged = false;
};

// A [0,inf]-valued integrand: a term when available (enables exact paths), else a callback.
struct Integrand {
  SpaceExpr space;
  std::optional<FnExpr> fn;
  std::function<ExtReal(const Point&)> cb;

  static Integrand of(const FnExpr& f, const SpaceExpr& space) { return {space, f, {}}; }
  static Integrand of(std::function<ExtReal(const Point&)> cb, const SpaceExpr& space) {
    return {space, std::nullopt, std::move(cb)};
  }
  ExtReal at(const Point& p) const;
};

ExtReal measure_of(const MeasureExpr& m, const SetExpr& a, EvalCtx& ctx);
ExtReal integrate(const MeasureExpr& m, const Integrand& f, EvalCtx& ctx);

EvalResult measure_of(const MeasureExpr& m, const SetExpr& a, const EvalConfig& cfg = {});
EvalResult integrate(const MeasureExpr& m, const FnExpr& f, const EvalConfig& cfg = {});
EvalResult total_mass(const MeasureExpr& m, const EvalConfig& cfg = {});
EvalResult finish(const ExtReal& v, const EvalCtx& ctx);

// Exact atom weights of a measure with finitely many atoms and no continuous part.
using AtomTable = std::map<Point, ExtReal>;
std::optional<AtomTable> discrete_table(const MeasureExpr& m);
std::string atom_table_str(const AtomTable& t);
// Drops zero weights so tables compare as measures.
AtomTable normalized(const AtomTable& t);

}  // namespace sfk
