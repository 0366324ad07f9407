#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfk/measure.hpp"

namespace sfk {

// Canonical sigma-finite reference measures: counting measure on a countable space, counting
// measure on finitely many real atoms, Lebesgue measure, and products and injections of these.
class Reference {
 public:
  enum class Kind : std::uint8_t { Count, Atoms, Leb, Prod, InL, InR };

  static Reference count(const SpaceExpr& space);
  static Reference atoms(std::vector<Rational> xs);
  static Reference leb();
  static Reference prod(const Reference& a, const Reference& b);
  static Reference inl(const Reference& a, const SpaceExpr& right);
  static Reference inr(const SpaceExpr& left, const Reference& b);

  Kind kind() const { return kind_; }
  const SpaceExpr& space() const { return space_; }
  const std::vector<Rational>& atom_points() const { return atoms_; }
  const Reference& left() const { return parts_.at(0); }
  const Reference& right() const { return parts_.at(1); }

  // Identifies the reference up to the choice of atoms.
  std::string key() const;
  int dimension() const;  // number of Lebesgue factors
  SetExpr support() const;
  MeasureExpr measure() const;
  Reference merged(const Reference& other) const;

 private:
  Kind kind_ = Kind::Count;
  SpaceExpr space_;
  std::vector<Rational> atoms_;
  std::vector<Reference> parts_;
};

struct DensityComponent {
  Reference ref;
  FnExpr density;  // vanishes off ref.support()
};

// A measure as sum_c density_c . ref_c, components ordered by dimension then key.
struct DensityForm {
  SpaceExpr space;
  std::vector<DensityComponent> comps;

  const DensityComponent* find(const std::string& key) const;
};

std::optional<DensityForm> density_form(const MeasureExpr& m);
DensityForm require_density_form(const MeasureExpr& m);
MeasureExpr component_measure(const DensityComponent& c);
MeasureExpr form_measure(const DensityForm& f);
std::string density_form_str(const DensityForm& f);

// Both forms over the union of their references, missing components with density 0.
std::pair<DensityForm, DensityForm> align(const DensityForm& a, const DensityForm& b);

// Regions where each component decides: its support minus supports of finer components.
std::vector<SetExpr> decision_regions(const DensityForm& f);
// Union of the regions where the density vanishes, including points outside every support.
SetExpr zero_region(const DensityForm& f);
SetExpr top_set(const DensityForm& f);
// Combines one function per component by decision region; 0 outside all supports.
FnExpr combine_by_region(const DensityForm& f, const std::vector<FnExpr>& per_comp);

SetExpr top_zero_infty_set(const MeasureExpr& m);

enum class MeasureClass : std::uint8_t { Probability, Subprobability, Finite, SigmaFinite, SFinite };
const char* measure_class_name(MeasureClass c);
// True when every measure of class a also has class b.
bool class_implies(MeasureClass a, MeasureClass b);

MeasureClass classify_measure(const MeasureExpr& m, const EvalConfig& cfg = {});
bool finitely_approximable(const MeasureExpr& m, const SetExpr& a, const EvalConfig& cfg = {});
bool is_zero_measure_on(const MeasureExpr& m, const SetExpr& a, const EvalConfig& cfg = {});

// m = sigma_finite . factor with factor valued in {1, inf}.
struct OneInftyFactorization {
  MeasureExpr sigma_finite;
  FnExpr factor;
};
OneInftyFactorization factorize_one_infty(const MeasureExpr& m);

// Lazy decomposition of an s-finite measure into pieces of mass at most 1.
class SubprobStream {
 public:
  virtual ~SubprobStream() = default;
  // Piece n, nullopt past the end of a finite stream.
  virtual std::optional<MeasureExpr> at(std::uint64_t n) const = 0;
  virtual std::optional<std::uint64_t> length() const = 0;  // nullopt when infinite
};

std::shared_ptr<const SubprobStream> as_subprob_sum(const MeasureExpr& m, const EvalConfig& cfg = {});
// First n pieces, or all of a shorter finite stream.
std::vector<MeasureExpr> take_pieces(const SubprobStream& s, std::uint64_t n);

// Cantor pairing used for dovetailing.
std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t n);

}  // namespace sfk
