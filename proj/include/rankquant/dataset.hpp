#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rankquant {

/// Raised for malformed input data or arguments that violate a precondition.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an exact computation would exceed its enumeration budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Design { SCRE, MatchedSets };

struct Unit {
  int treated = 0;  // 0 or 1
  double outcome = 0.0;

  friend bool operator==(const Unit&, const Unit&) = default;
};

/// One stratum (or matched set). Unit order is significant: it is the
/// tie-breaking order of the "first" ranking method.
class Stratum {
 public:
  Stratum() = default;
  Stratum(std::string label, std::vector<Unit> units);

  const std::string& label() const { return label_; }
  const std::vector<Unit>& units() const { return units_; }
  std::size_t size() const { return units_.size(); }
  std::size_t treated_count() const { return treated_count_; }
  std::size_t control_count() const { return units_.size() - treated_count_; }

  std::vector<double> outcomes() const;
  std::vector<int> assignments() const;

  friend bool operator==(const Stratum&, const Stratum&) = default;

 private:
  std::string label_;
  std::vector<Unit> units_;
  std::size_t treated_count_ = 0;
};

/// Observed data of a stratified experiment: the (Z, Y, n) triple.
class StratifiedDataset {
 public:
  StratifiedDataset() = default;
  StratifiedDataset(std::vector<Stratum> strata, Design design = Design::SCRE);

  const std::vector<Stratum>& strata() const { return strata_; }
  const Stratum& stratum(std::size_t s) const { return strata_.at(s); }
  std::size_t num_strata() const { return strata_.size(); }
  std::size_t total_units() const { return total_units_; }
  std::size_t total_treated() const;
  std::size_t total_controls() const { return total_units_ - total_treated(); }
  Design design() const { return design_; }

  StratifiedDataset with_design(Design design) const;

  friend bool operator==(const StratifiedDataset&, const StratifiedDataset&) = default;

 private:
  std::vector<Stratum> strata_;
  std::size_t total_units_ = 0;
  Design design_ = Design::SCRE;
};

/// H_{k,c}: the k-th smallest individual effect is at most c, equivalently at
/// most N-k units have effects above c. k = 0 is vacuously true.
struct EffectHypothesis {
  std::size_t k = 0;
  double c = 0.0;
};

enum class Severity { Warning, Error };

struct ValidationIssue {
  Severity severity = Severity::Error;
  std::optional<std::size_t> stratum;
  std::string message;
  // Set when the issue is the matched-set "one treated or one control" rule,
  // which only blocks sensitivity analysis.
  bool matched_set_rule = false;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  /// True when nothing blocks randomization inference.
  bool valid() const;
  /// True when nothing blocks sensitivity analysis (matched-set rule enforced).
  bool valid_for_sensitivity() const;
};

ValidationReport validate(const StratifiedDataset& dataset);

/// True when every stratum has exactly one treated or exactly one control unit.
bool one_treated_or_one_control(const Stratum& stratum);

/// z -> 1 - z and y -> -y in every stratum.
StratifiedDataset switch_labels(const StratifiedDataset& dataset);
/// Per-stratum variant; mask[s] selects stratum s.
StratifiedDataset switch_labels(const StratifiedDataset& dataset, const std::vector<bool>& mask);

/// y -> -y everywhere, assignments kept.
StratifiedDataset negate_outcomes(const StratifiedDataset& dataset);

/// Reorders units within each stratum by a seeded uniform permutation.
StratifiedDataset permute_units(const StratifiedDataset& dataset, std::uint64_t seed);

}  // namespace rankquant
