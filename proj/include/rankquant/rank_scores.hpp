#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "rankquant/dataset.hpp"

namespace rankquant {

/// How units with equal outcomes are ranked.
///   FirstByUnitOrder: by position within the stratum (the "first" method).
///   ControlsFirst: controls below treated within a tie (gives the lower p bound).
///   TreatedFirst: treated below controls within a tie (gives the upper p bound).
enum class TiePolicy { FirstByUnitOrder, ControlsFirst, TreatedFirst };

enum class ScoreKind { Wilcoxon, Stephenson, Custom };

/// Per-stratum nondecreasing rank score functions phi_s : {1..n_s} -> R.
///
/// Wilcoxon uses phi(r) = r. Stephenson(h) uses phi(r) = C(r-1, h-1) for
/// r >= h and 0 otherwise. Custom scores are explicit per-rank lists keyed by
/// stratum size. Score tables are materialized once per (stratum, size) and
/// cached; the spec object may be shared across threads.
class RankScoreSpec {
 public:
  static RankScoreSpec wilcoxon();
  /// Same h in every stratum; h >= 2.
  static RankScoreSpec stephenson(int h);
  /// One h per stratum, in dataset stratum order.
  static RankScoreSpec stephenson(std::vector<int> h_per_stratum);
  /// tables[n] is the score list for strata of size n. Throws if any list is
  /// decreasing somewhere or has the wrong length.
  static RankScoreSpec custom(std::map<std::size_t, std::vector<double>> tables);

  ScoreKind kind() const { return kind_; }

  /// Scores phi_s(1..n) for stratum s of size n (index r-1 holds phi_s(r)).
  const std::vector<double>& scores(std::size_t stratum, std::size_t n) const;

  int stephenson_h(std::size_t stratum) const;

 private:
  RankScoreSpec() = default;
  struct Cache;

  ScoreKind kind_ = ScoreKind::Wilcoxon;
  std::vector<int> h_;
  std::map<std::size_t, std::vector<double>> custom_;
  std::shared_ptr<Cache> cache_;
};

/// C(n, k) as a double; exact integer arithmetic while it fits in 2^53.
double binomial(unsigned n, unsigned k);

std::vector<double> stephenson_scores(std::size_t n, int h);

/// Ranks 1..n of `outcomes` with ties broken per `policy`.
std::vector<std::size_t> ranks(std::span<const double> outcomes, std::span<const int> assignments,
                               TiePolicy policy);

/// sum_i z_i phi(rank_i(y)) for one stratum with the given outcome vector
/// (typically imputed control outcomes).
double stratum_statistic(std::span<const int> assignments, std::span<const double> outcomes,
                         std::span<const double> scores, TiePolicy policy);

double stratum_statistic(const Stratum& stratum, std::span<const double> imputed_controls,
                         const RankScoreSpec& spec, std::size_t stratum_index, TiePolicy policy);

/// Sum of stratum statistics. imputed_controls[s] has the outcomes of stratum s.
double stratified_statistic(const StratifiedDataset& dataset,
                            const std::vector<std::vector<double>>& imputed_controls,
                            const RankScoreSpec& spec, TiePolicy policy);

/// Imputed control outcomes Y - Z * delta for a constant effect delta.
std::vector<std::vector<double>> impute_controls(const StratifiedDataset& dataset, double delta);

/// Imputed control outcomes Y - Z * delta for a per-unit effect vector.
std::vector<std::vector<double>> impute_controls(const StratifiedDataset& dataset,
                                                 const std::vector<std::vector<double>>& delta);

}  // namespace rankquant
