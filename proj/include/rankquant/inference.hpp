#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rankquant/dataset.hpp"
#include "rankquant/knapsack.hpp"
#include "rankquant/min_stat.hpp"
#include "rankquant/null_dist.hpp"
#include "rankquant/rank_scores.hpp"

namespace rankquant {

/// ILP_exact minimizes the statistic exactly (dynamic programming);
/// LP_conservative uses the greedy LP relaxation, whose p-values are larger.
enum class PValueMethod { ILP_exact, LP_conservative };

/// Right tail t -> Pr(T >= t) of whatever reference law is in force.
using TailFunction = std::function<double(double)>;

TailFunction tail_of(const NullDistribution& null);

/// Minimized statistic inf_{delta in H_{k,c}} t(Z, Y - Z*delta).
double min_statistic(const MinStatTable& table, std::size_t k, PValueMethod method);

/// Minimized statistics for every k = 0..N from one sweep over capacities.
std::vector<double> min_statistics_all_k(const MinStatTable& table, PValueMethod method);

/// Valid p-value for H_{k,c}: tail(minimized statistic); 1 for k = 0.
double test_quantile(const StratifiedDataset& dataset, const RankScoreSpec& spec, TiePolicy policy,
                     std::size_t k, double c, const TailFunction& tail, PValueMethod method);

/// p-values for k = 0..N at a fixed c.
std::vector<double> test_all_quantiles(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                       TiePolicy policy, double c, const TailFunction& tail,
                                       PValueMethod method);

struct PValueBounds {
  double lower = 0.0;  // controls ranked below treated within ties
  double upper = 0.0;  // treated ranked below controls within ties
};

/// Deterministic bounds on the p-value over all orderings of tied units.
PValueBounds test_quantile_bounds(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                  std::size_t k, double c, const TailFunction& tail,
                                  PValueMethod method);

/// Sorted distinct within-stratum treated-minus-control differences: the only
/// thresholds where any p_{k,c} can change.
std::vector<double> candidate_thresholds(const StratifiedDataset& dataset);

struct LowerLimit {
  std::size_t k = 0;
  /// -inf when the interval is uninformative.
  double lower = 0.0;
  /// Whether `lower` itself belongs to the confidence set, per tie policy.
  /// At a finite limit p-bar always passes and p-underbar never does; only
  /// the unit-order flag carries information.
  bool included_upper_p = false;   // p-bar (treated first within ties)
  bool included_seeded_p = false;  // unit-order ("first") ranking
  bool included_lower_p = false;   // p-underbar (controls first within ties)
};

/// Lower confidence limit for n(c), the number of units with effect above c.
struct CountLimit {
  double c = 0.0;
  std::size_t lower = 0;
};

struct QuantileReport {
  double alpha = 0.05;
  PValueMethod method = PValueMethod::ILP_exact;
  std::size_t total_units = 0;
  std::vector<LowerLimit> limits;        // sorted by k
  std::vector<CountLimit> count_limits;  // one per requested threshold
};

struct InversionOptions {
  /// Ranks to report; empty means every k = 1..N.
  std::vector<std::size_t> ks;
  /// Thresholds for which to report a lower limit on n(c).
  std::vector<double> count_thresholds;
  unsigned threads = 1;
};

/// Inverts the tests over the finite candidate threshold set. The limits
/// c_(k) = inf{c : p_{k,c} > alpha} hold simultaneously over k and c.
QuantileReport invert_confidence(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                 double alpha, const TailFunction& tail, PValueMethod method,
                                 const InversionOptions& options = {});

/// Lower limit for n(c) from the p-values at c: N - sup{k : p_{k,c} > alpha}.
std::size_t count_lower_limit(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                              TiePolicy policy, double c, double alpha, const TailFunction& tail,
                              PValueMethod method);

struct TwoSidedResult {
  double p_right = 1.0;  // H: tau_(k) <= c against larger effects
  double p_left = 1.0;   // H: tau_(k) >= c against smaller effects
  bool reject = false;   // min(p_right, p_left) <= alpha / 2
};

/// Bonferroni combination of the two one-sided tests of tau_(k) = c. The
/// left-sided test runs on sign-flipped outcomes at rank N-k+1 and threshold -c.
TwoSidedResult two_sided_test(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                              TiePolicy policy, std::size_t k, double c, double alpha,
                              const TailFunction& tail, PValueMethod method);

TwoSidedResult combine_two_sided(double p_right, double p_left, double alpha);

/// True when the control group outnumbers the treated group; label switching
/// then usually gives more informative limits.
bool controls_outnumber_treated(const StratifiedDataset& dataset);

}  // namespace rankquant
