#pragma once

#include <vector>

#include "rankquant/dataset.hpp"
#include "rankquant/inference.hpp"
#include "rankquant/null_dist.hpp"
#include "rankquant/rank_scores.hpp"

namespace rankquant {

/// Bias bound Gamma >= 1 on the within-set odds of treatment. Gamma = 1 is a
/// stratified completely randomized experiment.
class SensitivityModel {
 public:
  explicit SensitivityModel(double Gamma);
  double Gamma() const { return Gamma_; }
  double gamma() const;

 private:
  double Gamma_ = 1.0;
};

enum class SensitivityTail { Gaussian, FiniteSample };

/// Scores of the single selected unit of set s, sorted ascending, so that the
/// set's statistic is psi(rank of the selected unit). The selected unit is the
/// lone treated unit, or the lone control unit with psi(r) = sum(phi) -
/// phi(n + 1 - r). Throws DataError if the set has neither.
std::vector<double> selected_unit_scores(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                         std::size_t s);

/// Largest mean of each set's statistic over all unmeasured confounders, and
/// the largest variance among the confounders attaining that mean.
struct WorstCaseMoments {
  std::vector<double> set_mean;
  std::vector<double> set_variance;
  /// Cut indices j (1-based) attaining the maximal mean, per set.
  std::vector<std::vector<std::size_t>> maximizers;
  double mean = 0.0;
  double variance = 0.0;
};

WorstCaseMoments worst_case_moments(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                    const SensitivityModel& model);

/// 1 - Phi((t - mean) / sd) for t at or above the mean, 1 below it; a zero
/// variance is a point mass at the mean.
double gaussian_tail(const WorstCaseMoments& moments, double t);

/// Law of sum_s Tbar_s, where Tbar_s stochastically dominates set s's
/// statistic under every confounder: Pr(Tbar_s >= xi_i) = g_i Gamma /
/// ((n_s - g_i) + g_i Gamma) with g_i the number of units scoring >= xi_i.
DiscreteDistribution finite_sample_law(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                       const SensitivityModel& model,
                                       std::size_t budget = 1'000'000);

/// Worst-case tail under the model, usable wherever a null tail is expected.
TailFunction sensitivity_tail(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                              const SensitivityModel& model, SensitivityTail tail);

double gaussian_tail_pvalue(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                            const SensitivityModel& model, TiePolicy policy, std::size_t k,
                            double c, PValueMethod method);

double finite_sample_pvalue(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                            const SensitivityModel& model, TiePolicy policy, std::size_t k,
                            double c, PValueMethod method);

/// Simultaneous lower limits under bias at most Gamma. The Gaussian tail is
/// only justified for alpha <= 0.5.
QuantileReport sensitivity_confidence(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                      double alpha, const SensitivityModel& model,
                                      SensitivityTail tail, PValueMethod method,
                                      const InversionOptions& options = {});

struct GammaCutoff {
  /// H_{k,c} is not rejected even at Gamma = 1.
  bool below_one = false;
  /// Still rejected at the search cap.
  bool unbounded = false;
  /// Largest Gamma on the search grid with p <= alpha.
  double gamma = 1.0;
};

/// Bisection for the largest Gamma at which H_{k,c} is rejected, to within
/// `resolution`. Relies on p being nondecreasing in Gamma.
GammaCutoff gamma_cutoff(const StratifiedDataset& dataset, const RankScoreSpec& spec, double alpha,
                         std::size_t k, double c, SensitivityTail tail, PValueMethod method,
                         double resolution = 0.01, TiePolicy policy = TiePolicy::TreatedFirst,
                         double max_gamma = 1e6);

}  // namespace rankquant
