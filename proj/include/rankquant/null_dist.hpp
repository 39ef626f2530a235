#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rankquant/dataset.hpp"
#include "rankquant/rank_scores.hpp"

namespace rankquant {

/// Finite discrete law stored as sorted (value, probability) atoms. Values
/// closer than 1e-9 (relative to max(1,|v|)) are merged.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  /// Point mass at `value`.
  static DiscreteDistribution point(double value);
  /// Atoms need not be sorted or distinct; weights are normalized to sum 1.
  static DiscreteDistribution from_atoms(std::vector<std::pair<double, double>> atoms);

  const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }
  std::size_t support_size() const { return atoms_.size(); }

  /// Pr(X >= c), tie-inclusive with the quantization tolerance.
  double tail(double c) const;

  /// Law of X + Y for independent X ~ *this and Y ~ other.
  DiscreteDistribution convolve(const DiscreteDistribution& other) const;

 private:
  void finalize();
  std::vector<std::pair<double, double>> atoms_;
  std::vector<double> tail_;  // tail_[i] = sum of probabilities of atoms i..end
};

/// Exact law of sum_{r in A} phi(r) for A a uniformly random m-subset of
/// {1..n}. Throws BudgetExceeded if the support grows past `max_support`.
DiscreteDistribution subset_score_sum(std::span<const double> phi, std::size_t m,
                                      std::size_t max_support = 1'000'000);

enum class NullMode { Exact, MonteCarlo };

/// Distribution-free null tail G(c) = Pr(T >= c) of the stratified rank score
/// statistic under a stratified completely randomized design.
class NullDistribution {
 public:
  NullDistribution() = default;
  NullDistribution(NullMode mode, DiscreteDistribution law, std::size_t reps = 0,
                   std::uint64_t seed = 0);

  NullMode mode() const { return mode_; }
  std::size_t reps() const { return reps_; }
  std::uint64_t seed() const { return seed_; }
  const DiscreteDistribution& law() const { return law_; }

  double tail(double c) const { return law_.tail(c); }

  /// Monte Carlo standard error sqrt(p(1-p)/reps); 0 for exact laws.
  double standard_error(double p) const;

  /// (value, Pr(T >= value)) rows for caching.
  std::vector<std::pair<double, double>> tail_table() const;

  bool operator==(const NullDistribution& other) const;

 private:
  NullMode mode_ = NullMode::Exact;
  DiscreteDistribution law_;
  std::size_t reps_ = 0;
  std::uint64_t seed_ = 0;
};

/// Exact null by per-stratum subset-sum laws convolved across strata. The
/// budget caps the number of distinct support values kept at any point.
NullDistribution exact_null(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                            std::size_t budget = 1'000'000);

/// Monte Carlo null from `reps` seeded draws of the stratified design.
/// Deterministic given the seed regardless of `threads`.
NullDistribution mc_null(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                         std::size_t reps, std::uint64_t seed, unsigned threads = 1);

/// G evaluated at an observed (minimized) statistic.
double pvalue(const NullDistribution& distribution, double observed_min_statistic);

}  // namespace rankquant
