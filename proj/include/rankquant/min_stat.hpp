#pragma once

#include <vector>

#include "rankquant/dataset.hpp"
#include "rankquant/rank_scores.hpp"

namespace rankquant {

/// Per-stratum minimized statistics for a fixed threshold c.
///
/// min_stat[s][l] is the smallest value stratum s's statistic can take when
/// at most l of its units have effects above c and the rest have effect c.
/// deltas[s][j-1] = min_stat[s][j-1] - min_stat[s][j] >= 0.
struct MinStatTable {
  double threshold = 0.0;
  std::vector<std::vector<double>> min_stat;
  std::vector<std::vector<double>> deltas;
  /// Finite stand-in for an infinite effect; any value above
  /// (max treated outcome - min control outcome) works.
  double infinity_surrogate = 0.0;

  std::size_t num_strata() const { return min_stat.size(); }
  std::size_t total_units() const;
  /// sum_s min_stat[s][0]: the statistic under the constant effect c.
  double base_statistic() const;
};

/// Closed-form construction. Treated unit i sits above control j in the
/// imputed ranking iff y_i - y_j > c; equality is a tie resolved by `policy`.
/// The l treated units ranked highest are sent to the bottom ranks.
MinStatTable build_min_table(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                             TiePolicy policy, double c);

/// Row s of build_min_table(dataset, spec, policy, c).
struct StratumRow {
  std::vector<double> min_stat;
  std::vector<double> deltas;
};
StratumRow build_stratum_row(const StratifiedDataset& dataset, const RankScoreSpec& spec, std::size_t s,
                             TiePolicy policy, double c);

/// A table from precomputed rows, with the threshold and surrogate that
/// build_min_table would set for c.
MinStatTable assemble_min_table(const StratifiedDataset& dataset, double c, std::vector<StratumRow> rows);

/// Brute-force check of the closed form: for every stratum and every l, tries
/// every choice of at most l treated units receiving the surrogate infinite
/// effect (others receive c) and compares the minimum with the table.
/// Exponential in stratum size; meant for small strata.
bool verify_min_table(const MinStatTable& table, const StratifiedDataset& dataset,
                      const RankScoreSpec& spec, TiePolicy policy, double tolerance = 1e-9);

}  // namespace rankquant
