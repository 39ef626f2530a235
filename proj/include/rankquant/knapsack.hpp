#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rankquant/min_stat.hpp"

namespace rankquant {

enum class OptMethod { DP_ILP, GreedyLP, BruteForce, NaiveGreedy };

/// Solution of  min sum_s min_stat[s][l_s]  subject to  sum_s l_s = N - k.
///
/// `gain` is the maximized delta sum, so objective = base - gain. For the
/// greedy LP, allocation[s] is the (possibly fractional) LP load on stratum s.
struct OptResult {
  OptMethod method = OptMethod::DP_ILP;
  double objective = 0.0;
  double gain = 0.0;
  std::vector<double> allocation;
};

/// Comparison tolerance on objectives.
inline constexpr double kObjectiveTolerance = 1e-9;

/// Optimal monotone dominating transformation: the slopes of the least
/// concave majorant of the cumulative-sum polyline (0,0),(1,a1),(2,a1+a2),...
/// The result is nonincreasing and its prefix sums dominate those of `a`.
std::vector<double> hull_transform(std::span<const double> a);

/// LP relaxation via the greedy algorithm on hull-transformed deltas, each
/// stratum truncated at min(n_s, N - k). Throws DataError if k > N.
OptResult solve_greedy_lp(const MinStatTable& table, std::size_t k);

/// Exact integer optimum by dynamic programming over strata. Ties between
/// optimal allocations go to the lexicographically smallest one.
OptResult solve_dp_ilp(const MinStatTable& table, std::size_t k);

/// max delta-sum gains m(d) for every capacity d = 0..max_capacity using one
/// rolling row; gains[N - k] gives the exact objective for every k at once.
std::vector<double> dp_gains(const MinStatTable& table, std::size_t max_capacity);

/// Greedy-LP gains for every capacity min_capacity..max_capacity (entries
/// below min_capacity are left 0). Capacities under max_s n_s each need their
/// own truncated pool, since the truncation min(n_s, N-k) depends on them.
std::vector<double> greedy_gains(const MinStatTable& table, std::size_t max_capacity,
                                 std::size_t min_capacity = 0);

/// Cheap bracket on dp_gains at every capacity 0..max_capacity: `upper` is
/// the untruncated greedy LP value and `lower` the raw gain of the greedy's
/// own integer allocation, so lower <= dp_gains <= upper elementwise.
struct GainBracket {
  std::vector<double> lower;
  std::vector<double> upper;
};
GainBracket gain_bracket(const MinStatTable& table, std::size_t max_capacity);

/// Exhaustive enumeration of feasible allocations; throws BudgetExceeded when
/// prod_s (n_s + 1) exceeds `budget`.
OptResult solve_brute_force(const MinStatTable& table, std::size_t k,
                            std::uint64_t budget = 10'000'000);

/// Locally optimal choice at each unit of capacity without transformation.
/// Not a valid basis for p-values; kept as a baseline.
OptResult solve_naive_greedy(const MinStatTable& table, std::size_t k);

}  // namespace rankquant
