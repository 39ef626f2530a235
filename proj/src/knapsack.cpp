#include "rankquant/knapsack.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace rankquant {

namespace {

void check_k(const MinStatTable& table, std::size_t k) {
  if (k > table.total_units()) {
    throw DataError("k = " + std::to_string(k) + " exceeds N = " + std::to_string(table.total_units()));
  }
}

// Number of leading deltas that can be nonzero; beyond it every delta is 0
// (all treated units already sent to +infinity).
std::size_t effective_length(const std::vector<double>& deltas) {
  std::size_t len = deltas.size();
  while (len > 0 && deltas[len - 1] == 0.0) --len;
  return len;
}

std::vector<double> prefix_sums(const std::vector<double>& deltas, std::size_t len) {
  std::vector<double> p(len + 1, 0.0);
  for (std::size_t j = 0; j < len; ++j) p[j + 1] = p[j] + deltas[j];
  return p;
}

struct PooledItem {
  double value;
  std::size_t stratum;
  std::size_t index;
};

bool item_before(const PooledItem& a, const PooledItem& b) {
  if (a.value != b.value) return a.value > b.value;
  if (a.stratum != b.stratum) return a.stratum < b.stratum;
  return a.index < b.index;
}

struct Block {
  double sum;
  std::size_t len;
  double mean;
};

// Pool-adjacent-violators on `a`, reusing `stack`; block means strictly decrease.
void hull_blocks(std::span<const double> a, std::vector<Block>& stack) {
  stack.clear();
  for (double v : a) {
    stack.push_back({v, 1, v});
    while (stack.size() >= 2 && stack[stack.size() - 2].mean <= stack.back().mean) {
      Block top = stack.back();
      stack.pop_back();
      Block& prev = stack.back();
      prev.sum += top.sum;
      prev.len += top.len;
      prev.mean = prev.sum / static_cast<double>(prev.len);
    }
  }
}

std::vector<PooledItem> pooled_transformed(const MinStatTable& table, std::size_t capacity) {
  std::vector<PooledItem> pool;
  pool.reserve(table.total_units());
  std::vector<Block> stack;
  for (std::size_t s = 0; s < table.num_strata(); ++s) {
    const auto& d = table.deltas[s];
    hull_blocks(std::span<const double>(d.data(), std::min(d.size(), capacity)), stack);
    std::size_t j = 0;
    for (const auto& blk : stack) {
      for (std::size_t r = 0; r < blk.len; ++r, ++j) pool.push_back({blk.mean, s, j});
    }
  }
  return pool;
}

// Transformed values only; enough wherever ties need no stratum order.
std::vector<double> pooled_values(const MinStatTable& table, std::size_t capacity) {
  std::vector<double> pool;
  pool.reserve(table.total_units());
  std::vector<Block> stack;
  for (const auto& d : table.deltas) {
    hull_blocks(std::span<const double>(d.data(), std::min(d.size(), capacity)), stack);
    for (const auto& blk : stack) pool.insert(pool.end(), blk.len, blk.mean);
  }
  return pool;
}

}  // namespace

std::vector<double> hull_transform(std::span<const double> a) {
  std::vector<Block> stack;
  stack.reserve(a.size());
  hull_blocks(a, stack);
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& b : stack) out.insert(out.end(), b.len, b.mean);
  return out;
}

OptResult solve_greedy_lp(const MinStatTable& table, std::size_t k) {
  check_k(table, k);
  const std::size_t capacity = table.total_units() - k;
  auto pool = pooled_transformed(table, capacity);
  const std::size_t take = std::min(capacity, pool.size());
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                   item_before);
  OptResult result;
  result.method = OptMethod::GreedyLP;
  result.allocation.assign(table.num_strata(), 0.0);
  double gain = 0.0;
  std::vector<PooledItem> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(chosen.begin(), chosen.end(), item_before);
  for (const auto& item : chosen) {
    gain += item.value;
    result.allocation[item.stratum] += 1.0;
  }
  result.gain = gain;
  result.objective = table.base_statistic() - gain;
  return result;
}

std::vector<double> greedy_gains(const MinStatTable& table, std::size_t max_capacity,
                                 std::size_t min_capacity) {
  max_capacity = std::min(max_capacity, table.total_units());
  std::size_t max_n = 0;
  for (const auto& d : table.deltas) max_n = std::max(max_n, d.size());

  std::vector<double> gains(max_capacity + 1, 0.0);
  // Capacities >= max_n share one untruncated pool, and only its largest
  // max_capacity values are ever summed.
  auto full = pooled_values(table, max_n);
  const std::size_t used = std::min(max_capacity, full.size());
  std::partial_sort(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(used), full.end(),
                    std::greater<>());
  std::vector<double> prefix(used + 1, 0.0);
  for (std::size_t i = 0; i < used; ++i) prefix[i + 1] = prefix[i] + full[i];

  for (std::size_t cap = min_capacity; cap <= max_capacity; ++cap) {
    if (cap >= max_n) {
      gains[cap] = prefix[std::min(cap, used)];
      continue;
    }
    auto pool = pooled_values(table, cap);
    const std::size_t take = std::min(cap, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), std::greater<>());
    double g = 0.0;
    for (std::size_t i = 0; i < take; ++i) g += pool[i];
    gains[cap] = g;
  }
  return gains;
}

GainBracket gain_bracket(const MinStatTable& table, std::size_t max_capacity) {
  max_capacity = std::min(max_capacity, table.total_units());
  std::size_t max_n = 0;
  for (const auto& d : table.deltas) max_n = std::max(max_n, d.size());
  auto pool = pooled_transformed(table, max_n);
  const std::size_t used = std::min(max_capacity, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(used), pool.end(), item_before);
  // Sorted order takes each stratum's items by index, so every prefix is an
  // integer allocation; its raw deltas give a feasible gain.
  GainBracket out{std::vector<double>(max_capacity + 1), std::vector<double>(max_capacity + 1)};
  double lo = 0.0, hi = 0.0;
  for (std::size_t cap = 0; cap <= max_capacity; ++cap) {
    if (cap > 0 && cap <= used) {
      const auto& item = pool[cap - 1];
      lo += table.deltas[item.stratum][item.index];
      hi += item.value;
    }
    out.lower[cap] = lo;
    out.upper[cap] = hi;
  }
  return out;
}

std::vector<double> dp_gains(const MinStatTable& table, std::size_t max_capacity) {
  max_capacity = std::min(max_capacity, table.total_units());
  std::vector<double> row(max_capacity + 1, 0.0);
  std::vector<double> next(max_capacity + 1, 0.0);
  std::size_t reach = 0;  // capacities beyond this are unconstrained
  for (const auto& d : table.deltas) {
    const std::size_t len = effective_length(d);
    if (len == 0) continue;
    const auto p = prefix_sums(d, len);
    reach = std::min(max_capacity, reach + len);
    for (std::size_t cap = 0; cap <= reach; ++cap) {
      double best = row[cap];
      const std::size_t upto = std::min(len, cap);
      for (std::size_t i = 1; i <= upto; ++i) {
        const double v = row[cap - i] + p[i];
        if (v > best) best = v;
      }
      next[cap] = best;
    }
    for (std::size_t cap = reach + 1; cap <= max_capacity; ++cap) next[cap] = next[reach];
    std::swap(row, next);
  }
  return row;
}

OptResult solve_dp_ilp(const MinStatTable& table, std::size_t k) {
  check_k(table, k);
  const std::size_t capacity = table.total_units() - k;
  const std::size_t S = table.num_strata();
  constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

  // best[s][d]: largest gain from strata s..S-1 using exactly d units.
  std::vector<std::vector<double>> prefix(S);
  for (std::size_t s = 0; s < S; ++s) prefix[s] = prefix_sums(table.deltas[s], table.deltas[s].size());
  std::vector<std::vector<double>> best(S + 1, std::vector<double>(capacity + 1, kInfeasible));
  best[S][0] = 0.0;
  for (std::size_t s = S; s-- > 0;) {
    const std::size_t n = table.deltas[s].size();
    for (std::size_t d = 0; d <= capacity; ++d) {
      double b = kInfeasible;
      for (std::size_t i = 0; i <= std::min(n, d); ++i) {
        const double rest = best[s + 1][d - i];
        if (rest == kInfeasible) continue;
        b = std::max(b, prefix[s][i] + rest);
      }
      best[s][d] = b;
    }
  }

  OptResult result;
  result.method = OptMethod::DP_ILP;
  result.gain = best[0][capacity];
  result.objective = table.base_statistic() - result.gain;
  result.allocation.assign(S, 0.0);
  std::size_t d = capacity;
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t n = table.deltas[s].size();
    for (std::size_t i = 0; i <= std::min(n, d); ++i) {
      const double rest = best[s + 1][d - i];
      if (rest == kInfeasible) continue;
      if (prefix[s][i] + rest >= best[s][d] - kObjectiveTolerance) {
        result.allocation[s] = static_cast<double>(i);
        d -= i;
        break;
      }
    }
  }
  return result;
}

OptResult solve_brute_force(const MinStatTable& table, std::size_t k, std::uint64_t budget) {
  check_k(table, k);
  const std::size_t S = table.num_strata();
  long double combos = 1;
  for (const auto& d : table.deltas) combos *= static_cast<long double>(d.size() + 1);
  if (combos > static_cast<long double>(budget)) {
    throw BudgetExceeded("brute-force enumeration needs more than " + std::to_string(budget) +
                         " allocations");
  }
  const std::size_t capacity = table.total_units() - k;
  std::vector<std::size_t> suffix_units(S + 1, 0);
  for (std::size_t s = S; s-- > 0;) suffix_units[s] = suffix_units[s + 1] + table.deltas[s].size();

  OptResult result;
  result.method = OptMethod::BruteForce;
  result.objective = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> current(S, 0);

  // Lexicographic enumeration; only strict improvements replace the incumbent.
  auto recurse = [&](auto&& self, std::size_t s, std::size_t remaining) -> void {
    if (s == S) {
      if (remaining != 0) return;
      double objective = 0.0;
      for (std::size_t t = 0; t < S; ++t) objective += table.min_stat[t][current[t]];
      if (objective < result.objective - kObjectiveTolerance) {
        result.objective = objective;
        result.allocation.assign(current.begin(), current.end());
      }
      return;
    }
    const std::size_t n = table.deltas[s].size();
    for (std::size_t l = 0; l <= std::min(n, remaining); ++l) {
      if (remaining - l > suffix_units[s + 1]) continue;
      current[s] = l;
      self(self, s + 1, remaining - l);
    }
    current[s] = 0;
  };
  recurse(recurse, 0, capacity);
  result.gain = table.base_statistic() - result.objective;
  return result;
}

OptResult solve_naive_greedy(const MinStatTable& table, std::size_t k) {
  check_k(table, k);
  const std::size_t capacity = table.total_units() - k;
  const std::size_t S = table.num_strata();
  std::vector<std::size_t> taken(S, 0);
  double gain = 0.0;
  for (std::size_t step = 0; step < capacity; ++step) {
    std::size_t pick = S;
    for (std::size_t s = 0; s < S; ++s) {
      if (taken[s] >= table.deltas[s].size()) continue;
      if (pick == S || table.deltas[s][taken[s]] > table.deltas[pick][taken[pick]]) pick = s;
    }
    gain += table.deltas[pick][taken[pick]];
    ++taken[pick];
  }
  OptResult result;
  result.method = OptMethod::NaiveGreedy;
  result.gain = gain;
  result.objective = table.base_statistic() - gain;
  result.allocation.assign(taken.begin(), taken.end());
  return result;
}

}  // namespace rankquant
