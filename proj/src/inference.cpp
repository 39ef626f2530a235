#include "rankquant/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

namespace rankquant {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
}

// The candidate grid d_1 < ... < d_C splits the line into intervals
// I_0 = (-inf, d_1), I_i = (d_i, d_{i+1}), I_C = (d_C, inf). Inside an
// interval no treated-control pair is tied, so every tie policy agrees.
// Evaluating at d_i with treated-first ties reproduces I_i (c slightly above
// d_i); controls-first ties at d_1 reproduce I_0.
//
// A stratum's row only changes at its own gaps e_1 < ... < e_m: on I_i it is
// the row at the largest e_j <= d_i (treated-first), or the row below e_1.
// Rows are precomputed per stratum when they fit the memory budget.
class IntervalTables {
 public:
  IntervalTables(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                 const std::vector<double>& candidates)
      : dataset_(dataset), spec_(spec), candidates_(candidates) {
    constexpr std::size_t kBudgetDoubles = 20'000'000;
    std::size_t need = 0;
    gaps_.resize(dataset.num_strata());
    for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
      const auto& st = dataset.stratum(s);
      for (const auto& t : st.units()) {
        if (!t.treated) continue;
        for (const auto& ctl : st.units()) {
          if (!ctl.treated) gaps_[s].push_back(t.outcome - ctl.outcome);
        }
      }
      std::sort(gaps_[s].begin(), gaps_[s].end());
      gaps_[s].erase(std::unique(gaps_[s].begin(), gaps_[s].end()), gaps_[s].end());
      need += (gaps_[s].size() + 1) * 2 * (st.size() + 1);
    }
    if (need > kBudgetDoubles || candidates.empty()) return;
    rows_.resize(dataset.num_strata());
    for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
      const auto& g = gaps_[s];
      rows_[s].push_back(build_stratum_row(dataset, spec, s, TiePolicy::ControlsFirst,
                                           g.empty() ? candidates.front() : g.front()));
      for (double e : g) rows_[s].push_back(build_stratum_row(dataset, spec, s, TiePolicy::TreatedFirst, e));
    }
  }

  MinStatTable operator()(std::size_t interval) const {
    if (candidates_.empty()) return build_min_table(dataset_, spec_, TiePolicy::TreatedFirst, 0.0);
    const double c = candidates_[interval == 0 ? 0 : interval - 1];
    if (rows_.empty()) {
      return build_min_table(dataset_, spec_, interval == 0 ? TiePolicy::ControlsFirst : TiePolicy::TreatedFirst, c);
    }
    std::vector<StratumRow> rows;
    rows.reserve(rows_.size());
    for (std::size_t s = 0; s < rows_.size(); ++s) {
      const auto& g = gaps_[s];
      const std::size_t j =
          interval == 0 ? 0 : static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), c) - g.begin());
      rows.push_back(rows_[s][j]);
    }
    return assemble_min_table(dataset_, c, std::move(rows));
  }

  /// The table at c = d_i (i >= 1) under `policy`; only strata with a gap
  /// exactly at d_i see the tie.
  MinStatTable at_candidate(std::size_t interval, TiePolicy policy) const {
    const double c = candidates_[interval - 1];
    if (rows_.empty()) return build_min_table(dataset_, spec_, policy, c);
    std::vector<StratumRow> rows;
    rows.reserve(rows_.size());
    for (std::size_t s = 0; s < rows_.size(); ++s) {
      const auto& g = gaps_[s];
      if (std::binary_search(g.begin(), g.end(), c)) {
        rows.push_back(build_stratum_row(dataset_, spec_, s, policy, c));
      } else {
        rows.push_back(rows_[s][static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), c) - g.begin())]);
      }
    }
    return assemble_min_table(dataset_, c, std::move(rows));
  }

 private:
  const StratifiedDataset& dataset_;
  const RankScoreSpec& spec_;
  const std::vector<double>& candidates_;
  std::vector<std::vector<double>> gaps_;
  std::vector<std::vector<StratumRow>> rows_;
};

// sup{k : p_k > alpha} for a nonincreasing p sequence with p_0 = 1.
std::size_t kbar_of(const std::vector<double>& p, double alpha) {
  std::size_t kbar = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > alpha) kbar = k;
  }
  return kbar;
}

std::vector<double> pvalues_from_table(const MinStatTable& table, const TailFunction& tail,
                                       PValueMethod method) {
  const auto stats = min_statistics_all_k(table, method);
  std::vector<double> p(stats.size());
  for (std::size_t k = 0; k < stats.size(); ++k) p[k] = k == 0 ? 1.0 : tail(stats[k]);
  return p;
}

}  // namespace

TailFunction tail_of(const NullDistribution& null) {
  return [&null](double t) { return null.tail(t); };
}

double min_statistic(const MinStatTable& table, std::size_t k, PValueMethod method) {
  if (method == PValueMethod::LP_conservative) return solve_greedy_lp(table, k).objective;
  const std::size_t N = table.total_units();
  if (k > N) throw DataError("k exceeds the number of units");
  const auto gains = dp_gains(table, N - k);
  return table.base_statistic() - gains[N - k];
}

std::vector<double> min_statistics_all_k(const MinStatTable& table, PValueMethod method) {
  const std::size_t N = table.total_units();
  const auto gains =
      method == PValueMethod::ILP_exact ? dp_gains(table, N) : greedy_gains(table, N);
  const double base = table.base_statistic();
  std::vector<double> stats(N + 1);
  for (std::size_t k = 0; k <= N; ++k) stats[k] = base - gains[N - k];
  return stats;
}

double test_quantile(const StratifiedDataset& dataset, const RankScoreSpec& spec, TiePolicy policy,
                     std::size_t k, double c, const TailFunction& tail, PValueMethod method) {
  if (k > dataset.total_units()) throw DataError("k exceeds the number of units");
  if (k == 0) return 1.0;
  const auto table = build_min_table(dataset, spec, policy, c);
  return tail(min_statistic(table, k, method));
}

std::vector<double> test_all_quantiles(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                       TiePolicy policy, double c, const TailFunction& tail,
                                       PValueMethod method) {
  return pvalues_from_table(build_min_table(dataset, spec, policy, c), tail, method);
}

PValueBounds test_quantile_bounds(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                  std::size_t k, double c, const TailFunction& tail,
                                  PValueMethod method) {
  return {test_quantile(dataset, spec, TiePolicy::ControlsFirst, k, c, tail, method),
          test_quantile(dataset, spec, TiePolicy::TreatedFirst, k, c, tail, method)};
}

std::vector<double> candidate_thresholds(const StratifiedDataset& dataset) {
  std::vector<double> out;
  for (const auto& st : dataset.strata()) {
    for (const auto& t : st.units()) {
      if (!t.treated) continue;
      for (const auto& ctl : st.units()) {
        if (!ctl.treated) out.push_back(t.outcome - ctl.outcome);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

QuantileReport invert_confidence(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                 double alpha, const TailFunction& tail, PValueMethod method,
                                 const InversionOptions& options) {
  check_alpha(alpha);
  const std::size_t N = dataset.total_units();
  const auto candidates = candidate_thresholds(dataset);
  const std::size_t C = candidates.size();
  const IntervalTables interval_table(dataset, spec, candidates);

  // first_interval[k]: smallest interval index whose p_{k,.} exceeds alpha.
  std::vector<std::size_t> ks = options.ks;
  if (ks.empty()) {
    for (std::size_t k = 1; k <= N; ++k) ks.push_back(k);
  }
  for (auto k : ks) {
    if (k == 0 || k > N) throw DataError("requested rank k = " + std::to_string(k) + " is outside 1..N");
  }
  std::map<std::size_t, std::size_t> first_interval;

  if (options.ks.empty()) {
    // All ranks at once: kbar(interval) is nondecreasing, so bisect on the
    // interval index and only split where kbar changes. Inside a split with
    // kbar in [a, b], gains beyond capacity N - a are never consulted.
    std::map<std::size_t, std::size_t> kbar;
    auto eval = [&](std::size_t i, std::size_t a, std::size_t b) {
      auto it = kbar.find(i);
      if (it != kbar.end()) return it->second;
      const auto table = interval_table(i);
      const double base = table.base_statistic();
      // Largest k in [a, b] whose p-value from `gains` exceeds alpha; the
      // p-value at a exceeds alpha by monotonicity in c.
      auto last_passing = [&](const std::vector<double>& gains, std::size_t a, std::size_t b) {
        std::size_t lo = a, hi = b + 1;
        while (hi - lo > 1) {
          const std::size_t mid = lo + (hi - lo) / 2;
          if (tail(base - gains[N - mid]) > alpha) lo = mid;
          else hi = mid;
        }
        return lo;
      };
      if (method == PValueMethod::ILP_exact) {
        // A smaller gain means a larger statistic and a smaller p-value, so the
        // bracket's lower gains give a floor on kbar and its upper gains a ceiling.
        const auto bracket = gain_bracket(table, N - a);
        const std::size_t floor = last_passing(bracket.lower, a, b);
        const std::size_t ceil = last_passing(bracket.upper, floor, b);
        if (floor == ceil) return kbar[i] = floor;
        return kbar[i] = last_passing(dp_gains(table, N - floor), floor, ceil);
      }
      return kbar[i] = last_passing(greedy_gains(table, N - a, N - b), a, b);
    };
    const std::size_t k_lo = eval(0, 0, N);
    for (std::size_t k = 1; k <= std::min(k_lo, N); ++k) first_interval[k] = 0;
    auto assign = [&](auto&& self, std::size_t lo, std::size_t hi, std::size_t a, std::size_t b) -> void {
      if (a >= b) return;
      if (hi - lo == 1) {
        for (std::size_t k = a + 1; k <= b; ++k) first_interval[k] = hi;
        return;
      }
      const std::size_t mid = lo + (hi - lo) / 2;
      const std::size_t m = eval(mid, a, b);
      self(self, lo, mid, a, m);
      self(self, mid, hi, m, b);
    };
    if (C > 0) assign(assign, 0, C, k_lo, eval(C, k_lo, N));
  } else {
    // Selected ranks: independent bisection per k with capacity N - k.
    std::vector<std::size_t> result(ks.size(), C + 1);
    auto search = [&](std::size_t idx) {
      const std::size_t k = ks[idx];
      auto passes = [&](std::size_t i) {
        const auto table = interval_table(i);
        return tail(min_statistic(table, k, method)) > alpha;
      };
      if (passes(0)) {
        result[idx] = 0;
        return;
      }
      std::size_t lo = 0, hi = C;  // passes(lo) false; passes(hi) expected true
      if (!passes(hi)) return;
      while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (passes(mid)) hi = mid;
        else lo = mid;
      }
      result[idx] = hi;
    };
    const unsigned workers =
        std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(ks.size())));
    if (workers == 1) {
      for (std::size_t i = 0; i < ks.size(); ++i) search(i);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < ks.size(); i += workers) search(i);
        });
      }
      for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < ks.size(); ++i) first_interval[ks[i]] = result[i];
  }

  QuantileReport report;
  report.alpha = alpha;
  report.method = method;
  report.total_units = N;

  // At a limit d_i the treated-first p-value is the value just right of d_i
  // (passes by construction) and the controls-first one the value just left
  // of it (fails). Only unit-order ranking needs solving, once per boundary
  // over a capacity range wide enough for the smallest k it serves.
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> k_range;  // smallest and largest k served
  for (auto k : ks) {
    const auto it = first_interval.find(k);
    if (it == first_interval.end() || it->second == 0 || it->second > C) continue;
    auto [pos, fresh] = k_range.emplace(it->second, std::pair{k, k});
    pos->second = {std::min(pos->second.first, k), std::max(pos->second.second, k)};
  }
  struct Boundary {
    MinStatTable table;
    GainBracket bracket;
    std::vector<double> exact;
  };
  std::map<std::size_t, Boundary> boundary;
  auto seeded_passes = [&](std::size_t interval, std::size_t k) {
    auto it = boundary.find(interval);
    const auto [k_min, k_max] = k_range.at(interval);
    const std::size_t cap = N - k_min;
    if (it == boundary.end()) {
      Boundary b{interval_table.at_candidate(interval, TiePolicy::FirstByUnitOrder), {}, {}};
      if (method == PValueMethod::ILP_exact) b.bracket = gain_bracket(b.table, cap);
      else b.exact = greedy_gains(b.table, cap, N - k_max);
      it = boundary.emplace(interval, std::move(b)).first;
    }
    auto& b = it->second;
    const double base = b.table.base_statistic();
    if (b.exact.empty()) {
      if (tail(base - b.bracket.lower[N - k]) > alpha) return true;
      if (!(tail(base - b.bracket.upper[N - k]) > alpha)) return false;
      b.exact = dp_gains(b.table, cap);
    }
    return tail(base - b.exact[N - k]) > alpha;
  };

  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (auto k : ks) {
    LowerLimit lim;
    lim.k = k;
    const std::size_t i = first_interval.count(k) ? first_interval[k] : C + 1;
    if (i == 0) {
      lim.lower = kNegInf;
    } else if (i > C) {
      // p never exceeds alpha: empty confidence set.
      lim.lower = std::numeric_limits<double>::infinity();
    } else {
      lim.lower = candidates[i - 1];
      lim.included_upper_p = true;
      lim.included_seeded_p = seeded_passes(i, k);
      lim.included_lower_p = false;
    }
    report.limits.push_back(lim);
  }

  for (double c : options.count_thresholds) {
    report.count_limits.push_back(
        {c, count_lower_limit(dataset, spec, TiePolicy::TreatedFirst, c, alpha, tail, method)});
  }
  return report;
}

std::size_t count_lower_limit(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                              TiePolicy policy, double c, double alpha, const TailFunction& tail,
                              PValueMethod method) {
  check_alpha(alpha);
  const auto p = test_all_quantiles(dataset, spec, policy, c, tail, method);
  return dataset.total_units() - kbar_of(p, alpha);
}

TwoSidedResult combine_two_sided(double p_right, double p_left, double alpha) {
  check_alpha(alpha);
  return {p_right, p_left, std::min(p_right, p_left) <= alpha / 2.0};
}

TwoSidedResult two_sided_test(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                              TiePolicy policy, std::size_t k, double c, double alpha,
                              const TailFunction& tail, PValueMethod method) {
  const std::size_t N = dataset.total_units();
  if (k == 0 || k > N) throw DataError("two-sided test needs 1 <= k <= N");
  const double p_right = test_quantile(dataset, spec, policy, k, c, tail, method);
  // tau_(k) >= c  <=>  (-tau)_(N-k+1) <= -c; negating outcomes negates effects.
  const double p_left =
      test_quantile(negate_outcomes(dataset), spec, policy, N - k + 1, -c, tail, method);
  return combine_two_sided(p_right, p_left, alpha);
}

bool controls_outnumber_treated(const StratifiedDataset& dataset) {
  return dataset.total_controls() > dataset.total_treated();
}

}  // namespace rankquant
