#pragma once

// Independent reference implementations used only by tests. Each one follows
// the textbook definition directly and favors obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rankquant/dataset.hpp"
#include "rankquant/rank_scores.hpp"

namespace oracle {

using rankquant::RankScoreSpec;
using rankquant::StratifiedDataset;
using rankquant::Stratum;
using rankquant::Unit;
using Rational = boost::multiprecision::cpp_rational;

/// All index subsets of size m from {0..n-1}, in lexicographic order.
inline std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t m) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == m) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

/// Calls f(assignment) for every assignment of the stratified completely
/// randomized design (per-stratum treated counts kept).
inline void for_each_assignment(const StratifiedDataset& ds,
                                const std::function<void(const std::vector<std::vector<int>>&)>& f) {
  const std::size_t S = ds.num_strata();
  std::vector<std::vector<std::vector<std::size_t>>> choices(S);
  for (std::size_t s = 0; s < S; ++s) {
    choices[s] = subsets(ds.stratum(s).size(), ds.stratum(s).treated_count());
  }
  std::vector<std::vector<int>> z(S);
  std::function<void(std::size_t)> rec = [&](std::size_t s) {
    if (s == S) {
      f(z);
      return;
    }
    for (const auto& c : choices[s]) {
      z[s].assign(ds.stratum(s).size(), 0);
      for (auto i : c) z[s][i] = 1;
      rec(s + 1);
    }
  };
  rec(0);
}

/// Ranks 1..n by (value, index): the "first" rule written out directly.
inline std::vector<std::size_t> first_ranks(const std::vector<double>& y) {
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return y[a] < y[b] || (y[a] == y[b] && a < b);
  });
  std::vector<std::size_t> r(y.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) r[order[pos]] = pos + 1;
  return r;
}

inline double statistic(const StratifiedDataset& ds, const RankScoreSpec& spec,
                        const std::vector<std::vector<int>>& z,
                        const std::vector<std::vector<double>>& y) {
  double t = 0.0;
  for (std::size_t s = 0; s < ds.num_strata(); ++s) {
    const auto& phi = spec.scores(s, ds.stratum(s).size());
    const auto r = first_ranks(y[s]);
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (z[s][i]) t += phi[r[i] - 1];
    }
  }
  return t;
}

/// Null law of the statistic by listing every assignment; value -> probability.
inline std::map<double, double> enumerate_null(const StratifiedDataset& ds, const RankScoreSpec& spec) {
  std::vector<std::vector<double>> y(ds.num_strata());
  for (std::size_t s = 0; s < ds.num_strata(); ++s) {
    y[s].resize(ds.stratum(s).size());
    std::iota(y[s].begin(), y[s].end(), 0.0);  // distinct values: ranks are positions
  }
  std::map<double, double> counts;
  double total = 0.0;
  for_each_assignment(ds, [&](const auto& z) {
    counts[statistic(ds, spec, z, y)] += 1.0;
    total += 1.0;
  });
  for (auto& kv : counts) kv.second /= total;
  return counts;
}

inline double tail(const std::map<double, double>& law, double t) {
  double p = 0.0;
  for (const auto& [v, w] : law) {
    if (v >= t - 1e-9 * std::max(1.0, std::abs(t))) p += w;
  }
  return p;
}

/// Fisher randomization test of the constant-effect null Y(1) - Y(0) = c
/// using unit-order tie breaking.
inline double constant_effect_frt(const StratifiedDataset& ds, const RankScoreSpec& spec, double c) {
  std::vector<std::vector<double>> y0(ds.num_strata());
  std::vector<std::vector<int>> z_obs(ds.num_strata());
  for (std::size_t s = 0; s < ds.num_strata(); ++s) {
    for (const auto& u : ds.stratum(s).units()) {
      y0[s].push_back(u.outcome - (u.treated ? c : 0.0));
      z_obs[s].push_back(u.treated);
    }
  }
  const double observed = statistic(ds, spec, z_obs, y0);
  double hits = 0.0, total = 0.0;
  for_each_assignment(ds, [&](const auto& z) {
    total += 1.0;
    if (statistic(ds, spec, z, y0) >= observed - 1e-9 * std::max(1.0, std::abs(observed))) hits += 1.0;
  });
  return hits / total;
}

/// The optimal monotone dominating transformation by its defining recursion:
/// psi_i = max_{j >= i} (sum_{t<=j} a_t - sum_{t<i} psi_t) / (j - i + 1).
inline std::vector<double> psi_recursion(const std::vector<double>& a) {
  const std::size_t m = a.size();
  std::vector<double> prefix(m + 1, 0.0), psi(m);
  for (std::size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + a[j];
  double used = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    double best = -INFINITY;
    for (std::size_t j = i; j <= m; ++j) {
      best = std::max(best, (prefix[j] - used) / static_cast<double>(j - i + 1));
    }
    psi[i - 1] = best;
    used += best;
  }
  return psi;
}

/// Least concave majorant of the points (j, a_1 + ... + a_j), j = 0..m,
/// evaluated at every integer j, in exact rational arithmetic (monotone chain).
inline std::vector<Rational> concave_majorant(const std::vector<double>& a) {
  const std::size_t m = a.size();
  std::vector<Rational> y(m + 1);
  y[0] = 0;
  for (std::size_t j = 0; j < m; ++j) y[j + 1] = y[j] + Rational(a[j]);
  std::vector<std::size_t> hull;
  auto cross = [&](std::size_t o, std::size_t p, std::size_t q) {
    return Rational(static_cast<long long>(p - o)) * (y[q] - y[o]) -
           Rational(static_cast<long long>(q - o)) * (y[p] - y[o]);
  };
  for (std::size_t j = 0; j <= m; ++j) {
    // Upper hull: drop the middle point while it is on or below the chord.
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), j) >= 0) hull.pop_back();
    hull.push_back(j);
  }
  std::vector<Rational> out(m + 1);
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const std::size_t x0 = hull[h], x1 = hull[h + 1];
    for (std::size_t x = x0; x <= x1; ++x) {
      out[x] = y[x0] + (y[x1] - y[x0]) * Rational(static_cast<long long>(x - x0)) /
                           Rational(static_cast<long long>(x1 - x0));
    }
  }
  if (hull.size() == 1) out[0] = 0;
  return out;
}

/// Worst-case mean of the selected unit's score, then the worst variance among
/// the confounder corners attaining it, by listing every u in {0,1}^n.
struct CornerMoments {
  double mean;
  double variance;
};

inline CornerMoments corner_moments(const std::vector<double>& psi, double Gamma) {
  const std::size_t n = psi.size();
  std::vector<std::pair<double, double>> mv;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = (mask >> i & 1) ? Gamma : 1.0;
      w += wi;
      m1 += wi * psi[i];
      m2 += wi * psi[i] * psi[i];
    }
    m1 /= w;
    m2 /= w;
    mv.emplace_back(m1, m2 - m1 * m1);
  }
  double best = -INFINITY;
  for (const auto& p : mv) best = std::max(best, p.first);
  double var = -INFINITY;
  for (const auto& p : mv) {
    if (p.first >= best - 1e-12 * std::max(1.0, std::abs(best))) var = std::max(var, p.second);
  }
  return {best, var};
}

/// max over confounders u of Pr(T >= t) for a matched-pair design, by listing
/// every corner. Within a pair only which unit (if either) carries the larger
/// u matters, giving three laws per pair; each corner's law is convolved
/// pair by pair.
inline double pair_corner_worst_tail(const std::vector<std::pair<double, double>>& pair_scores,
                                     double Gamma, double t) {
  const std::size_t P = pair_scores.size();
  std::size_t corners = 1;
  for (std::size_t i = 0; i < P; ++i) corners *= 3;
  double worst = 0.0;
  std::map<double, double> law, next;
  for (std::size_t code = 0; code < corners; ++code) {
    law = {{0.0, 1.0}};
    std::size_t c = code;
    for (std::size_t i = 0; i < P; ++i) {
      const std::size_t state = c % 3;
      c /= 3;
      const double p_first = state == 0 ? 0.5 : state == 1 ? Gamma / (1.0 + Gamma) : 1.0 / (1.0 + Gamma);
      next.clear();
      for (const auto& [v, w] : law) {
        next[v + pair_scores[i].first] += w * p_first;
        next[v + pair_scores[i].second] += w * (1.0 - p_first);
      }
      std::swap(law, next);
    }
    double prob = 0.0;
    for (const auto& [v, w] : law) {
      if (v >= t - 1e-9 * std::max(1.0, std::abs(t))) prob += w;
    }
    worst = std::max(worst, prob);
  }
  return worst;
}

/// Random stratified dataset; outcomes are multiples of 1/4 so differences are
/// exact in binary floating point.
inline StratifiedDataset random_dataset(std::mt19937_64& rng, std::size_t max_strata, std::size_t min_n,
                                        std::size_t max_n, int outcome_range = 8) {
  std::uniform_int_distribution<std::size_t> S_dist(1, max_strata), n_dist(min_n, max_n);
  std::uniform_int_distribution<int> y_dist(-outcome_range * 4, outcome_range * 4);
  const std::size_t S = S_dist(rng);
  std::vector<Stratum> strata;
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t n = n_dist(rng);
    std::uniform_int_distribution<std::size_t> m_dist(1, n - 1);
    const std::size_t m = m_dist(rng);
    std::vector<int> z(n, 0);
    std::fill(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(m), 1);
    std::shuffle(z.begin(), z.end(), rng);
    std::vector<Unit> units;
    for (std::size_t i = 0; i < n; ++i) units.push_back({z[i], y_dist(rng) / 4.0});
    strata.emplace_back(std::to_string(s + 1), std::move(units));
  }
  return StratifiedDataset(std::move(strata));
}

/// Matched sets of size n with one treated unit each and Gaussian-ish outcomes
/// shifted by `effect` for the treated.
inline StratifiedDataset random_matched(std::mt19937_64& rng, std::size_t sets, std::size_t n, double effect) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<Stratum> strata;
  for (std::size_t s = 0; s < sets; ++s) {
    const std::size_t t = pick(rng);
    std::vector<Unit> units;
    for (std::size_t i = 0; i < n; ++i) {
      const int z = i == t ? 1 : 0;
      units.push_back({z, std::round((noise(rng) + z * effect) * 64.0) / 64.0});
    }
    strata.emplace_back(std::to_string(s + 1), std::move(units));
  }
  return StratifiedDataset(std::move(strata), rankquant::Design::MatchedSets);
}

/// The three-stratum example with Stephenson h = 4 scores.
inline StratifiedDataset worked_example() {
  auto stratum = [](const char* label, std::vector<double> t, std::vector<double> c) {
    std::vector<Unit> units;
    for (double y : t) units.push_back({1, y});
    for (double y : c) units.push_back({0, y});
    return Stratum(label, std::move(units));
  };
  return StratifiedDataset({stratum("1", {2.9, 2.3, 1.1}, {-0.5, 1.0, 1.9}),
                            stratum("2", {1.4, 2.4, 2.1}, {0.3, -0.8, 0.1}),
                            stratum("3", {3.3, 0.5, 1.8}, {-0.1, -0.8, 2.0})});
}

}  // namespace oracle
