#include "rankquant/min_stat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rankquant {

namespace {

bool control_below_at_tie(TiePolicy policy, std::size_t control_index, std::size_t treated_index) {
  switch (policy) {
    case TiePolicy::ControlsFirst:
      return true;
    case TiePolicy::TreatedFirst:
      return false;
    case TiePolicy::FirstByUnitOrder:
      return control_index < treated_index;
  }
  return false;
}

std::vector<double> stratum_min_stats(const Stratum& stratum, const std::vector<double>& phi,
                                      TiePolicy policy, double c) {
  const auto& units = stratum.units();
  const std::size_t n = units.size();
  std::vector<std::size_t> treated, controls;
  for (std::size_t i = 0; i < n; ++i) (units[i].treated ? treated : controls).push_back(i);
  std::sort(treated.begin(), treated.end(), [&](std::size_t a, std::size_t b) {
    if (units[a].outcome != units[b].outcome) return units[a].outcome < units[b].outcome;
    return a < b;
  });
  const std::size_t m = treated.size();

  // Number of controls ranked below each treated unit (ascending order).
  std::vector<std::size_t> below(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto t = treated[j];
    std::size_t count = 0;
    for (auto ctl : controls) {
      const double diff = units[t].outcome - units[ctl].outcome;
      if (diff > c || (diff == c && control_below_at_tie(policy, ctl, t))) ++count;
    }
    below[j] = j > 0 ? std::max(count, below[j - 1]) : count;
  }

  std::vector<double> prefix_phi(n + 1, 0.0);
  for (std::size_t r = 1; r <= n; ++r) prefix_phi[r] = prefix_phi[r - 1] + phi[r - 1];

  std::vector<double> out(n + 1, prefix_phi[m]);
  for (std::size_t l = 0; l < m; ++l) {
    // Units sent to +infinity occupy the bottom l ranks.
    double total = prefix_phi[l];
    for (std::size_t j = 0; j + l < m; ++j) total += phi[l + j + below[j]];
    out[l] = total;
  }
  return out;
}

}  // namespace

std::size_t MinStatTable::total_units() const {
  std::size_t n = 0;
  for (const auto& d : deltas) n += d.size();
  return n;
}

double MinStatTable::base_statistic() const {
  double total = 0.0;
  for (const auto& t : min_stat) total += t.front();
  return total;
}

StratumRow build_stratum_row(const StratifiedDataset& dataset, const RankScoreSpec& spec, std::size_t s,
                             TiePolicy policy, double c) {
  const auto& st = dataset.stratum(s);
  StratumRow row;
  row.min_stat = stratum_min_stats(st, spec.scores(s, st.size()), policy, c);
  row.deltas.resize(st.size());
  for (std::size_t j = 1; j <= st.size(); ++j) row.deltas[j - 1] = row.min_stat[j - 1] - row.min_stat[j];
  return row;
}

MinStatTable assemble_min_table(const StratifiedDataset& dataset, double c, std::vector<StratumRow> rows) {
  MinStatTable table;
  table.threshold = c;
  double max_treated = -std::numeric_limits<double>::infinity();
  double min_control = std::numeric_limits<double>::infinity();
  for (const auto& st : dataset.strata()) {
    for (const auto& u : st.units()) {
      if (u.treated) max_treated = std::max(max_treated, u.outcome);
      else min_control = std::min(min_control, u.outcome);
    }
  }
  const double spread = std::isfinite(max_treated) && std::isfinite(min_control)
                            ? std::max(0.0, max_treated - min_control)
                            : 0.0;
  table.infinity_surrogate = spread + 1.0 + std::abs(c);
  table.min_stat.reserve(rows.size());
  table.deltas.reserve(rows.size());
  for (auto& row : rows) {
    table.min_stat.push_back(std::move(row.min_stat));
    table.deltas.push_back(std::move(row.deltas));
  }
  return table;
}

MinStatTable build_min_table(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                             TiePolicy policy, double c) {
  std::vector<StratumRow> rows;
  rows.reserve(dataset.num_strata());
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) rows.push_back(build_stratum_row(dataset, spec, s, policy, c));
  return assemble_min_table(dataset, c, std::move(rows));
}

bool verify_min_table(const MinStatTable& table, const StratifiedDataset& dataset,
                      const RankScoreSpec& spec, TiePolicy policy, double tolerance) {
  if (table.num_strata() != dataset.num_strata()) return false;
  const double c = table.threshold;
  const double inf = table.infinity_surrogate;
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    const auto& st = dataset.stratum(s);
    const auto& phi = spec.scores(s, st.size());
    const auto z = st.assignments();
    std::vector<std::size_t> treated;
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (z[i]) treated.push_back(i);
    }
    const std::size_t m = treated.size();
    // best[l] = min over subsets with exactly l infinite effects.
    std::vector<double> best(m + 1, std::numeric_limits<double>::infinity());
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      std::vector<double> y(st.size());
      for (std::size_t i = 0; i < st.size(); ++i) y[i] = st.units()[i].outcome;
      std::size_t count = 0;
      for (std::size_t b = 0; b < m; ++b) {
        const auto i = treated[b];
        if (mask >> b & 1) {
          y[i] -= inf;
          ++count;
        } else {
          y[i] -= c;
        }
      }
      best[count] = std::min(best[count], stratum_statistic(z, y, phi, policy));
    }
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l <= st.size(); ++l) {
      if (l <= m) running = std::min(running, best[l]);
      if (std::abs(running - table.min_stat[s][l]) > tolerance) return false;
    }
  }
  return true;
}

}  // namespace rankquant
