#include "rankquant/rank_scores.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <string>

namespace rankquant {

struct RankScoreSpec::Cache {
  std::shared_mutex mutex;
  std::map<std::pair<int, std::size_t>, std::vector<double>> tables;
};

RankScoreSpec RankScoreSpec::wilcoxon() {
  RankScoreSpec spec;
  spec.kind_ = ScoreKind::Wilcoxon;
  spec.cache_ = std::make_shared<Cache>();
  return spec;
}

RankScoreSpec RankScoreSpec::stephenson(int h) { return stephenson(std::vector<int>{h}); }

RankScoreSpec RankScoreSpec::stephenson(std::vector<int> h_per_stratum) {
  if (h_per_stratum.empty()) throw DataError("Stephenson scores need at least one h");
  for (int h : h_per_stratum) {
    if (h < 2) throw DataError("Stephenson parameter h must be at least 2, got " + std::to_string(h));
  }
  RankScoreSpec spec;
  spec.kind_ = ScoreKind::Stephenson;
  spec.h_ = std::move(h_per_stratum);
  spec.cache_ = std::make_shared<Cache>();
  return spec;
}

RankScoreSpec RankScoreSpec::custom(std::map<std::size_t, std::vector<double>> tables) {
  for (const auto& [n, scores] : tables) {
    if (scores.size() != n) {
      throw DataError("custom score list for stratum size " + std::to_string(n) + " has " +
                      std::to_string(scores.size()) + " entries");
    }
    for (std::size_t r = 1; r < scores.size(); ++r) {
      if (!std::isfinite(scores[r]) || scores[r] < scores[r - 1]) {
        throw DataError("custom scores for stratum size " + std::to_string(n) +
                        " must be finite and nondecreasing");
      }
    }
  }
  RankScoreSpec spec;
  spec.kind_ = ScoreKind::Custom;
  spec.custom_ = std::move(tables);
  spec.cache_ = std::make_shared<Cache>();
  return spec;
}

int RankScoreSpec::stephenson_h(std::size_t stratum) const {
  if (h_.empty()) return 0;
  if (h_.size() == 1) return h_.front();
  if (stratum >= h_.size()) {
    throw DataError("no Stephenson h given for stratum " + std::to_string(stratum));
  }
  return h_[stratum];
}

const std::vector<double>& RankScoreSpec::scores(std::size_t stratum, std::size_t n) const {
  if (kind_ == ScoreKind::Custom) {
    auto it = custom_.find(n);
    if (it == custom_.end()) {
      throw DataError("no custom scores for stratum size " + std::to_string(n));
    }
    return it->second;
  }
  const int h = kind_ == ScoreKind::Stephenson ? stephenson_h(stratum) : 0;
  const auto key = std::make_pair(h, n);
  {
    std::shared_lock lock(cache_->mutex);
    auto it = cache_->tables.find(key);
    if (it != cache_->tables.end()) return it->second;
  }
  std::vector<double> table;
  if (kind_ == ScoreKind::Wilcoxon) {
    table.resize(n);
    std::iota(table.begin(), table.end(), 1.0);
  } else {
    table = stephenson_scores(n, h);
  }
  std::unique_lock lock(cache_->mutex);
  return cache_->tables.try_emplace(key, std::move(table)).first->second;
}

double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  constexpr unsigned __int128 kExactLimit = static_cast<unsigned __int128>(1) << 53;
  unsigned __int128 value = 1;
  for (unsigned i = 1; i <= k; ++i) {
    // value * (n - k + i) / i stays integral at every step.
    value = value * (n - k + i) / i;
    if (value > kExactLimit) {
      return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    }
  }
  return static_cast<double>(value);
}

std::vector<double> stephenson_scores(std::size_t n, int h) {
  std::vector<double> table(n, 0.0);
  for (std::size_t r = 1; r <= n; ++r) {
    if (static_cast<long>(r) > h - 1) {
      table[r - 1] = binomial(static_cast<unsigned>(r - 1), static_cast<unsigned>(h - 1));
    }
  }
  // lgamma rounding must not break monotonicity for huge arguments.
  for (std::size_t r = 1; r < n; ++r) table[r] = std::max(table[r], table[r - 1]);
  return table;
}

std::vector<std::size_t> ranks(std::span<const double> outcomes, std::span<const int> assignments,
                               TiePolicy policy) {
  if (outcomes.size() != assignments.size()) {
    throw DataError("outcome and assignment sequences differ in length");
  }
  const std::size_t n = outcomes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto tie_key = [&](std::size_t i) -> int {
    switch (policy) {
      case TiePolicy::ControlsFirst:
        return assignments[i];
      case TiePolicy::TreatedFirst:
        return 1 - assignments[i];
      case TiePolicy::FirstByUnitOrder:
        break;
    }
    return 0;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (outcomes[a] != outcomes[b]) return outcomes[a] < outcomes[b];
    return tie_key(a) < tie_key(b);
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

double stratum_statistic(std::span<const int> assignments, std::span<const double> outcomes,
                         std::span<const double> scores, TiePolicy policy) {
  if (scores.size() != outcomes.size()) {
    throw DataError("score table length does not match stratum size");
  }
  const auto r = ranks(outcomes, assignments, policy);
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (assignments[i] == 1) total += scores[r[i] - 1];
  }
  return total;
}

double stratum_statistic(const Stratum& stratum, std::span<const double> imputed_controls,
                         const RankScoreSpec& spec, std::size_t stratum_index, TiePolicy policy) {
  if (imputed_controls.size() != stratum.size()) {
    throw DataError("imputed outcome vector does not match stratum size");
  }
  const auto z = stratum.assignments();
  return stratum_statistic(z, imputed_controls, spec.scores(stratum_index, stratum.size()), policy);
}

double stratified_statistic(const StratifiedDataset& dataset,
                            const std::vector<std::vector<double>>& imputed_controls,
                            const RankScoreSpec& spec, TiePolicy policy) {
  if (imputed_controls.size() != dataset.num_strata()) {
    throw DataError("imputed outcomes do not match the number of strata");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    total += stratum_statistic(dataset.stratum(s), imputed_controls[s], spec, s, policy);
  }
  return total;
}

std::vector<std::vector<double>> impute_controls(const StratifiedDataset& dataset, double delta) {
  std::vector<std::vector<double>> out;
  out.reserve(dataset.num_strata());
  for (const auto& st : dataset.strata()) {
    std::vector<double> y;
    y.reserve(st.size());
    for (const auto& u : st.units()) y.push_back(u.treated ? u.outcome - delta : u.outcome);
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<std::vector<double>> impute_controls(const StratifiedDataset& dataset,
                                                 const std::vector<std::vector<double>>& delta) {
  if (delta.size() != dataset.num_strata()) throw DataError("effect vector shape mismatch");
  std::vector<std::vector<double>> out;
  out.reserve(dataset.num_strata());
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    const auto& st = dataset.stratum(s);
    if (delta[s].size() != st.size()) throw DataError("effect vector shape mismatch");
    std::vector<double> y;
    y.reserve(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) {
      const auto& u = st.units()[i];
      y.push_back(u.treated ? u.outcome - delta[s][i] : u.outcome);
    }
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace rankquant
