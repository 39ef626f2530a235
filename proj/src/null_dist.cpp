#include "rankquant/null_dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "rankquant/random.hpp"

namespace rankquant {

namespace {

constexpr double kQuantum = 1e-9;

double tolerance_at(double v) { return kQuantum * std::max(1.0, std::abs(v)); }

// Sorts by value and merges atoms within the quantization tolerance.
void merge_atoms(std::vector<std::pair<double, double>>& atoms) {
  std::sort(atoms.begin(), atoms.end());
  std::size_t out = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (out > 0 && atoms[i].first - atoms[out - 1].first <= tolerance_at(atoms[out - 1].first)) {
      atoms[out - 1].second += atoms[i].second;
    } else {
      atoms[out++] = atoms[i];
    }
  }
  atoms.resize(out);
}

constexpr std::size_t kDrawsPerStream = 1024;

}  // namespace

DiscreteDistribution DiscreteDistribution::point(double value) {
  return from_atoms({{value, 1.0}});
}

DiscreteDistribution DiscreteDistribution::from_atoms(std::vector<std::pair<double, double>> atoms) {
  DiscreteDistribution d;
  d.atoms_ = std::move(atoms);
  merge_atoms(d.atoms_);
  double total = 0.0;
  for (const auto& a : d.atoms_) total += a.second;
  if (total > 0.0) {
    for (auto& a : d.atoms_) a.second /= total;
  }
  d.finalize();
  return d;
}

void DiscreteDistribution::finalize() {
  tail_.assign(atoms_.size() + 1, 0.0);
  for (std::size_t i = atoms_.size(); i-- > 0;) tail_[i] = tail_[i + 1] + atoms_[i].second;
  for (auto& t : tail_) t = std::min(1.0, t);
}

double DiscreteDistribution::tail(double c) const {
  if (atoms_.empty()) return 0.0;
  const double cut = c - tolerance_at(c);
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), cut,
                             [](const std::pair<double, double>& a, double v) { return a.first < v; });
  return tail_[static_cast<std::size_t>(it - atoms_.begin())];
}

DiscreteDistribution DiscreteDistribution::convolve(const DiscreteDistribution& other) const {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(atoms_.size() * other.atoms_.size());
  for (const auto& [va, pa] : atoms_) {
    for (const auto& [vb, pb] : other.atoms_) atoms.emplace_back(va + vb, pa * pb);
  }
  DiscreteDistribution d;
  d.atoms_ = std::move(atoms);
  merge_atoms(d.atoms_);
  d.finalize();
  return d;
}

DiscreteDistribution subset_score_sum(std::span<const double> phi, std::size_t m,
                                      std::size_t max_support) {
  const std::size_t n = phi.size();
  if (m > n) throw DataError("treated count exceeds stratum size");
  // by_size[j]: (score sum, number of subsets) over subsets of size j of the
  // ranks processed so far.
  std::vector<std::vector<std::pair<double, double>>> by_size(m + 1);
  by_size[0].emplace_back(0.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = std::min(m, r + 1); j >= 1; --j) {
      if (by_size[j - 1].empty()) continue;
      auto& dst = by_size[j];
      for (const auto& [v, w] : by_size[j - 1]) dst.emplace_back(v + phi[r], w);
      merge_atoms(dst);
      if (dst.size() > max_support) {
        throw BudgetExceeded("exact null support exceeds " + std::to_string(max_support) + " values");
      }
    }
  }
  return DiscreteDistribution::from_atoms(std::move(by_size[m]));
}

NullDistribution::NullDistribution(NullMode mode, DiscreteDistribution law, std::size_t reps,
                                   std::uint64_t seed)
    : mode_(mode), law_(std::move(law)), reps_(reps), seed_(seed) {}

double NullDistribution::standard_error(double p) const {
  if (mode_ == NullMode::Exact || reps_ == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(reps_));
}

std::vector<std::pair<double, double>> NullDistribution::tail_table() const {
  std::vector<std::pair<double, double>> rows;
  rows.reserve(law_.support_size());
  for (const auto& [v, p] : law_.atoms()) rows.emplace_back(v, law_.tail(v));
  return rows;
}

bool NullDistribution::operator==(const NullDistribution& other) const {
  return mode_ == other.mode_ && reps_ == other.reps_ && seed_ == other.seed_ &&
         law_.atoms() == other.law_.atoms();
}

NullDistribution exact_null(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                            std::size_t budget) {
  DiscreteDistribution total = DiscreteDistribution::point(0.0);
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    const auto& st = dataset.stratum(s);
    const auto law = subset_score_sum(spec.scores(s, st.size()), st.treated_count(), budget);
    if (static_cast<double>(total.support_size()) * static_cast<double>(law.support_size()) >
        static_cast<double>(budget) * 64.0) {
      throw BudgetExceeded("exact null convolution exceeds the enumeration budget");
    }
    total = total.convolve(law);
    if (total.support_size() > budget) {
      throw BudgetExceeded("exact null support exceeds " + std::to_string(budget) + " values");
    }
  }
  return NullDistribution(NullMode::Exact, std::move(total));
}

NullDistribution mc_null(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                         std::size_t reps, std::uint64_t seed, unsigned threads) {
  if (reps == 0) throw DataError("Monte Carlo null needs at least one replication");
  const std::size_t S = dataset.num_strata();
  std::vector<const std::vector<double>*> tables(S);
  for (std::size_t s = 0; s < S; ++s) tables[s] = &spec.scores(s, dataset.stratum(s).size());

  std::vector<double> draws(reps);
  const std::size_t streams = (reps + kDrawsPerStream - 1) / kDrawsPerStream;
  auto run_streams = [&](std::size_t first, std::size_t step) {
    std::vector<std::size_t> pool;
    for (std::size_t stream = first; stream < streams; stream += step) {
      auto rng = make_stream(seed, stream);
      const std::size_t begin = stream * kDrawsPerStream;
      const std::size_t end = std::min(reps, begin + kDrawsPerStream);
      for (std::size_t rep = begin; rep < end; ++rep) {
        double total = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          const auto& st = dataset.stratum(s);
          const auto& phi = *tables[s];
          const std::size_t n = st.size();
          const std::size_t m = st.treated_count();
          pool.resize(n);
          std::iota(pool.begin(), pool.end(), std::size_t{0});
          // Partial Fisher-Yates: the first m slots are the treated ranks.
          for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
            std::swap(pool[i], pool[j]);
            total += phi[pool[i]];
          }
        }
        draws[rep] = total;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(streams)));
  if (workers == 1) {
    run_streams(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_streams, w, workers);
    for (auto& t : pool) t.join();
  }

  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(reps);
  for (double v : draws) atoms.emplace_back(v, 1.0);
  return NullDistribution(NullMode::MonteCarlo, DiscreteDistribution::from_atoms(std::move(atoms)),
                          reps, seed);
}

double pvalue(const NullDistribution& distribution, double observed_min_statistic) {
  return distribution.tail(observed_min_statistic);
}

}  // namespace rankquant
