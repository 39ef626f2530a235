#include "rankquant/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rankquant {

namespace {

constexpr double kArgmaxTolerance = 1e-12;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
}

void check_matched(const StratifiedDataset& dataset) {
  if (dataset.num_strata() == 0) throw DataError("dataset has no matched sets");
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    if (!one_treated_or_one_control(dataset.stratum(s))) {
      throw DataError("matched set '" + dataset.stratum(s).label() +
                      "' needs exactly one treated or exactly one control unit");
    }
  }
}

}  // namespace

SensitivityModel::SensitivityModel(double Gamma) : Gamma_(Gamma) {
  if (!(Gamma >= 1.0) || !std::isfinite(Gamma)) throw DataError("Gamma must be a finite value >= 1");
}

double SensitivityModel::gamma() const { return std::log(Gamma_); }

std::vector<double> selected_unit_scores(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                         std::size_t s) {
  const auto& st = dataset.stratum(s);
  const std::size_t n = st.size();
  const auto& phi = spec.scores(s, n);
  if (st.treated_count() == 1) return phi;
  if (st.control_count() == 1) {
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    std::vector<double> psi(n);
    for (std::size_t r = 0; r < n; ++r) psi[r] = total - phi[n - 1 - r];
    return psi;
  }
  throw DataError("matched set '" + st.label() +
                  "' needs exactly one treated or exactly one control unit");
}

WorstCaseMoments worst_case_moments(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                    const SensitivityModel& model) {
  check_matched(dataset);
  const double G = model.Gamma();
  const std::size_t S = dataset.num_strata();
  WorstCaseMoments out;
  out.set_mean.resize(S);
  out.set_variance.resize(S);
  out.maximizers.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto psi = selected_unit_scores(dataset, spec, s);
    const std::size_t n = psi.size();
    // Suffix sums of psi and psi^2 give every cut j in O(1).
    std::vector<double> tail1(n + 1, 0.0), tail2(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      tail1[i] = tail1[i + 1] + psi[i];
      tail2[i] = tail2[i + 1] + psi[i] * psi[i];
    }
    std::vector<double> m1(n + 1), m2(n + 1);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= n; ++j) {
      const double denom = static_cast<double>(j) + G * static_cast<double>(n - j);
      m1[j] = ((tail1[0] - tail1[j]) + G * tail1[j]) / denom;
      m2[j] = ((tail2[0] - tail2[j]) + G * tail2[j]) / denom;
      best = std::max(best, m1[j]);
    }
    const double tol = kArgmaxTolerance * std::max(1.0, std::abs(best));
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= n; ++j) {
      if (m1[j] >= best - tol) {
        out.maximizers[s].push_back(j);
        second = std::max(second, m2[j]);
      }
    }
    out.set_mean[s] = best;
    out.set_variance[s] = std::max(0.0, second - best * best);
    out.mean += best;
    out.variance += out.set_variance[s];
  }
  return out;
}

double gaussian_tail(const WorstCaseMoments& moments, double t) {
  if (moments.variance <= 0.0) {
    const double tol = 1e-9 * std::max(1.0, std::abs(moments.mean));
    return t <= moments.mean + tol ? 1.0 : 0.0;
  }
  // Below the worst-case mean the bound cannot reject at any alpha <= 1/2, and the
  // raw normal tail there can shrink as Gamma grows; report 1 to keep it monotone.
  if (t < moments.mean) return 1.0;
  const double z = (t - moments.mean) / std::sqrt(moments.variance);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

DiscreteDistribution finite_sample_law(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                       const SensitivityModel& model, std::size_t budget) {
  check_matched(dataset);
  const double G = model.Gamma();
  DiscreteDistribution total = DiscreteDistribution::point(0.0);
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    auto psi = selected_unit_scores(dataset, spec, s);
    std::sort(psi.begin(), psi.end());
    const double n = static_cast<double>(psi.size());
    // levels[i] with g = number of units scoring at least levels[i].
    std::vector<std::pair<double, double>> levels;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      if (i == 0 || psi[i] != psi[i - 1]) {
        levels.emplace_back(psi[i], static_cast<double>(psi.size() - i));
      }
    }
    auto upper = [&](double g) { return g * G / ((n - g) + g * G); };
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const double here = upper(levels[i].second);
      const double next = i + 1 < levels.size() ? upper(levels[i + 1].second) : 0.0;
      atoms.emplace_back(levels[i].first, std::max(0.0, here - next));
    }
    total = total.convolve(DiscreteDistribution::from_atoms(std::move(atoms)));
    if (total.support_size() > budget) {
      throw BudgetExceeded("finite-sample bound support exceeds " + std::to_string(budget) +
                           " values");
    }
  }
  return total;
}

TailFunction sensitivity_tail(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                              const SensitivityModel& model, SensitivityTail tail) {
  if (tail == SensitivityTail::Gaussian) {
    auto moments = worst_case_moments(dataset, spec, model);
    return [moments = std::move(moments)](double t) { return gaussian_tail(moments, t); };
  }
  auto law = finite_sample_law(dataset, spec, model);
  return [law = std::move(law)](double t) { return law.tail(t); };
}

double gaussian_tail_pvalue(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                            const SensitivityModel& model, TiePolicy policy, std::size_t k,
                            double c, PValueMethod method) {
  const auto tail = sensitivity_tail(dataset, spec, model, SensitivityTail::Gaussian);
  return test_quantile(dataset, spec, policy, k, c, tail, method);
}

double finite_sample_pvalue(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                            const SensitivityModel& model, TiePolicy policy, std::size_t k,
                            double c, PValueMethod method) {
  const auto tail = sensitivity_tail(dataset, spec, model, SensitivityTail::FiniteSample);
  return test_quantile(dataset, spec, policy, k, c, tail, method);
}

QuantileReport sensitivity_confidence(const StratifiedDataset& dataset, const RankScoreSpec& spec,
                                      double alpha, const SensitivityModel& model,
                                      SensitivityTail tail, PValueMethod method,
                                      const InversionOptions& options) {
  check_alpha(alpha);
  if (tail == SensitivityTail::Gaussian && alpha > 0.5) {
    throw DataError("the Gaussian sensitivity tail requires alpha <= 0.5");
  }
  const auto tail_fn = sensitivity_tail(dataset, spec, model, tail);
  return invert_confidence(dataset, spec, alpha, tail_fn, method, options);
}

GammaCutoff gamma_cutoff(const StratifiedDataset& dataset, const RankScoreSpec& spec, double alpha,
                         std::size_t k, double c, SensitivityTail tail, PValueMethod method,
                         double resolution, TiePolicy policy, double max_gamma) {
  check_alpha(alpha);
  if (!(resolution > 0.0)) throw DataError("resolution must be positive");
  check_matched(dataset);
  // The minimized statistic does not depend on Gamma; only the tail does.
  const auto table = build_min_table(dataset, spec, policy, c);
  const double t = k == 0 ? -std::numeric_limits<double>::infinity() : min_statistic(table, k, method);
  auto rejects = [&](double G) {
    if (k == 0) return false;
    return sensitivity_tail(dataset, spec, SensitivityModel(G), tail)(t) <= alpha;
  };

  GammaCutoff out;
  if (!rejects(1.0)) {
    out.below_one = true;
    return out;
  }
  double lo = 1.0;
  double hi = 2.0;
  while (rejects(hi)) {
    lo = hi;
    if (hi >= max_gamma) {
      out.unbounded = true;
      out.gamma = max_gamma;
      return out;
    }
    hi = std::min(max_gamma, hi * 2.0);
  }
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (rejects(mid)) lo = mid;
    else hi = mid;
  }
  out.gamma = lo;
  return out;
}

}  // namespace rankquant
