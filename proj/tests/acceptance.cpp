// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "rankquant/inference.hpp"
#include "rankquant/knapsack.hpp"
#include "rankquant/min_stat.hpp"
#include "rankquant/null_dist.hpp"
#include "rankquant/sensitivity.hpp"

using namespace rankquant;

namespace {

// Pinned tolerances and time limits.
constexpr double kObjTol = 1e-9;
constexpr double kExactP = 1e-12;
constexpr double kHullTol = 1e-9;
constexpr double kGammaResolution = 0.01;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

int failures = 0;

void criterion(int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out.pass && limit_seconds > 0 && secs >= limit_seconds) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "took %.2f s, limit %.0f s", secs, limit_seconds);
    out.fail(buf);
  }
  if (!out.pass) ++failures;
  std::printf("[%s] %2d %-44s %8.3f s  %s\n", out.pass ? "PASS" : "FAIL", id, name, secs, out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Random custom scores: integer, nondecreasing, one list per stratum size.
RankScoreSpec random_integer_scores(std::mt19937_64& rng, std::size_t max_n) {
  std::map<std::size_t, std::vector<double>> tables;
  std::uniform_int_distribution<int> step(0, 4);
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::vector<double> phi(n);
    double v = 0;
    for (auto& x : phi) x = (v += step(rng));
    tables[n] = phi;
  }
  return RankScoreSpec::custom(tables);
}

std::vector<std::pair<StratifiedDataset, RankScoreSpec>> knapsack_battery() {
  std::mt19937_64 rng(20240601);
  std::vector<std::pair<StratifiedDataset, RankScoreSpec>> out;
  for (int i = 0; i < 240; ++i) {
    auto ds = oracle::random_dataset(rng, 4, 2, 5, 3);
    out.emplace_back(std::move(ds), random_integer_scores(rng, 5));
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace

int main() {
  const auto example = oracle::worked_example();
  const auto h4 = RankScoreSpec::stephenson(4);

  criterion(1, "golden objectives (worked example)", 1.0, [&] {
    Outcome o;
    const double ilp[] = {6, 10, 16, 21, 25, 31, 35, 36, 40};
    const double lp[] = {6, 11, 16, 21, 26, 31, 35, 37.5, 40};
    const double naive[] = {6, 9, 16, 20, 21, 25, 35, 36, 40};
    const auto table = build_min_table(example, h4, TiePolicy::FirstByUnitOrder, 0.0);
    const std::size_t N = table.total_units();
    for (std::size_t cap = 1; cap <= 9; ++cap) {
      const double d = solve_dp_ilp(table, N - cap).gain;
      const double g = solve_greedy_lp(table, N - cap).gain;
      const double n = solve_naive_greedy(table, N - cap).gain;
      if (std::abs(d - ilp[cap - 1]) > kObjTol) o.fail(fmt("ILP at N-k=%g: %g", cap, d));
      if (std::abs(g - lp[cap - 1]) > kObjTol) o.fail(fmt("LP at N-k=%g: %g", cap, g));
      if (std::abs(n - naive[cap - 1]) > kObjTol) o.fail(fmt("naive greedy at N-k=%g: %g", cap, n));
    }
    if (o.pass) o.detail = "27/27 objectives";
    return o;
  });

  criterion(2, "golden p-values (exact null, 8000 draws)", 5.0, [&] {
    Outcome o;
    const auto law = oracle::enumerate_null(example, h4);
    const auto null = exact_null(example, h4);
    double checked = 0;
    for (const auto& kv : law) {
      if (std::abs(null.tail(kv.first) - oracle::tail(law, kv.first)) > kExactP) o.fail("null tail differs from enumeration");
      checked += 1;
    }
    const double base = 40;
    struct Column {
      const char* name;
      double gains[9];
      double printed[9];
    };
    const Column cols[] = {
        {"ILP", {6, 10, 16, 21, 25, 31, 35, 36, 40}, {.11, .21, .47, .69, .84, .95, .98, .99, 1.00}},
        {"LP", {6, 11, 16, 21, 26, 31, 35, 37.5, 40}, {.11, .27, .47, .69, .85, .95, .98, 1.00, 1.00}},
        {"Greedy", {6, 9, 16, 20, 21, 25, 35, 36, 40}, {.11, .15, .47, .57, .63, .79, .98, .99, 1.00}},
        {"GT", {6, 11, 16, 21, 26, 31, 35, 37.5, 40}, {.11, .27, .47, .69, .85, .95, .98, 1.00, 1.00}},
    };
    int match = 0, total = 0;
    std::string misses;
    for (const auto& col : cols) {
      for (int i = 0; i < 9; ++i) {
        const double p = null.tail(base - col.gains[i]);
        const bool ok = std::abs(std::round(p * 100.0) / 100.0 - col.printed[i]) < 1e-9;
        ++total;
        if (ok) ++match;
        else misses += std::string(misses.empty() ? "" : ", ") + col.name + fmt("@%g=%.4f(%.2f)", i + 1, p, col.printed[i]);
      }
    }
    if (match != total) {
      o.fail(std::to_string(match) + "/" + std::to_string(total) + " cells match; printed values are not a " +
             "single tail function (statistic 15 printed as .84 and .79): " + misses);
    } else {
      o.detail = "36/36 cells";
    }
    return o;
  });

  const auto battery = knapsack_battery();

  criterion(3, "DP equals brute force (240 instances)", 30.0, [&] {
    Outcome o;
    std::size_t cases = 0;
    for (const auto& [ds, spec] : battery) {
      const auto table = build_min_table(ds, spec, TiePolicy::FirstByUnitOrder, 0.0);
      const std::size_t N = table.total_units();
      for (std::size_t k = 0; k <= N; ++k, ++cases) {
        const auto dp = solve_dp_ilp(table, k);
        const auto bf = solve_brute_force(table, k);
        if (dp.objective != bf.objective) o.fail(fmt("k=%g: dp %g vs brute force %g", k, dp.objective, bf.objective));
      }
    }
    if (o.pass) o.detail = std::to_string(cases) + " (instance, k) pairs identical";
    return o;
  });

  criterion(4, "LP sandwich; greedy exact for Wilcoxon", 30.0, [&] {
    Outcome o;
    const auto wil = RankScoreSpec::wilcoxon();
    for (const auto& [ds, spec] : battery) {
      const auto table = build_min_table(ds, spec, TiePolicy::FirstByUnitOrder, 0.0);
      const auto wtable = build_min_table(ds, wil, TiePolicy::FirstByUnitOrder, 0.0);
      const std::size_t N = table.total_units();
      for (std::size_t k = 0; k <= N; ++k) {
        if (solve_greedy_lp(table, k).objective > solve_dp_ilp(table, k).objective + kObjTol) o.fail("greedy above DP");
        if (std::abs(solve_greedy_lp(wtable, k).objective - solve_dp_ilp(wtable, k).objective) > kObjTol) {
          o.fail(fmt("Wilcoxon greedy differs from DP at k=%g", k));
        }
      }
    }
    if (o.pass) o.detail = "240 instances, every k, custom and Wilcoxon scores";
    return o;
  });

  criterion(5, "hull transform properties (1000 sequences)", 0, [&] {
    Outcome o;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::uniform_int_distribution<int> len(1, 20);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      std::vector<double> a(len(rng));
      for (auto& x : a) x = u(rng);
      const auto psi = hull_transform(a);
      const auto hull = oracle::concave_majorant(a);
      double sa = 0, sp = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i > 0 && psi[i] > psi[i - 1]) o.fail("output increases");
        sa += a[i];
        sp += psi[i];
        if (sp < sa - kHullTol * std::max(1.0, std::abs(sa))) o.fail("prefix sums do not dominate");
        const double exact = hull[i + 1].convert_to<double>();
        const double err = std::abs(sp - exact) / std::max(1.0, std::abs(exact));
        worst = std::max(worst, err);
        if (err > kHullTol) o.fail(fmt("prefix sum %.17g vs hull %.17g", sp, exact));
      }
    }
    o.detail += fmt("max relative gap to rational hull %.2e", worst);
    return o;
  });

  criterion(6, "exact size control, 3x4 design", 10.0, [&] {
    Outcome o;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst = 0.0;
    for (int design = 0; design < 12; ++design) {
      const double c = design % 3 - 0.5;
      const auto spec = design % 2 ? RankScoreSpec::wilcoxon() : RankScoreSpec::stephenson(2 + design % 3);
      std::vector<std::vector<double>> y0(3, std::vector<double>(4));
      for (auto& row : y0) {
        for (auto& y : row) y = design >= 8 ? std::round(nd(rng)) : nd(rng);  // later designs have ties
      }
      // Reference law depends only on stratum sizes.
      std::vector<Stratum> proto;
      for (int s = 0; s < 3; ++s) proto.emplace_back(std::to_string(s), std::vector<Unit>{{1, 0}, {1, 0}, {0, 0}, {0, 0}});
      const auto null = exact_null(StratifiedDataset(proto), spec);
      double rejections = 0, total = 0;
      oracle::for_each_assignment(StratifiedDataset(proto), [&](const auto& z) {
        std::vector<Stratum> strata;
        for (int s = 0; s < 3; ++s) {
          std::vector<Unit> units;
          for (int i = 0; i < 4; ++i) units.push_back({z[s][i], y0[s][i] + z[s][i] * c});
          strata.emplace_back(std::to_string(s), units);
        }
        const StratifiedDataset ds(strata);
        const double p = test_quantile(ds, spec, TiePolicy::FirstByUnitOrder, ds.total_units(), c, tail_of(null),
                                       PValueMethod::ILP_exact);
        total += 1;
        if (p <= 0.1) rejections += 1;
      });
      worst = std::max(worst, rejections / total);
      if (rejections / total > 0.1 + 1e-12) o.fail(fmt("design %g rejects %.4f", design, rejections / total));
    }
    o.detail += fmt("largest rejection rate %.4f over 12 designs x 216 assignments", worst);
    return o;
  });

  criterion(7, "monotone p-surface and limit shapes", 0, [&] {
    Outcome o;
    std::mt19937_64 rng(7);
    std::size_t surfaces = 0;
    for (int rep = 0; rep < 25; ++rep) {
      const auto ds = oracle::random_dataset(rng, 4, 3, 6);
      const auto spec = rep % 2 ? RankScoreSpec::wilcoxon() : RankScoreSpec::stephenson(3);
      const auto null = exact_null(ds, spec);
      const auto tail = tail_of(null);
      const auto cands = candidate_thresholds(ds);
      std::vector<double> probes{cands.front() - 1};
      for (std::size_t i = 0; i < cands.size(); ++i) {
        probes.push_back(cands[i]);
        probes.push_back(i + 1 < cands.size() ? 0.5 * (cands[i] + cands[i + 1]) : cands[i] + 1);
      }
      std::vector<double> prev;
      for (double c : probes) {
        const auto p = test_all_quantiles(ds, spec, TiePolicy::FirstByUnitOrder, c, tail, PValueMethod::ILP_exact);
        for (std::size_t k = 1; k < p.size(); ++k) {
          if (p[k] > p[k - 1] + 1e-12) o.fail("p increases in k");
          if (!prev.empty() && p[k] < prev[k] - 1e-12) o.fail("p decreases in c");
        }
        prev = p;
        ++surfaces;
        // Confidence set for n(c) is {N - kbar, ..., N}.
        std::size_t kbar = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
          if (p[k] > 0.1) kbar = k;
        }
        for (std::size_t k = 0; k <= kbar; ++k) {
          if (!(p[k] > 0.1)) o.fail("n(c) set has a gap");
        }
        if (count_lower_limit(ds, spec, TiePolicy::FirstByUnitOrder, c, 0.1, tail, PValueMethod::ILP_exact) !=
            ds.total_units() - kbar) {
          o.fail("count limit mismatch");
        }
      }
      const auto report = invert_confidence(ds, spec, 0.1, tail, PValueMethod::ILP_exact);
      for (std::size_t i = 1; i < report.limits.size(); ++i) {
        if (report.limits[i].lower < report.limits[i - 1].lower) o.fail("lower limits decrease in k");
      }
    }
    if (o.pass) o.detail = std::to_string(surfaces) + " p-curves over 25 designs";
    return o;
  });

  criterion(8, "tie-policy bracketing", 0, [&] {
    Outcome o;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> yv(-2, 2);
    for (int rep = 0; rep < 6; ++rep) {
      std::vector<Stratum> strata;
      for (int s = 0; s < 3; ++s) {
        std::vector<Unit> units;
        for (int i = 0; i < 5; ++i) units.push_back({i < 2 + (s + rep) % 2 ? 1 : 0, static_cast<double>(yv(rng))});
        strata.emplace_back(std::to_string(s), units);
      }
      const StratifiedDataset ds(strata);
      const auto spec = RankScoreSpec::stephenson(2 + rep % 2);
      const auto null = exact_null(ds, spec);
      const auto tail = tail_of(null);
      const auto cands = candidate_thresholds(ds);
      const std::size_t N = ds.total_units();
      for (double c : cands) {
        const auto lo = test_all_quantiles(ds, spec, TiePolicy::ControlsFirst, c, tail, PValueMethod::ILP_exact);
        const auto hi = test_all_quantiles(ds, spec, TiePolicy::TreatedFirst, c, tail, PValueMethod::ILP_exact);
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
          const auto mid = test_all_quantiles(permute_units(ds, seed), spec, TiePolicy::FirstByUnitOrder, c, tail,
                                              PValueMethod::ILP_exact);
          for (std::size_t k = 0; k <= N; ++k) {
            if (lo[k] > mid[k] + 1e-12 || mid[k] > hi[k] + 1e-12) o.fail("seeded p outside [p_lower, p_upper]");
          }
        }
        for (double c2 : cands) {
          if (c2 <= c) continue;
          const auto lo2 = test_all_quantiles(ds, spec, TiePolicy::ControlsFirst, c2, tail, PValueMethod::ILP_exact);
          for (std::size_t k = 0; k <= N; ++k) {
            if (hi[k] > lo2[k] + 1e-12) o.fail("p_upper(c) exceeds p_lower(c') for c < c'");
          }
        }
      }
      // Interiors: every open interval between candidates gives the same p under all policies,
      // and the three confidence sets share their infimum.
      const auto report = invert_confidence(ds, spec, 0.2, tail, PValueMethod::ILP_exact);
      for (const auto& lim : report.limits) {
        double inf[3];
        const TiePolicy pol[3] = {TiePolicy::TreatedFirst, TiePolicy::FirstByUnitOrder, TiePolicy::ControlsFirst};
        for (int j = 0; j < 3; ++j) {
          inf[j] = std::numeric_limits<double>::infinity();
          auto in = [&](double c) { return test_quantile(ds, spec, pol[j], lim.k, c, tail, PValueMethod::ILP_exact) > 0.2; };
          if (in(cands.front() - 1)) {
            inf[j] = -std::numeric_limits<double>::infinity();
            continue;
          }
          for (std::size_t i = 0; i < cands.size(); ++i) {
            const double right = i + 1 < cands.size() ? 0.5 * (cands[i] + cands[i + 1]) : cands[i] + 1;
            if (in(cands[i]) || in(right)) {
              inf[j] = cands[i];
              break;
            }
          }
        }
        if (inf[0] != inf[1] || inf[1] != inf[2] || inf[0] != lim.lower) o.fail("confidence-set infima differ");
      }
      for (std::size_t i = 0; i + 1 < cands.size(); ++i) {
        const double c = 0.5 * (cands[i] + cands[i + 1]);
        const auto a = test_all_quantiles(ds, spec, TiePolicy::ControlsFirst, c, tail, PValueMethod::ILP_exact);
        const auto b = test_all_quantiles(ds, spec, TiePolicy::TreatedFirst, c, tail, PValueMethod::ILP_exact);
        if (a != b) o.fail("policies disagree inside an open interval");
      }
    }
    if (o.pass) o.detail = "6 tie-rich designs, 50 seeds each";
    return o;
  });

  criterion(9, "sensitivity reductions", 60.0, [&] {
    Outcome o;
    std::mt19937_64 rng(9);
    // (a) Gamma = 1 on matched pairs gives the randomization p-value.
    for (int rep = 0; rep < 10; ++rep) {
      const auto ds = oracle::random_matched(rng, 10, 2, 0.7);
      const auto spec = RankScoreSpec::wilcoxon();
      const auto null = exact_null(ds, spec);
      for (std::size_t k : {5ul, 12ul, 17ul, 20ul}) {
        for (double c : {-0.5, 0.0, 0.5}) {
          const double a = finite_sample_pvalue(ds, spec, SensitivityModel(1.0), TiePolicy::FirstByUnitOrder, k, c,
                                                PValueMethod::ILP_exact);
          const double b = test_quantile(ds, spec, TiePolicy::FirstByUnitOrder, k, c, tail_of(null), PValueMethod::ILP_exact);
          if (std::abs(a - b) > kExactP) o.fail(fmt("(a) %.15g vs %.15g", a, b));
        }
      }
    }
    // (b) Pair designs: the finite-sample tail is the worst corner tail.
    for (std::size_t P : {3ul, 6ul, 9ul, 12ul}) {
      const auto ds = oracle::random_matched(rng, P, 2, 0.2);
      const auto spec = RankScoreSpec::stephenson(2);
      const std::vector<std::pair<double, double>> scores(P, {0.0, 1.0});
      for (double G : {1.0, 2.0, 5.0}) {
        const auto law = finite_sample_law(ds, spec, SensitivityModel(G));
        for (std::size_t t = 0; t <= P; t += (P >= 9 ? 4 : 1)) {
          const double ref = oracle::pair_corner_worst_tail(scores, G, static_cast<double>(t));
          if (std::abs(law.tail(static_cast<double>(t)) - ref) > kExactP) o.fail(fmt("(b) P=%g Gamma=%g t=%g", P, G, t));
        }
      }
    }
    // (c) Worst-case moments against all confounder corners, n <= 6.
    for (int rep = 0; rep < 60; ++rep) {
      const std::size_t n = 2 + rep % 5;
      auto ds = oracle::random_matched(rng, 2, n, 0.4);
      if (rep % 3 == 0) ds = switch_labels(ds);
      const auto spec = rep % 2 ? RankScoreSpec::stephenson(2 + rep % 4) : RankScoreSpec::wilcoxon();
      for (double G : {1.0, 1.5, 3.0, 8.0}) {
        const auto m = worst_case_moments(ds, spec, SensitivityModel(G));
        for (std::size_t s = 0; s < ds.num_strata(); ++s) {
          const auto ref = oracle::corner_moments(selected_unit_scores(ds, spec, s), G);
          if (std::abs(m.set_mean[s] - ref.mean) > 1e-10 * std::max(1.0, ref.mean)) o.fail("(c) mean");
          if (std::abs(m.set_variance[s] - ref.variance) > 1e-9 * std::max(1.0, ref.variance)) o.fail("(c) variance");
        }
      }
    }
    if (o.pass) o.detail = "Gamma=1 identity; pairs up to 12 vs corners; moments for n <= 6";
    return o;
  });

  criterion(10, "Gamma monotonicity and cutoff search", 0, [&] {
    Outcome o;
    std::mt19937_64 rng(10);
    double worst_gap = 0.0;
    for (int rep = 0; rep < 6; ++rep) {
      const auto ds = oracle::random_matched(rng, 60, 2 + rep % 3, 0.8);
      const auto spec = RankScoreSpec::stephenson(2);
      const std::size_t N = ds.total_units();
      for (auto tail : {SensitivityTail::Gaussian, SensitivityTail::FiniteSample}) {
        for (std::size_t k : {N - 20, N - 5, N}) {
          const auto table = build_min_table(ds, spec, TiePolicy::TreatedFirst, 0.0);
          const double t = min_statistic(table, k, PValueMethod::ILP_exact);
          double prev = 0.0;
          for (double G = 1.0; G <= 6.0; G += 0.25) {
            const double p = sensitivity_tail(ds, spec, SensitivityModel(G), tail)(t);
            if (p < prev - 1e-12) o.fail(fmt("p decreases at Gamma=%g", G));
            prev = p;
          }
          const auto cut = gamma_cutoff(ds, spec, 0.05, k, 0.0, tail, PValueMethod::ILP_exact, kGammaResolution);
          // Dense grid: last Gamma at which the test still rejects.
          double grid = 0.0;
          bool below = true;
          for (double G = 1.0; G <= 60.0; G += 0.001) {
            if (sensitivity_tail(ds, spec, SensitivityModel(G), tail)(t) <= 0.05) {
              grid = G;
              below = false;
            } else {
              break;
            }
          }
          if (below != cut.below_one) o.fail("cutoff disagrees on rejection at Gamma = 1");
          if (!below && !cut.unbounded) {
            worst_gap = std::max(worst_gap, std::abs(grid - cut.gamma));
            if (std::abs(grid - cut.gamma) > kGammaResolution + 0.001) o.fail(fmt("cutoff %g vs grid %g", cut.gamma, grid));
          }
        }
      }
    }
    o.detail += fmt("largest cutoff gap to 0.001 grid %.4f", worst_gap);
    return o;
  });

  criterion(11, "k = N is the constant-effect test", 0, [&] {
    Outcome o;
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
      const auto ds = oracle::random_dataset(rng, 3, 2, 6, 4);
      const auto spec = rep % 2 ? RankScoreSpec::wilcoxon() : RankScoreSpec::stephenson(3);
      const auto null = exact_null(ds, spec);
      const double c = 0.25 * (rep % 7) - 0.75;
      const double p = test_quantile(ds, spec, TiePolicy::FirstByUnitOrder, ds.total_units(), c, tail_of(null),
                                     PValueMethod::ILP_exact);
      const double ref = oracle::constant_effect_frt(ds, spec, c);
      if (std::abs(p - ref) > kExactP) o.fail(fmt("%.15g vs %.15g", p, ref));
    }
    if (o.pass) o.detail = "20 instances";
    return o;
  });

  criterion(12, "byte-identical limits.csv across runs", 0, [&] {
    Outcome o;
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "rankquant_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << "data = " << RANKQUANT_DATA_DIR << "/worked_example.csv\n"
          << "h = 4\nnull = mc\nreps = 20000\nseed = 2024\ntie = first\ntie_seed = 5\nthreads = 3\n";
    }
    for (const char* sub : {"a", "b"}) {
      const std::string cmd = std::string(RANKQUANT_CLI) + " --config " + (dir / "run.cfg").string() +
                              " --output_dir " + (dir / sub).string() + " >/dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) o.fail("CLI run failed");
    }
    const auto a = slurp(dir / "a" / "limits.csv");
    const auto b = slurp(dir / "b" / "limits.csv");
    if (a.empty() || a != b) o.fail("limits.csv differs");
    if (o.pass) o.detail = std::to_string(a.size()) + " bytes identical";
    return o;
  });

  criterion(13, "scale: S=900, n=10, h=3 full inversion", 0, [&] {
    Outcome o;
    std::mt19937_64 rng(13);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<Stratum> strata;
    for (int s = 0; s < 900; ++s) {
      std::vector<int> z{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
      std::shuffle(z.begin(), z.end(), rng);
      std::vector<Unit> units;
      for (int i = 0; i < 10; ++i) units.push_back({z[i], nd(rng)});
      strata.emplace_back(std::to_string(s), units);
    }
    const StratifiedDataset ds(strata);
    const auto spec = RankScoreSpec::stephenson(3);
    // The null is shared by both paths and built outside the timed region.
    const auto null = mc_null(ds, spec, 20000, 13);
    auto timed = [&](PValueMethod m, QuantileReport& out) {
      const auto t0 = std::chrono::steady_clock::now();
      out = invert_confidence(ds, spec, 0.1, tail_of(null), m);
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    QuantileReport dp, gr;
    const double t_dp = timed(PValueMethod::ILP_exact, dp);
    const double t_gr = timed(PValueMethod::LP_conservative, gr);
    std::size_t finite = 0;
    for (std::size_t i = 0; i < dp.limits.size(); ++i) {
      if (gr.limits[i].lower > dp.limits[i].lower) o.fail("greedy limit above DP limit");
      if (i > 0 && dp.limits[i].lower < dp.limits[i - 1].lower) o.fail("DP limits decrease in k");
      if (std::isfinite(dp.limits[i].lower)) ++finite;
    }
    if (dp.limits.size() != ds.total_units()) o.fail("missing ranks");
    if (t_dp >= 60.0) o.fail(fmt("DP inversion took %.1f s", t_dp));
    if (t_gr * 3.0 > t_dp) o.fail(fmt("greedy %.2f s is not 3x faster than DP %.2f s", t_gr, t_dp));
    o.detail += fmt("all %g ranks: DP %.2f s, greedy %.2f s", static_cast<double>(ds.total_units()), t_dp, t_gr);
    o.detail += fmt(" (%.1fx); %g finite limits", t_dp / std::max(t_gr, 1e-9), static_cast<double>(finite));
    return o;
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
