#include "rankquant/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rankquant/csv.hpp"
#include "rankquant/inference.hpp"
#include "rankquant/null_dist.hpp"
#include "rankquant/sensitivity.hpp"

namespace rankquant {

namespace {

using nlohmann::ordered_json;

// JSON has no infinities: -inf becomes null and +inf the string "inf".
ordered_json limit_value(double v) {
  if (v == -std::numeric_limits<double>::infinity()) return nullptr;
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  return v;
}

std::string csv_number(double v) {
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

TiePolicy tie_policy(const RunConfig& cfg) {
  if (cfg.tie == "controls_first") return TiePolicy::ControlsFirst;
  if (cfg.tie == "treated_first") return TiePolicy::TreatedFirst;
  return TiePolicy::FirstByUnitOrder;
}

const char* method_name(PValueMethod m) {
  return m == PValueMethod::ILP_exact ? "ilp" : "lp";
}

ordered_json limits_json(const QuantileReport& report) {
  ordered_json limits = ordered_json::array();
  for (const auto& lim : report.limits) {
    limits.push_back({{"k", lim.k},
                      {"lower", limit_value(lim.lower)},
                      {"includes_lower_treated_first", lim.included_upper_p},
                      {"includes_lower_unit_order", lim.included_seeded_p},
                      {"includes_lower_controls_first", lim.included_lower_p}});
  }
  ordered_json counts = ordered_json::array();
  for (const auto& cl : report.count_limits) counts.push_back({{"c", cl.c}, {"n_lower", cl.lower}});
  return {{"limits", limits}, {"count_limits", counts}};
}

ordered_json pvalue_curve(const StratifiedDataset& ds, const RankScoreSpec& spec, TiePolicy policy,
                          double c, const TailFunction& tail, PValueMethod method,
                          const NullDistribution* null) {
  const auto table = build_min_table(ds, spec, policy, c);
  const auto stats = min_statistics_all_k(table, method);
  const auto lower = test_all_quantiles(ds, spec, TiePolicy::ControlsFirst, c, tail, method);
  const auto upper = test_all_quantiles(ds, spec, TiePolicy::TreatedFirst, c, tail, method);
  ordered_json rows = ordered_json::array();
  for (std::size_t k = 1; k < stats.size(); ++k) {
    const double p = tail(stats[k]);
    ordered_json row = {{"k", k},
                        {"n_minus_k", stats.size() - 1 - k},
                        {"min_statistic", stats[k]},
                        {"p_value", p},
                        {"p_lower", lower[k]},
                        {"p_upper", upper[k]}};
    if (null && null->mode() == NullMode::MonteCarlo) row["standard_error"] = null->standard_error(p);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace

RankScoreSpec make_score_spec(const RunConfig& cfg, std::size_t num_strata) {
  if (cfg.score == "wilcoxon") return RankScoreSpec::wilcoxon();
  if (cfg.score == "stephenson") {
    if (cfg.h.size() == 1) return RankScoreSpec::stephenson(cfg.h.front());
    if (cfg.h.size() != num_strata) {
      throw ConfigError("'h' lists " + std::to_string(cfg.h.size()) + " values for " +
                        std::to_string(num_strata) + " strata");
    }
    return RankScoreSpec::stephenson(cfg.h);
  }
  std::ifstream in(cfg.score_file);
  if (!in) throw ConfigError("cannot open score file '" + cfg.score_file + "'");
  std::map<std::size_t, std::vector<double>> tables;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
      if (end == item.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ConfigError(cfg.score_file + ":" + std::to_string(lineno) + ": bad score '" + item + "'");
      }
      row.push_back(v);
    }
    tables[row.size()] = std::move(row);
  }
  return RankScoreSpec::custom(std::move(tables));
}

std::vector<std::size_t> ranks_of_interest(const RunConfig& cfg, std::size_t N) {
  std::vector<std::size_t> ks;
  for (auto k : cfg.ks) {
    if (k < 1 || k > N) throw ConfigError("rank " + std::to_string(k) + " is outside 1.." + std::to_string(N));
    ks.push_back(k);
  }
  for (double q : cfg.quantiles) {
    const double scaled = q * static_cast<double>(N);
    // Guard against q*N landing a hair above an integer.
    auto k = static_cast<std::size_t>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled)));
    ks.push_back(std::clamp<std::size_t>(k, 1, N));
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

RunResult run(const RunConfig& cfg) {
  RunResult result;
  const auto started = std::chrono::steady_clock::now();
  try {
    check_config(cfg);
    const Design design = cfg.analysis == Analysis::Sensitivity ? Design::MatchedSets : cfg.design;
    StratifiedDataset ds = ingest_csv(cfg.data, design);
    const std::string data_hash = [&] {
      std::ostringstream o;
      write_csv(o, ds);
      return fnv1a_hex(o.str());
    }();

    const bool switching = cfg.switch_labels || !cfg.switch_mask.empty();
    if (!cfg.switch_mask.empty()) {
      if (cfg.switch_mask.size() != ds.num_strata()) {
        throw ConfigError("switch_mask has " + std::to_string(cfg.switch_mask.size()) + " entries for " +
                          std::to_string(ds.num_strata()) + " strata");
      }
      ds = switch_labels(ds, std::vector<bool>(cfg.switch_mask.begin(), cfg.switch_mask.end()));
    } else if (cfg.switch_labels) {
      ds = switch_labels(ds);
    }
    if (cfg.tie == "first" && cfg.tie_seed) ds = permute_units(ds, *cfg.tie_seed);

    const auto report = validate(ds);
    std::string problems;
    for (const auto& issue : report.issues) {
      const bool blocking = issue.severity == Severity::Error ||
                            (issue.matched_set_rule && cfg.analysis == Analysis::Sensitivity);
      if (blocking) problems += (problems.empty() ? "" : "; ") + issue.message;
      else result.warnings.push_back(issue.message);
    }
    if (!problems.empty()) throw DataError(problems);
    if (!switching && controls_outnumber_treated(ds)) {
      result.warnings.push_back(
          "controls outnumber treated units; switching treatment labels and outcome signs "
          "(switch_labels = true) usually gives more informative limits");
    }

    const auto spec = make_score_spec(cfg, ds.num_strata());
    const PValueMethod method = cfg.method == "ilp" ? PValueMethod::ILP_exact : PValueMethod::LP_conservative;
    const TiePolicy policy = tie_policy(cfg);
    const unsigned threads = resolve_threads(cfg.threads);
    const std::size_t N = ds.total_units();
    const auto ks = ranks_of_interest(cfg, N);

    InversionOptions options;
    if (!cfg.all_ranks) {
      if (ks.empty()) throw ConfigError("all_ranks = false needs 'ks' or 'quantiles'");
      options.ks = ks;
    }
    options.count_thresholds = cfg.count_thresholds;
    options.threads = threads;

    ordered_json out;
    out["tool"] = {{"name", "rankquant"}, {"version", kVersion}};
    const char* analysis_name = cfg.analysis == Analysis::SCRE ? "scre"
                                : cfg.analysis == Analysis::Sensitivity ? "sensitivity"
                                                                        : "two_sided";
    out["analysis"] = analysis_name;
    out["dataset"] = {{"path", cfg.data},
                      {"strata", ds.num_strata()},
                      {"units", N},
                      {"treated", ds.total_treated()},
                      {"controls", ds.total_controls()},
                      {"labels_switched", switching}};
    out["alpha"] = cfg.alpha;
    out["method"] = method_name(method);
    out["tie"] = cfg.tie;
    out["c"] = cfg.c;

    std::string limits_csv;
    if (cfg.analysis == Analysis::Sensitivity) {
      std::string tail_name = cfg.tail;
      if (tail_name == "auto") tail_name = ds.num_strata() >= cfg.gaussian_min_sets ? "gaussian" : "finite";
      if (tail_name == "gaussian" && cfg.alpha > 0.5) throw ConfigError("the gaussian tail requires alpha <= 0.5");
      const SensitivityTail tail = tail_name == "gaussian" ? SensitivityTail::Gaussian : SensitivityTail::FiniteSample;
      out["null"] = {{"mode", "sensitivity"}, {"tail", tail_name}};
      limits_csv = "k,lower_limit,gamma\n";
      ordered_json per_gamma = ordered_json::array();
      for (double G : cfg.gammas) {
        const SensitivityModel model(G);
        const auto tail_fn = sensitivity_tail(ds, spec, model, tail);
        const auto q = invert_confidence(ds, spec, cfg.alpha, tail_fn, method, options);
        ordered_json entry = {{"gamma", G}};
        const auto lj = limits_json(q);
        entry["limits"] = lj["limits"];
        entry["count_limits"] = lj["count_limits"];
        entry["pvalues"] = pvalue_curve(ds, spec, policy, cfg.c, tail_fn, method, nullptr);
        per_gamma.push_back(std::move(entry));
        for (const auto& lim : q.limits) {
          limits_csv += std::to_string(lim.k) + "," + csv_number(lim.lower) + "," + csv_number(G) + "\n";
        }
      }
      out["results"] = per_gamma;
      ordered_json cutoffs = ordered_json::array();
      for (auto k : ks) {
        const auto cut = gamma_cutoff(ds, spec, cfg.alpha, k, cfg.c, tail, method, cfg.gamma_resolution, policy);
        ordered_json row = {{"k", k}, {"c", cfg.c}};
        if (cut.below_one) row["gamma_cutoff"] = "<1";
        else if (cut.unbounded) row["gamma_cutoff"] = ">" + csv_number(cut.gamma);
        else row["gamma_cutoff"] = std::round(cut.gamma * 100.0) / 100.0;
        cutoffs.push_back(std::move(row));
      }
      out["gamma_cutoffs"] = cutoffs;
    } else {
      NullDistribution null = cfg.null == "exact"
                                  ? exact_null(ds, spec, cfg.budget)
                                  : mc_null(ds, spec, cfg.reps, *cfg.seed, threads);
      const auto tail_fn = tail_of(null);
      ordered_json nj = {{"mode", cfg.null}};
      if (cfg.null == "mc") {
        nj["reps"] = cfg.reps;
        nj["seed"] = *cfg.seed;
      } else {
        nj["support_size"] = null.law().support_size();
      }
      out["null"] = nj;
      const auto q = invert_confidence(ds, spec, cfg.alpha, tail_fn, method, options);
      const auto lj = limits_json(q);
      out["limits"] = lj["limits"];
      out["count_limits"] = lj["count_limits"];
      out["pvalues"] = pvalue_curve(ds, spec, policy, cfg.c, tail_fn, method, &null);
      limits_csv = "k,lower_limit\n";
      for (const auto& lim : q.limits) limits_csv += std::to_string(lim.k) + "," + csv_number(lim.lower) + "\n";
      if (cfg.analysis == Analysis::TwoSided) {
        ordered_json tests = ordered_json::array();
        for (auto k : ks) {
          const auto r = two_sided_test(ds, spec, policy, k, cfg.c, cfg.alpha, tail_fn, method);
          tests.push_back({{"k", k}, {"c", cfg.c}, {"p_right", r.p_right}, {"p_left", r.p_left}, {"reject", r.reject}});
        }
        out["two_sided"] = tests;
      }
    }

    out["warnings"] = result.warnings;
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out["provenance"] = {{"config_hash", fnv1a_hex(canonical_config(cfg))},
                         {"data_hash", data_hash},
                         {"seed", cfg.seed ? ordered_json(*cfg.seed) : ordered_json(nullptr)},
                         {"tie_seed", cfg.tie_seed ? ordered_json(*cfg.tie_seed) : ordered_json(nullptr)},
                         {"method", method_name(method)},
                         {"threads", threads},
                         {"runtime_seconds", runtime}};

    const std::filesystem::path dir(cfg.output_dir);
    result.report_path = cfg.report_path.empty() ? (dir / "report.json").string() : cfg.report_path;
    result.limits_path = cfg.limits_path.empty() ? (dir / "limits.csv").string() : cfg.limits_path;
    write_text(result.report_path, out.dump(2) + "\n");
    write_text(result.limits_path, limits_csv);
  } catch (const BudgetExceeded& e) {
    result.exit_code = kExitBudget;
    result.error = e.what();
  } catch (const DataError& e) {
    result.exit_code = kExitValidation;
    result.error = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitInternal;
    result.error = e.what();
  }
  return result;
}

}  // namespace rankquant
