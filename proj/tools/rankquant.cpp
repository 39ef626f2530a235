#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankquant/config.hpp"
#include "rankquant/runner.hpp"

namespace {

struct Flag {
  const char* key;
  const char* help;
};

// Every config-file key is also a flag of the same name.
const Flag kFlags[] = {
    {"data", "CSV with columns stratum,treated,outcome"},
    {"analysis", "scre | sensitivity | two_sided"},
    {"design", "scre | matched"},
    {"score", "wilcoxon | stephenson | custom"},
    {"h", "Stephenson order: one value or one per stratum (comma separated)"},
    {"score_file", "custom scores: one comma-separated list per stratum size"},
    {"alpha", "significance level in (0, 1)"},
    {"method", "ilp (exact) | lp (greedy relaxation, conservative)"},
    {"tie", "first | controls_first | treated_first"},
    {"tie_seed", "seed for shuffling units before 'first' tie breaking"},
    {"switch_labels", "switch treatment labels and outcome signs in every stratum"},
    {"switch_mask", "per-stratum 0/1 list of strata to switch"},
    {"null", "exact | mc"},
    {"reps", "Monte Carlo draws"},
    {"seed", "Monte Carlo seed"},
    {"budget", "largest exact null support before giving up (exit 3)"},
    {"gamma", "sensitivity bias bounds (comma separated)"},
    {"tail", "auto | gaussian | finite"},
    {"gaussian_min_sets", "with tail=auto, use the gaussian tail from this many sets"},
    {"ks", "ranks of interest (comma separated)"},
    {"quantiles", "quantiles of interest in (0, 1] (comma separated)"},
    {"all_ranks", "invert for every rank (true) or only the ranks of interest"},
    {"count_thresholds", "thresholds c for lower limits on n(c)"},
    {"c", "threshold for the p-value curve, two-sided tests and gamma cutoffs"},
    {"gamma_resolution", "bisection resolution for gamma cutoffs"},
    {"output_dir", "directory for report.json and limits.csv"},
    {"report", "report.json path"},
    {"limits", "limits.csv path"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous inference for quantiles of individual treatment effects"};
  // "--h" is the Stephenson order, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string("rankquant ") + rankquant::kVersion);

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> values;
  for (const auto& f : kFlags) app.add_option(std::string("--") + f.key, values[f.key], f.help);
  unsigned threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (default: RANKQUANT_THREADS, else machine parallelism)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rankquant::kExitValidation;
  }

  rankquant::RunConfig config;
  try {
    if (!config_path.empty()) rankquant::load_config_file(config, config_path);
    for (const auto& f : kFlags) {
      if (app.count(std::string("--") + f.key) > 0) rankquant::apply_setting(config, f.key, values[f.key]);
    }
    if (threads > 0) config.threads = threads;
  } catch (const rankquant::ConfigError& e) {
    std::cerr << "rankquant: " << e.what() << '\n';
    return rankquant::kExitValidation;
  }

  const auto result = rankquant::run(config);
  for (const auto& w : result.warnings) std::cerr << "rankquant: warning: " << w << '\n';
  if (result.exit_code != rankquant::kExitOk) {
    std::cerr << "rankquant: error: " << result.error << '\n';
    return result.exit_code;
  }
  std::cout << "wrote " << result.report_path << " and " << result.limits_path << '\n';
  return 0;
}
