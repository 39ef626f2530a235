#pragma once

#include <string>
#include <vector>

#include "rankquant/config.hpp"
#include "rankquant/dataset.hpp"
#include "rankquant/rank_scores.hpp"

namespace rankquant {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBudget = 3;

struct RunResult {
  int exit_code = kExitOk;
  std::string error;
  std::vector<std::string> warnings;
  std::string report_path;
  std::string limits_path;
};

/// Score specification named by the config (custom tables read from file).
RankScoreSpec make_score_spec(const RunConfig& config, std::size_t num_strata);

/// Ranks of interest: explicit ks plus ceil(q N) for each quantile, sorted and
/// deduplicated.
std::vector<std::size_t> ranks_of_interest(const RunConfig& config, std::size_t total_units);

/// Loads data, runs the configured analysis and writes report.json and
/// limits.csv. Never throws; failures are mapped to exit codes.
RunResult run(const RunConfig& config);

}  // namespace rankquant
