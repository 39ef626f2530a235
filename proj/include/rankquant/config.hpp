#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankquant/dataset.hpp"

namespace rankquant {

inline constexpr const char* kVersion = "0.1.0";

enum class Analysis { SCRE, Sensitivity, TwoSided };

/// Everything one batch run needs. Built from a flat key=value file, then
/// overridden by command-line flags carrying the same keys.
struct RunConfig {
  std::string data;  // CSV path
  Analysis analysis = Analysis::SCRE;
  Design design = Design::SCRE;

  std::string score = "stephenson";  // wilcoxon | stephenson | custom
  std::vector<int> h{2};             // one value, or one per stratum
  std::string score_file;            // custom scores, one list per line

  double alpha = 0.1;
  std::string method = "ilp";  // ilp | lp
  std::string tie = "first";   // first | controls_first | treated_first
  std::optional<std::uint64_t> tie_seed;

  bool switch_labels = false;
  std::vector<int> switch_mask;  // per stratum; overrides switch_labels

  std::string null = "exact";  // exact | mc
  std::size_t reps = 10000;
  std::optional<std::uint64_t> seed;
  std::size_t budget = 1'000'000;

  std::vector<double> gammas{1.0};
  std::string tail = "auto";  // auto | gaussian | finite
  std::size_t gaussian_min_sets = 100;

  std::vector<std::size_t> ks;        // ranks of interest
  std::vector<double> quantiles;      // fractions in (0, 1], mapped to ceil(q N)
  bool all_ranks = true;              // invert for every k, not just the ones above
  std::vector<double> count_thresholds;
  double c = 0.0;  // threshold for the p-value curve, two-sided test and Gamma cutoffs
  double gamma_resolution = 0.01;

  std::string output_dir = ".";
  std::string report_path;  // default output_dir/report.json
  std::string limits_path;  // default output_dir/limits.csv
  unsigned threads = 0;     // 0 = environment or machine parallelism
};

/// Raised for unknown keys or unparsable values.
class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

/// Applies one key=value setting; throws ConfigError.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads a key=value file; '#' starts a comment, blank lines are skipped.
void load_config_file(RunConfig& config, const std::string& path);

/// Checks cross-field invariants; throws ConfigError.
void check_config(const RunConfig& config);

/// Canonical key=value text of every setting that affects results.
std::string canonical_config(const RunConfig& config);

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Thread count: explicit setting, else RANKQUANT_THREADS, else the machine's.
unsigned resolve_threads(unsigned requested);

}  // namespace rankquant
