#include "rankquant/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace rankquant {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d)) {
    throw ConfigError("setting '" + key + "': '" + v + "' is not a finite number");
  }
  return d;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("setting '" + key + "': '" + v + "' is not a nonnegative integer");
  }
  errno = 0;
  const auto x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("setting '" + key + "': '" + v + "' is too large");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("setting '" + key + "': '" + v + "' is not a boolean");
}

std::string one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string names;
  for (const char* a : allowed) {
    if (v == a) return v;
    names += names.empty() ? a : std::string(", ") + a;
  }
  throw ConfigError("setting '" + key + "': '" + v + "' is not one of " + names);
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F parse) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<T>(parse(key, item)));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) out += fmt(xs[i]);
    else out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key == "data") cfg.data = v;
  else if (key == "analysis") {
    const auto a = one_of(key, v, {"scre", "sensitivity", "two_sided"});
    cfg.analysis = a == "scre" ? Analysis::SCRE : a == "sensitivity" ? Analysis::Sensitivity : Analysis::TwoSided;
  } else if (key == "design") {
    cfg.design = one_of(key, v, {"scre", "matched"}) == "scre" ? Design::SCRE : Design::MatchedSets;
  } else if (key == "score") cfg.score = one_of(key, v, {"wilcoxon", "stephenson", "custom"});
  else if (key == "h") cfg.h = parse_list<int>(key, v, parse_unsigned);
  else if (key == "score_file") cfg.score_file = v;
  else if (key == "alpha") cfg.alpha = parse_double(key, v);
  else if (key == "method") cfg.method = one_of(key, v, {"ilp", "lp"});
  else if (key == "tie") cfg.tie = one_of(key, v, {"first", "controls_first", "treated_first"});
  else if (key == "tie_seed") cfg.tie_seed = parse_unsigned(key, v);
  else if (key == "switch_labels") cfg.switch_labels = parse_bool(key, v);
  else if (key == "switch_mask") cfg.switch_mask = parse_list<int>(key, v, parse_unsigned);
  else if (key == "null") cfg.null = one_of(key, v, {"exact", "mc"});
  else if (key == "reps") cfg.reps = parse_unsigned(key, v);
  else if (key == "seed") cfg.seed = parse_unsigned(key, v);
  else if (key == "budget") cfg.budget = parse_unsigned(key, v);
  else if (key == "gamma") cfg.gammas = parse_list<double>(key, v, parse_double);
  else if (key == "tail") cfg.tail = one_of(key, v, {"auto", "gaussian", "finite"});
  else if (key == "gaussian_min_sets") cfg.gaussian_min_sets = parse_unsigned(key, v);
  else if (key == "ks") cfg.ks = parse_list<std::size_t>(key, v, parse_unsigned);
  else if (key == "quantiles") cfg.quantiles = parse_list<double>(key, v, parse_double);
  else if (key == "all_ranks") cfg.all_ranks = parse_bool(key, v);
  else if (key == "count_thresholds") cfg.count_thresholds = parse_list<double>(key, v, parse_double);
  else if (key == "c") cfg.c = parse_double(key, v);
  else if (key == "gamma_resolution") cfg.gamma_resolution = parse_double(key, v);
  else if (key == "output_dir") cfg.output_dir = v;
  else if (key == "report") cfg.report_path = v;
  else if (key == "limits") cfg.limits_path = v;
  else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_unsigned(key, v));
  else throw ConfigError("unknown setting '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void check_config(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("no data file given (set 'data')");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (cfg.null == "mc" && !cfg.seed) throw ConfigError("the Monte Carlo null requires a seed");
  if (cfg.null == "mc" && cfg.reps == 0) throw ConfigError("reps must be positive");
  if (cfg.score == "custom" && cfg.score_file.empty()) throw ConfigError("custom scores need 'score_file'");
  if (cfg.score == "stephenson") {
    if (cfg.h.empty()) throw ConfigError("stephenson scores need 'h'");
    for (int h : cfg.h) {
      if (h < 2) throw ConfigError("stephenson h must be at least 2");
    }
  }
  for (double g : cfg.gammas) {
    if (!(g >= 1.0)) throw ConfigError("every gamma must be >= 1");
  }
  if (cfg.analysis == Analysis::Sensitivity && cfg.gammas.empty()) throw ConfigError("no gamma given");
  if (cfg.analysis == Analysis::Sensitivity && cfg.tail == "gaussian" && cfg.alpha > 0.5) {
    throw ConfigError("the gaussian tail requires alpha <= 0.5");
  }
  for (double q : cfg.quantiles) {
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("quantiles must lie in (0, 1]");
  }
  if (!(cfg.gamma_resolution > 0.0)) throw ConfigError("gamma_resolution must be positive");
  if (cfg.analysis == Analysis::TwoSided && cfg.ks.empty() && cfg.quantiles.empty()) {
    throw ConfigError("the two-sided test needs a rank via 'ks' or 'quantiles'");
  }
}

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream o;
  const char* analysis = cfg.analysis == Analysis::SCRE ? "scre"
                         : cfg.analysis == Analysis::Sensitivity ? "sensitivity"
                                                                 : "two_sided";
  o << "analysis=" << analysis << '\n'
    << "design=" << (cfg.design == Design::SCRE ? "scre" : "matched") << '\n'
    << "score=" << cfg.score << '\n'
    << "h=" << join(cfg.h) << '\n'
    << "score_file=" << cfg.score_file << '\n'
    << "alpha=" << fmt(cfg.alpha) << '\n'
    << "method=" << cfg.method << '\n'
    << "tie=" << cfg.tie << '\n'
    << "tie_seed=" << (cfg.tie_seed ? std::to_string(*cfg.tie_seed) : "") << '\n'
    << "switch_labels=" << (cfg.switch_labels ? "true" : "false") << '\n'
    << "switch_mask=" << join(cfg.switch_mask) << '\n'
    << "null=" << cfg.null << '\n'
    << "reps=" << cfg.reps << '\n'
    << "seed=" << (cfg.seed ? std::to_string(*cfg.seed) : "") << '\n'
    << "budget=" << cfg.budget << '\n'
    << "gamma=" << join(cfg.gammas) << '\n'
    << "tail=" << cfg.tail << '\n'
    << "gaussian_min_sets=" << cfg.gaussian_min_sets << '\n'
    << "ks=" << join(cfg.ks) << '\n'
    << "quantiles=" << join(cfg.quantiles) << '\n'
    << "all_ranks=" << (cfg.all_ranks ? "true" : "false") << '\n'
    << "count_thresholds=" << join(cfg.count_thresholds) << '\n'
    << "c=" << fmt(cfg.c) << '\n'
    << "gamma_resolution=" << fmt(cfg.gamma_resolution) << '\n';
  return o.str();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RANKQUANT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace rankquant
