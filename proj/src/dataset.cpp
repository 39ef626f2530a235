#include "rankquant/dataset.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "rankquant/random.hpp"

namespace rankquant {

Stratum::Stratum(std::string label, std::vector<Unit> units)
    : label_(std::move(label)), units_(std::move(units)) {
  for (const auto& u : units_) {
    if (u.treated != 0 && u.treated != 1) {
      throw DataError("assignment must be 0 or 1 in stratum '" + label_ + "'");
    }
    treated_count_ += static_cast<std::size_t>(u.treated);
  }
}

std::vector<double> Stratum::outcomes() const {
  std::vector<double> y;
  y.reserve(units_.size());
  for (const auto& u : units_) y.push_back(u.outcome);
  return y;
}

std::vector<int> Stratum::assignments() const {
  std::vector<int> z;
  z.reserve(units_.size());
  for (const auto& u : units_) z.push_back(u.treated);
  return z;
}

StratifiedDataset::StratifiedDataset(std::vector<Stratum> strata, Design design)
    : strata_(std::move(strata)), design_(design) {
  for (const auto& s : strata_) total_units_ += s.size();
}

std::size_t StratifiedDataset::total_treated() const {
  std::size_t m = 0;
  for (const auto& s : strata_) m += s.treated_count();
  return m;
}

StratifiedDataset StratifiedDataset::with_design(Design design) const {
  StratifiedDataset out = *this;
  out.design_ = design;
  return out;
}

bool ValidationReport::valid() const {
  for (const auto& i : issues) {
    if (i.severity == Severity::Error && !i.matched_set_rule) return false;
  }
  return true;
}

bool ValidationReport::valid_for_sensitivity() const {
  for (const auto& i : issues) {
    if (i.severity == Severity::Error || i.matched_set_rule) return false;
  }
  return true;
}

bool one_treated_or_one_control(const Stratum& stratum) {
  return stratum.treated_count() == 1 || stratum.control_count() == 1;
}

ValidationReport validate(const StratifiedDataset& dataset) {
  ValidationReport report;
  if (dataset.num_strata() == 0) {
    report.issues.push_back({Severity::Error, std::nullopt, "dataset has no strata", false});
  }
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    const auto& st = dataset.stratum(s);
    if (st.size() == 0) {
      report.issues.push_back({Severity::Error, s, "stratum '" + st.label() + "' is empty", false});
      continue;
    }
    for (const auto& u : st.units()) {
      if (!std::isfinite(u.outcome)) {
        report.issues.push_back(
            {Severity::Error, s, "stratum '" + st.label() + "' has a non-finite outcome", false});
        break;
      }
    }
    if (dataset.design() == Design::MatchedSets && !one_treated_or_one_control(st)) {
      // Blocks sensitivity analysis only; randomization inference is fine.
      report.issues.push_back({Severity::Warning, s,
                               "matched set '" + st.label() +
                                   "' has neither exactly one treated nor exactly one control unit",
                               true});
    }
  }
  return report;
}

StratifiedDataset switch_labels(const StratifiedDataset& dataset) {
  return switch_labels(dataset, std::vector<bool>(dataset.num_strata(), true));
}

StratifiedDataset switch_labels(const StratifiedDataset& dataset, const std::vector<bool>& mask) {
  if (mask.size() != dataset.num_strata()) {
    throw DataError("label-switch mask length does not match the number of strata");
  }
  std::vector<Stratum> strata;
  strata.reserve(dataset.num_strata());
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    const auto& st = dataset.stratum(s);
    if (!mask[s]) {
      strata.push_back(st);
      continue;
    }
    std::vector<Unit> units = st.units();
    for (auto& u : units) {
      u.treated = 1 - u.treated;
      u.outcome = -u.outcome;
    }
    strata.emplace_back(st.label(), std::move(units));
  }
  return StratifiedDataset(std::move(strata), dataset.design());
}

StratifiedDataset negate_outcomes(const StratifiedDataset& dataset) {
  std::vector<Stratum> strata;
  strata.reserve(dataset.num_strata());
  for (const auto& st : dataset.strata()) {
    std::vector<Unit> units = st.units();
    for (auto& u : units) u.outcome = -u.outcome;
    strata.emplace_back(st.label(), std::move(units));
  }
  return StratifiedDataset(std::move(strata), dataset.design());
}

StratifiedDataset permute_units(const StratifiedDataset& dataset, std::uint64_t seed) {
  std::vector<Stratum> strata;
  strata.reserve(dataset.num_strata());
  for (std::size_t s = 0; s < dataset.num_strata(); ++s) {
    const auto& st = dataset.stratum(s);
    std::vector<Unit> units = st.units();
    auto rng = make_stream(seed, s);
    for (std::size_t i = units.size(); i > 1; --i) {
      std::swap(units[i - 1], units[uniform_below(rng, i)]);
    }
    strata.emplace_back(st.label(), std::move(units));
  }
  return StratifiedDataset(std::move(strata), dataset.design());
}

}  // namespace rankquant
