#pragma once

#include <istream>
#include <string>

#include "rankquant/dataset.hpp"

namespace rankquant {

/// Reads a `stratum,treated,outcome` CSV. Strata appear in order of first
/// occurrence; units keep file order within their stratum. Errors carry the
/// offending line number.
StratifiedDataset ingest_csv(const std::string& path, Design design = Design::SCRE);
StratifiedDataset read_csv(std::istream& in, Design design = Design::SCRE,
                           const std::string& source = "<input>");

/// Writes a dataset back in the same format.
void write_csv(std::ostream& out, const StratifiedDataset& dataset);

}  // namespace rankquant
