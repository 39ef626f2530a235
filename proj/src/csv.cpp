#include "rankquant/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace rankquant {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

StratifiedDataset read_csv(std::istream& in, Design design, const std::string& source) {
  auto fail = [&](std::size_t line, const std::string& what) -> DataError {
    return DataError(source + ":" + std::to_string(line) + ": " + what);
  };
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto head = fields(line);
    const char* expected[] = {"stratum", "treated", "outcome"};
    for (std::size_t i = 0; i < head.size(); ++i) {
      if (i >= 3 || head[i] != expected[i]) {
        bool known = head[i] == "stratum" || head[i] == "treated" || head[i] == "outcome";
        throw fail(lineno, known ? "header must be exactly 'stratum,treated,outcome'"
                                 : "unknown column '" + head[i] + "' (expected stratum,treated,outcome)");
      }
    }
    if (head.size() != 3) throw fail(lineno, "header must be exactly 'stratum,treated,outcome'");
    have_header = true;
  }
  if (!have_header) throw DataError(source + ": empty file");

  std::vector<std::string> order;
  std::map<std::string, std::vector<Unit>> groups;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = fields(line);
    if (f.size() != 3) {
      throw fail(lineno, "expected 3 fields, found " + std::to_string(f.size()));
    }
    if (f[0].empty()) throw fail(lineno, "empty stratum label");
    if (f[1] != "0" && f[1] != "1") {
      throw fail(lineno, "treated must be 0 or 1, found '" + f[1] + "'");
    }
    char* end = nullptr;
    errno = 0;
    const double y = std::strtod(f[2].c_str(), &end);
    if (f[2].empty() || *end != '\0' || errno == ERANGE || !std::isfinite(y)) {
      throw fail(lineno, "outcome '" + f[2] + "' is not a finite number");
    }
    auto [it, inserted] = groups.try_emplace(f[0]);
    if (inserted) order.push_back(f[0]);
    it->second.push_back({f[1] == "1" ? 1 : 0, y});
  }
  if (order.empty()) throw DataError(source + ": empty dataset");

  std::vector<Stratum> strata;
  strata.reserve(order.size());
  for (const auto& label : order) strata.emplace_back(label, std::move(groups[label]));
  return StratifiedDataset(std::move(strata), design);
}

StratifiedDataset ingest_csv(const std::string& path, Design design) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return read_csv(in, design, path);
}

void write_csv(std::ostream& out, const StratifiedDataset& dataset) {
  out << "stratum,treated,outcome\n";
  char buf[64];
  for (const auto& st : dataset.strata()) {
    for (const auto& u : st.units()) {
      std::snprintf(buf, sizeof buf, "%.17g", u.outcome);
      out << st.label() << ',' << u.treated << ',' << buf << '\n';
    }
  }
}

}  // namespace rankquant
