#pragma once

#include <charconv>
#include <string>
#include <vector>

namespace mct {

// Shortest decimal form that round-trips the exact double value.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // NaN for unparsable cells

  int column(const std::string& name) const;  // -1 when absent
};

// Parses a comma-separated numeric table with a header line. Blank lines are
// skipped; non-numeric cells become NaN.
CsvTable read_csv(const std::string& path);

}  // namespace mct
