#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spn/data.hpp"
#include "spn/format.hpp"
#include "spn/leaf_family.hpp"

namespace spn {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses comma-separated numeric rows. Empty cells and "nan" (any case) are
/// missing. Blank lines are skipped.
inline DataMatrix read_csv(std::istream& in, bool has_header = false) {
  DataMatrix out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  std::vector<double> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (has_header && first) {
      first = false;
      continue;
    }
    first = false;
    cells.clear();
    std::string_view rest = line;
    std::size_t col = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = detail::trim(rest.substr(0, comma));
      if (cell.empty() || detail::iequals(cell, "nan")) {
        cells.push_back(kMissing);
      } else {
        double v = 0.0;
        const std::string_view body = cell.front() == '+' ? cell.substr(1) : cell;
        const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
        if (ec != std::errc() || ptr != body.data() + body.size())
          throw data_error("csv line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                           ": '" + std::string(cell) + "' is not a number");
        cells.push_back(v);
      }
      ++col;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (out.rows() == 0) width = cells.size();
    if (cells.size() != width)
      throw data_error("csv line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " cells, found " + std::to_string(cells.size()));
    out.append_row(cells);
  }
  return out;
}

inline DataMatrix read_csv_text(const std::string& text, bool has_header = false) {
  std::istringstream in(text);
  return read_csv(in, has_header);
}

inline DataMatrix read_csv_file(const std::string& path, bool has_header = false) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file '" + path + "'");
  return read_csv(in, has_header);
}

/// Writes rows with `decimals` fixed digits; missing cells are written as "nan".
inline void write_csv(std::ostream& out, const DataMatrix& data, int decimals = 6) {
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (c) out << ',';
      out << format_fixed(data(r, c), decimals);
    }
    out << '\n';
  }
}

}  // namespace spn
