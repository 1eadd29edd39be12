#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "regulab/common.hpp"

namespace regulab {

/// Formats a double with 17 significant digits — enough to round-trip IEEE
/// binary64 exactly, so rerunning a pipeline reproduces files byte-for-byte.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<double> cells;  // row-major

  std::size_t cols() const { return header.size(); }
  std::size_t rows() const { return header.empty() ? 0 : cells.size() / header.size(); }
  double at(std::size_t r, std::size_t c) const { return cells[r * cols() + c]; }

  /// Column index by name; throws config_error when absent.
  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw config_error("csv: missing column '" + name + "'");
  }

  /// Column values by name; throws config_error when absent.
  std::vector<double> values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
  }
};

/// Renders a numeric table to CSV text (full-precision floats).
inline std::string render_csv(const std::vector<std::string>& header,
                              const std::vector<double>& cells) {
  if (header.empty() || cells.size() % header.size() != 0)
    throw std::invalid_argument("render_csv: cells not a multiple of column count");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ", ";
    out += header[c];
  }
  out += "\n";
  const std::size_t cols = header.size();
  for (std::size_t i = 0; i < cells.size(); i += cols) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out += ", ";
      out += format_full(cells[i + c]);
    }
    out += "\n";
  }
  return out;
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw config_error("write failed for '" + path + "'");
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<double>& cells) {
  write_text_file(path, render_csv(header, cells));
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("read_csv: cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw config_error("read_csv: empty file '" + path + "'");
  std::stringstream hs(line);
  std::string tok;
  while (std::getline(hs, tok, ',')) {
    const auto a = tok.find_first_not_of(" \t\r");
    const auto b = tok.find_last_not_of(" \t\r");
    table.header.push_back(a == std::string::npos ? "" : tok.substr(a, b - a + 1));
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ls(line);
    std::size_t count = 0;
    while (std::getline(ls, tok, ',')) {
      try {
        table.cells.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw config_error("read_csv: bad number at " + path + ":" + std::to_string(lineno));
      }
      ++count;
    }
    if (count != table.header.size())
      throw config_error("read_csv: ragged row at " + path + ":" + std::to_string(lineno));
  }
  return table;
}

}  // namespace regulab
