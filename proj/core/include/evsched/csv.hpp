#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evsched::csv {

// Formats a double with enough digits to round-trip exactly, so that
// rewriting a file produced by this writer is byte-identical.
std::string format_double(double v);

class Writer {
 public:
  explicit Writer(const std::string& path);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  // convenience: formats doubles via format_double
  void row_values(const std::vector<double>& values);
  void flush();

 private:
  std::ofstream out_;
  size_t n_columns_ = 0;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // index of a column, -1 when absent
  int column_index(const std::string& name) const;
};

// Strict reader: every row must have exactly as many cells as the header.
// Throws std::runtime_error with the 1-based line number on malformed rows.
Table read_file(const std::string& path);

double parse_double(const std::string& cell, const std::string& context);
long parse_long(const std::string& cell, const std::string& context);

}  // namespace evsched::csv
