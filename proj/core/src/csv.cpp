#include "evsched/csv.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace evsched::csv {

std::string format_double(double v) {
  char buf[40];
  // %.17g round-trips any finite double; trim to shortest form that
  // still parses back to the same bits.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Writer::Writer(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("csv: cannot open for writing: " + path);
}

void Writer::header(const std::vector<std::string>& columns) {
  n_columns_ = columns.size();
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void Writer::row(const std::vector<std::string>& cells) {
  if (n_columns_ != 0 && cells.size() != n_columns_)
    throw std::runtime_error("csv: row width mismatch");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void Writer::row_values(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

void Writer::flush() { out_.flush(); }

int Table::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

static std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open: " + path);
  Table t;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto cells = split_line(line);
    if (line_no == 1) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      std::ostringstream oss;
      oss << "csv: " << path << ": line " << line_no << ": expected "
          << t.columns.size() << " cells, got " << cells.size();
      throw std::runtime_error(oss.str());
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw std::runtime_error("csv: " + path + ": empty file");
  return t;
}

double parse_double(const std::string& cell, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0' || !std::isfinite(v))
    throw std::runtime_error("csv: " + context + ": not a finite number: '" + cell + "'");
  return v;
}

long parse_long(const std::string& cell, const std::string& context) {
  char* end = nullptr;
  long v = std::strtol(cell.c_str(), &end, 10);
  if (end == cell.c_str() || *end != '\0')
    throw std::runtime_error("csv: " + context + ": not an integer: '" + cell + "'");
  return v;
}

}  // namespace evsched::csv
