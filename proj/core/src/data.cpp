#include "admg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "admg/error.hpp"

namespace admg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.size() - start : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Table parse_table(std::string_view text, char delimiter) {
  Table table;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (delimiter == 0) delimiter = line.find('\t') != std::string_view::npos ? '\t' : ',';
      for (auto cell : split(line, delimiter)) {
        if (cell.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty column name");
        table.header.emplace_back(cell);
      }
      have_header = true;
      continue;
    }
    const auto cells = split(line, delimiter);
    if (cells.size() != table.header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto cell : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ValidationError("line " + std::to_string(line_no) + ": not a number: '" + std::string(cell) + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ValidationError("data file has no header row");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) table.values(Index(r), Index(c)) = rows[r][c];
  }
  return table;
}

Table read_table(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), delimiter);
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_table(std::ostream& out, const Table& table, char delimiter) {
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out << delimiter;
    out << table.header[c];
  }
  out << '\n';
  for (Index r = 0; r < table.values.rows(); ++r) {
    for (Index c = 0; c < table.values.cols(); ++c) {
      if (c) out << delimiter;
      out << format_number(table.values(r, c));
    }
    out << '\n';
  }
}

void write_table(const std::filesystem::path& path, const Table& table, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_table(out, table, delimiter);
}

Dataset Dataset::rows(const std::vector<std::size_t>& which) const {
  Dataset out;
  out.nodes = nodes;
  out.values.resize(static_cast<Index>(which.size()), values.cols());
  for (std::size_t r = 0; r < which.size(); ++r) out.values.row(Index(r)) = values.row(Index(which[r]));
  return out;
}

Matrix Dataset::scatter() const { return values.transpose() * values; }

Vector Dataset::column_means() const {
  if (values.rows() == 0) return Vector::Zero(values.cols());
  return values.colwise().mean().transpose();
}

Dataset bind(const Table& table, const Admg& g) {
  std::map<NodeIndex, Index> column_of;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto node = g.find(table.header[c]);
    if (!node) throw ValidationError("data column '" + table.header[c] + "' is not a node of the graph");
    if (g.is_latent(*node)) throw ValidationError("data column '" + table.header[c] + "' is a latent node");
    if (!column_of.emplace(*node, static_cast<Index>(c)).second) {
      throw ValidationError("duplicate data column '" + table.header[c] + "'");
    }
  }
  Dataset out;
  out.nodes = g.observed_nodes();
  out.values.resize(table.values.rows(), static_cast<Index>(out.nodes.size()));
  for (std::size_t k = 0; k < out.nodes.size(); ++k) {
    const auto it = column_of.find(out.nodes[k]);
    if (it == column_of.end()) throw ValidationError("no data column for observed node '" + g.name(out.nodes[k]) + "'");
    out.values.col(Index(k)) = table.values.col(it->second);
  }
  if (!out.values.allFinite()) throw ValidationError("data contains non-finite values");
  return out;
}

Table to_table(const Dataset& data, const Admg& g) {
  Table t;
  for (NodeIndex n : data.nodes) t.header.push_back(g.name(n));
  t.values = data.values;
  return t;
}

std::vector<std::vector<std::size_t>> fold_indices(std::size_t n, std::size_t k) {
  if (k == 0 || k > n) throw ValidationError("fold count must be between 1 and the number of rows");
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t row = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) folds[f].push_back(row++);
  }
  return folds;
}

std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& folds, std::size_t f) {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace admg
