#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "admg/graph.hpp"
#include "admg/linalg.hpp"

namespace admg {

/// Headered table of numbers as read from a delimited file.
struct Table {
  std::vector<std::string> header;
  Matrix values;
};

/// Parses comma- or tab-separated text with a header row. `delimiter` 0
/// picks tab when the header contains one, comma otherwise. Blank lines are
/// skipped. Throws ValidationError with a line number on malformed input.
Table parse_table(std::string_view text, char delimiter = 0);
Table read_table(const std::filesystem::path& path, char delimiter = 0);

/// Writes with 17 significant digits so values read back bit-identically.
void write_table(std::ostream& out, const Table& table, char delimiter = ',');
void write_table(const std::filesystem::path& path, const Table& table, char delimiter = ',');

/// %.17g rendering used for all numeric output.
std::string format_number(double x);

/// Observations bound to the observed nodes of a graph. Column c of `values`
/// holds node nodes[c]; nodes are the graph's observed nodes in index order.
struct Dataset {
  std::vector<NodeIndex> nodes;
  Matrix values;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  Dataset rows(const std::vector<std::size_t>& which) const;
  /// Second-moment matrix sum_t y_t y_t^T.
  Matrix scatter() const;
  Vector column_means() const;
};

/// Binds table columns to node names. Every observed node needs a column;
/// columns for latent or unknown nodes are errors. Non-finite entries are
/// rejected.
Dataset bind(const Table& table, const Admg& g);

/// Inverse of bind(): a table headed by node names.
Table to_table(const Dataset& data, const Admg& g);

/// Row index sets of k contiguous folds of n rows (sizes differ by at most one).
std::vector<std::vector<std::size_t>> fold_indices(std::size_t n, std::size_t k);
/// All indices not in fold f.
std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& folds, std::size_t f);

}  // namespace admg
