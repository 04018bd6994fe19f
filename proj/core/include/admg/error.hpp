#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace admg {

/// Input that violates a documented contract (bad graph, bad config,
/// inconsistent data). Mapped to exit code 2 by the command-line tool.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not proceed (non-positive-definite matrix,
/// degenerate weights). Mapped to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GraphErrorKind {
  kSyntax,
  kUndeclaredNode,
  kDuplicateNode,
  kDuplicateEdge,
  kSelfLoop,
  kCycle,
};

const char* to_string(GraphErrorKind kind);

class GraphParseError : public ValidationError {
 public:
  GraphParseError(GraphErrorKind kind, std::size_t line, const std::string& detail);

  GraphErrorKind kind() const { return kind_; }
  /// 1-based line of the offending statement; 0 when not tied to a line.
  std::size_t line() const { return line_; }

 private:
  GraphErrorKind kind_;
  std::size_t line_;
};

}  // namespace admg
