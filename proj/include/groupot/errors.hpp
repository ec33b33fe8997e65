#pragma once

#include <stdexcept>
#include <string>

namespace groupot {

/// Base class of every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error("dimension mismatch: " + what) {}
};

class NegativeCost : public Error {
 public:
  NegativeCost(long row_, long col_, double value_)
      : Error("cost(" + std::to_string(row_) + "," + std::to_string(col_) +
              ") = " + std::to_string(value_) + " is negative or non-finite"),
        row(row_),
        col(col_),
        value(value_) {}
  long row;
  long col;
  double value;
};

class MarginalNotNormalized : public Error {
 public:
  MarginalNotNormalized(char which_, long index_, const std::string& what)
      : Error(std::string("marginal ") + which_ + ": " + what),
        which(which_),
        index(index_) {}
  char which;  // 'a' or 'b'
  long index;  // first offending index, or -1 when the sum is off
};

class PartitionMismatch : public Error {
 public:
  explicit PartitionMismatch(const std::string& what)
      : Error("group partition: " + what) {}
};

class RhoOutOfRange : public Error {
 public:
  explicit RhoOutOfRange(double rho_)
      : Error("rho = " + std::to_string(rho_) +
              " is outside the open interval (0,1)"),
        rho(rho_) {}
  double rho;
};

class ParseError : public Error {
 public:
  ParseError(long line_, long column_, const std::string& what)
      : Error("parse error at line " + std::to_string(line_) + ", column " +
              std::to_string(column_) + ": " + what),
        line(line_),
        column(column_) {}
  long line;
  long column;
};

class MissingLabelColumn : public Error {
 public:
  explicit MissingLabelColumn(const std::string& path)
      : Error("source file " + path + " must start with a 'label' column") {}
};

class InconsistentDimension : public Error {
 public:
  InconsistentDimension(long line_, const std::string& what)
      : Error("inconsistent dimension at line " + std::to_string(line_) +
              ": " + what),
        line(line_) {}
  long line;
};

/// Raised when the screening audit observes a value the bounds rule out.
class AuditViolation : public Error {
 public:
  explicit AuditViolation(const std::string& what)
      : Error("audit violation: " + what) {}
};

}  // namespace groupot
