#pragma once

#include <stdexcept>
#include <string>

namespace nusim {

/// Invalid scenario content (dangling id, negative rate, window inversion...).
/// `path()` names the offending field, e.g. "edges[2].pieces[0].rate".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed config text. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// An engine operation was called outside its contract (e.g. collapsing onto a
/// component without ready states).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Total square modulus is zero; hazards are undefined.
class DegenerateSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dynamics step would cross a discontinuity or drive a weight negative.
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nusim
