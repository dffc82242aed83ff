#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spn {

/// Base of every exception thrown by the library.
class spn_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed graph construction request (arity, negative weight, bad params).
class construction_error : public spn_error {
 public:
  using spn_error::spn_error;
};

/// A model that cannot be finalized, deserialized or compiled.
class model_error : public spn_error {
 public:
  using spn_error::spn_error;
};

/// DSL syntax or semantic error with a 1-based source position.
class parse_error : public model_error {
 public:
  parse_error(std::size_t line, std::size_t column, const std::string& what)
      : model_error("line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Problems with query, training or CSV data.
class data_error : public spn_error {
 public:
  using spn_error::spn_error;
};

}  // namespace spn
