#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taxonap {

// Base of every error raised by the library. `kind()` is a stable,
// machine-readable tag used by the CLI and the HTTP layer.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what) : Error("empty_input", what) {}
};

class CycleDetected : public Error {
 public:
  explicit CycleDetected(const std::string& code)
      : Error("cycle_detected", "taxonomy contains a cycle through '" + code + "'"),
        code_(code) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidTaxonomy : public Error {
 public:
  explicit InvalidTaxonomy(const std::string& what) : Error("invalid_taxonomy", what) {}
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& detail)
      : Error("malformed_line", "line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class CodeLengthNot7 : public Error {
 public:
  CodeLengthNot7(std::size_t line_no, const std::string& code)
      : Error("code_length_not_7", "line " + std::to_string(line_no) + ": procedure code '" +
                                       code + "' does not have 7 characters"),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class UnknownConcept : public Error {
 public:
  UnknownConcept(const std::string& taxonomy_id, const std::string& code)
      : Error("unknown_code", "unknown code '" + code + "' in taxonomy '" + taxonomy_id + "'"),
        code_(code) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data_error", what) {}
};

}  // namespace taxonap
