#pragma once

#include <stdexcept>
#include <string>

namespace gsc {

// Operand shapes incompatible with a primitive. The message names the primitive.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& primitive, const std::string& detail)
      : std::invalid_argument(primitive + ": " + detail), primitive_(primitive) {}
  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

// A documented precondition was not met by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file. line() is 1-based, 0 when the error is not tied to a line.
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& path, std::size_t line, const std::string& detail)
      : std::runtime_error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + detail),
        path_(path),
        line_(line) {}
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& detail)
      : std::runtime_error(field + ": " + detail), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProbeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gsc
