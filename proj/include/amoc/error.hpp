#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amoc {

// Exit codes shared by the CLI; every error type below maps onto one of them.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  data = 3,
  numerical = 4,
  divergence = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::data; }
};

// Bad caller input: empty corpora, out-of-range indices, inconsistent specs.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated files (model files, JSONL, CSV, JSON reports).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A broken internal contract, e.g. a plan that does not match its spec.
class InternalError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  SingularityError(const std::string& column, const std::string& what)
      : Error(what), column_(column) {}
  const std::string& column() const noexcept { return column_; }
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }

 private:
  std::string column_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  ExitCode exit_code() const noexcept override { return ExitCode::divergence; }

 private:
  std::size_t step_;
};

}  // namespace amoc
