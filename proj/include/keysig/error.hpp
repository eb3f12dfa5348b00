#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace keysig {

// Process exit codes used by the CLI. Every library error maps onto one.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  data = 2,
  transport = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::data; }
};

// Bad flags, missing arguments, inconsistent options.
class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

// Malformed or schema-violating input data (JSONL, score files, templates).
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  SchemaError(std::size_t line, const std::string& detail,
              const std::string& source = {})
      : DataError((source.empty() ? "" : source + ": ") + "line " +
                  std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail),
        source_(source) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::size_t line_;
  std::string detail_;
  std::string source_;
};

class SizeError : public DataError {
 public:
  using DataError::DataError;
};

class TemplateError : public DataError {
 public:
  using DataError::DataError;
};

// A function was called outside its domain (e.g. fuzz of two empty strings).
class UndefinedInputError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempt" +
              (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }
  ExitCode exit_code() const noexcept override { return ExitCode::transport; }

 private:
  int attempts_;
};

class AuthError : public TransportError {
 public:
  using TransportError::TransportError;
};

class HttpStatusError : public TransportError {
 public:
  HttpStatusError(int status, const std::string& body, int attempts)
      : TransportError("HTTP " + std::to_string(status) + ": " + body, attempts),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace keysig
