#pragma once

#include <stdexcept>
#include <string>

namespace ranl {

// Root of every error the library throws. `kind()` is a stable short tag used
// by the command line front end to report machine-parsable failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

class IndexError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "index"; }
};

// A caller violated an API contract (non-scalar backward root, second
// backward on the same tape, nondeterministic gradient-check target...).
class ContractError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};

class MissingFileError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "missing-file"; }
};

class DimensionMismatchError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "dim-mismatch"; }
};

class BadTokenError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "bad-token"; }
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "parse"; }
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "divergence"; }
};

}  // namespace ranl
