#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oosmse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// X'X is singular or too ill-conditioned to identify the coefficients.
class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Some training observation has leverage at (or numerically at) one, so
/// the 1/(1 - h_i) rescaling is undefined.
class LeverageAtOne : public Error {
 public:
  LeverageAtOne(const std::string& what, std::size_t row, double leverage)
      : Error(what), row_(row), leverage_(leverage) {}

  std::size_t row() const noexcept { return row_; }
  double leverage() const noexcept { return leverage_; }

 private:
  std::size_t row_;
  double leverage_;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class FileNotFound : public Error {
 public:
  using Error::Error;
};

/// Malformed delimited input. Rows are 1-based data rows (header excluded),
/// columns are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

/// Run-config validation failure; key() names the offending JSON path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyStore : public Error {
 public:
  using Error::Error;
};

}  // namespace oosmse
