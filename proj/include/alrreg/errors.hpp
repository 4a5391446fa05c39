#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alrreg {

enum class ErrorCode {
  ZeroPart,
  Overflow,
  RowSum,
  NonPositiveEntry,
  DimensionMismatch,
  NonPositiveVariance,
  NotPositiveDefinite,
  InvalidState,
  InvalidConfig,
  TooFewChains,
  DegenerateChains,
  EmptyDraws,
  Parse,
  Scenario,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A raw composition row whose total is too far from 1 or 100 to be rounding.
class RowSumError : public Error {
 public:
  RowSumError(std::size_t row, double observed_sum);

  std::size_t row() const noexcept { return row_; }
  double observed_sum() const noexcept { return sum_; }

 private:
  std::size_t row_;
  double sum_;
};

// Malformed input file. row/column are 1-based where known, 0 otherwise.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t row = 0, std::string column = {});

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace alrreg
