#include "alrreg/errors.hpp"

#include <sstream>

namespace alrreg {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroPart: return "ZeroPart";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::RowSum: return "RowSumError";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooFewChains: return "TooFewChains";
    case ErrorCode::DegenerateChains: return "DegenerateChains";
    case ErrorCode::EmptyDraws: return "EmptyDraws";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Scenario: return "ScenarioError";
  }
  return "Unknown";
}

namespace {

std::string row_sum_message(std::size_t row, double sum) {
  std::ostringstream os;
  os << "row " << row << ": component sum " << sum
     << " deviates from the expected total by more than 1%";
  return os.str();
}

std::string parse_message(const std::string& message, std::size_t row,
                          const std::string& column) {
  std::ostringstream os;
  if (row > 0) os << "row " << row << ": ";
  if (!column.empty()) os << "column '" << column << "': ";
  os << message;
  return os.str();
}

}  // namespace

RowSumError::RowSumError(std::size_t row, double observed_sum)
    : Error(ErrorCode::RowSum, row_sum_message(row, observed_sum)),
      row_(row),
      sum_(observed_sum) {}

ParseError::ParseError(const std::string& message, std::size_t row, std::string column)
    : Error(ErrorCode::Parse, parse_message(message, row, column)),
      row_(row),
      column_(std::move(column)) {}

}  // namespace alrreg
