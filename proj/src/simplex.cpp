#include "alrreg/simplex.hpp"

#include "alrreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace alrreg {

namespace {

constexpr double kRowSumTolerance = 0.01;
constexpr double kUnderflowLimit = 700.0;

}  // namespace

Composition::Composition(std::vector<double> parts) : parts_(std::move(parts)) {
  if (parts_.size() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "a composition needs at least 2 parts");
  }
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (!(parts_[i] > 0.0) || !std::isfinite(parts_[i])) {
      std::ostringstream os;
      os << "composition part " << i + 1 << " is not strictly positive (" << parts_[i] << ")";
      throw Error(ErrorCode::ZeroPart, os.str());
    }
  }
  const double sum = std::accumulate(parts_.begin(), parts_.end(), 0.0);
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) throw RowSumError(0, sum);
  for (double& x : parts_) x /= sum;
}

CompositionDataset::CompositionDataset(std::vector<Composition> rows,
                                       std::optional<std::vector<std::string>> labels)
    : rows_(std::move(rows)), labels_(std::move(labels)) {
  if (rows_.empty()) throw Error(ErrorCode::DimensionMismatch, "dataset has no rows");
  const std::size_t g = rows_.front().size();
  for (const auto& r : rows_) {
    if (r.size() != g) {
      throw Error(ErrorCode::DimensionMismatch, "rows have differing numbers of parts");
    }
  }
  if (labels_ && labels_->size() != rows_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  }
}

Eigen::MatrixXd CompositionDataset::alr() const {
  Eigen::MatrixXd out(rows(), parts() - 1);
  for (std::size_t i = 0; i < rows(); ++i) out.row(i) = alr_forward(rows_[i]).transpose();
  return out;
}

Eigen::VectorXd alr_forward(const Composition& c) { return alr_forward(c.parts()); }

Eigen::VectorXd alr_forward(std::span<const double> parts) {
  if (parts.size() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "ALR needs at least 2 parts");
  }
  for (double x : parts) {
    if (!(x > 0.0)) throw Error(ErrorCode::ZeroPart, "ALR undefined for a non-positive part");
  }
  const std::size_t g = parts.size() - 1;
  const double log_ref = std::log(parts[g]);
  Eigen::VectorXd y(g);
  for (std::size_t j = 0; j < g; ++j) y[j] = std::log(parts[j]) - log_ref;
  return y;
}

Composition alr_inverse(const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() == 0) throw Error(ErrorCode::DimensionMismatch, "empty ALR vector");
  if (!y.allFinite()) throw Error(ErrorCode::Overflow, "non-finite ALR coordinate");
  const double shift = std::max(0.0, y.maxCoeff());
  if (shift - std::min(0.0, y.minCoeff()) > kUnderflowLimit) {
    throw Error(ErrorCode::Overflow, "ALR coordinates too spread to represent as a composition");
  }
  std::vector<double> parts(static_cast<std::size_t>(y.size()) + 1);
  double denom = std::exp(-shift);
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    parts[j] = std::exp(y[j] - shift);
    denom += parts[j];
  }
  parts.back() = std::exp(-shift);
  for (double& x : parts) x /= denom;
  return Composition(std::move(parts));
}

CompositionDataset validate_and_normalize(const Eigen::Ref<const Eigen::MatrixXd>& raw,
                                          std::optional<std::vector<std::string>> labels) {
  if (raw.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "no rows");
  if (raw.cols() < 2) throw Error(ErrorCode::DimensionMismatch, "need at least 2 components");
  std::vector<Composition> rows;
  rows.reserve(raw.rows());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      if (!(raw(i, j) > 0.0) || !std::isfinite(raw(i, j))) {
        std::ostringstream os;
        os << "row " << i + 1 << ", component " << j + 1 << ": entry " << raw(i, j)
           << " is not strictly positive";
        throw Error(ErrorCode::NonPositiveEntry, os.str());
      }
    }
    const double sum = raw.row(i).sum();
    // sums in (2, 10] match neither scale and are read as relative weights
    const bool percent = sum > 10.0;
    const bool fraction = sum <= 2.0;
    const double expected = percent ? 100.0 : 1.0;
    if ((percent || fraction) && std::abs(sum - expected) > kRowSumTolerance * expected) {
      throw RowSumError(static_cast<std::size_t>(i), sum);
    }
    std::vector<double> parts(raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) parts[j] = raw(i, j) / sum;
    rows.emplace_back(std::move(parts));
  }
  return CompositionDataset(std::move(rows), std::move(labels));
}

}  // namespace alrreg
