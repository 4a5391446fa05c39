#pragma once

// Simplex-valued observations and the additive log-ratio (ALR) map.
//
// The reference part is always the last component: for a G-part
// composition x, alr(x)_j = log(x_j / x_G), j = 1..G-1.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace alrreg {

/// One point of the simplex: G >= 2 strictly positive parts summing to 1.
class Composition {
 public:
  /// Tolerance on the raw sum that construction silently renormalizes.
  static constexpr double kRenormalizeTolerance = 1e-2;

  /// Throws Error(ZeroPart) for a non-positive or non-finite part and
  /// RowSumError when |sum - 1| > kRenormalizeTolerance.
  explicit Composition(std::vector<double> parts);

  std::size_t size() const noexcept { return parts_.size(); }
  double operator[](std::size_t i) const { return parts_[i]; }
  std::span<const double> parts() const noexcept { return parts_; }

 private:
  std::vector<double> parts_;
};

class CompositionDataset {
 public:
  CompositionDataset(std::vector<Composition> rows,
                     std::optional<std::vector<std::string>> labels = std::nullopt);

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t parts() const noexcept { return rows_.front().size(); }
  const Composition& operator[](std::size_t i) const { return rows_[i]; }
  const std::optional<std::vector<std::string>>& labels() const noexcept { return labels_; }

  /// n x (G-1) matrix of ALR coordinates.
  Eigen::MatrixXd alr() const;

 private:
  std::vector<Composition> rows_;
  std::optional<std::vector<std::string>> labels_;
};

Eigen::VectorXd alr_forward(const Composition& c);

/// Raw-parts overload; throws Error(ZeroPart) if any part <= 0.
Eigen::VectorXd alr_forward(std::span<const double> parts);

/// Inverse ALR (softmax with an implicit zero for the reference part),
/// shifted by max(0, max y) so large coordinates do not overflow. Throws
/// Error(Overflow) if a coordinate is non-finite or a part underflows to 0.
Composition alr_inverse(const Eigen::Ref<const Eigen::VectorXd>& y);

/// Divides each raw row by its sum. A row summing to more than 10 is read as
/// percentages and must total 100 within 1%; a row summing to at most 2 is
/// read as fractions and must total 1 within 1%; anything in between is
/// taken as relative weights. Off-total rows throw RowSumError; entries <= 0
/// throw Error(NonPositiveEntry).
CompositionDataset validate_and_normalize(
    const Eigen::Ref<const Eigen::MatrixXd>& raw,
    std::optional<std::vector<std::string>> labels = std::nullopt);

}  // namespace alrreg
