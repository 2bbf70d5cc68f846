#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vvma {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
///
/// The data-taking constructor rejects NaN/Inf; the shape-only constructor
/// zero-fills. Mutation goes through at()/data(), so callers that compute into
/// a matrix are responsible for keeping it finite.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  DenseMatrix transposed() const;

  /// Top-left corner copy; rows/cols must not exceed the current shape.
  DenseMatrix cropped(std::size_t rows, std::size_t cols) const;
  /// Zero-extended copy; rows/cols must be at least the current shape.
  DenseMatrix padded(std::size_t rows, std::size_t cols) const;

  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
Vector matvec(const DenseMatrix& a, std::span<const double> x);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

double max_abs(std::span<const double> v) noexcept;
bool all_finite(std::span<const double> v) noexcept;

}  // namespace vvma
