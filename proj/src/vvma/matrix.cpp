#include "vvma/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vvma/error.hpp"

namespace vvma {

namespace {

std::size_t checked_area(std::size_t rows, std::size_t cols) {
  if (cols != 0 && rows > std::numeric_limits<std::size_t>::max() / sizeof(double) / cols)
    fail(ErrorCode::invalid_argument, "matrix dimensions overflow");
  return rows * cols;
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::shape_mismatch,
          std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " differ");
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(checked_area(rows, cols), 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == checked_area(rows, cols), ErrorCode::shape_mismatch,
          "matrix data length " + std::to_string(data_.size()) + " does not match " +
              std::to_string(rows) + "x" + std::to_string(cols));
  require(vvma::all_finite(data_), ErrorCode::invalid_argument, "matrix contains non-finite entries");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.at(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
  return t;
}

DenseMatrix DenseMatrix::cropped(std::size_t rows, std::size_t cols) const {
  require(rows <= rows_ && cols <= cols_, ErrorCode::shape_mismatch, "crop exceeds matrix shape");
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(row(i).begin(), cols, out.row(i).begin());
  return out;
}

DenseMatrix DenseMatrix::padded(std::size_t rows, std::size_t cols) const {
  require(rows >= rows_ && cols >= cols_, ErrorCode::shape_mismatch, "pad target smaller than matrix");
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows_; ++i) std::copy(row(i).begin(), row(i).end(), out.row(i).begin());
  return out;
}

bool DenseMatrix::all_finite() const noexcept { return vvma::all_finite(data_); }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorCode::shape_mismatch,
          "matmul: inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
              " differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double s = a.at(i, l);
      if (s == 0.0) continue;
      auto brow = b.row(l);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += s * brow[j];
    }
  }
  return c;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorCode::shape_mismatch,
          "matvec: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
              std::to_string(x.size()) + " entries");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix c(a.rows(), a.cols());
  auto cd = c.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] = ad[i] - bd[i];
  return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix c(a.rows(), a.cols());
  auto cd = c.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] = ad[i] + bd[i];
  return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c(a.rows(), a.cols());
  auto cd = c.data();
  auto ad = a.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] = s * ad[i];
  return c;
}

double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace vvma
