#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vvma/matrix.hpp"

namespace vvma {

/// m_scale applied when the diagonal terms are removed.
inline constexpr double kNoDiagScale = 0.1;

enum class InitKind {
  zeros,
  ones,
  /// M ~ U[-s, s] with s = sqrt(6 / (k + k)); diagonals all ones.
  fan_uniform,
};

struct InitSpec {
  InitKind kind = InitKind::fan_uniform;
  bool diag_enabled = true;
};

struct BlockGrid {
  std::size_t r = 0;
  std::size_t c = 0;
  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;
};

/// Shared k x k matrix M tiled over an r x c block grid, with block (i, j)
/// equal to m_scale * M * diag(v_ij).
///
/// Diagonal vectors are stored contiguously in row-major grid order, k values
/// per block. When diagonals are disabled the storage is empty and every
/// block is m_scale * M.
class VvmaParam {
 public:
  VvmaParam(std::size_t k, std::size_t r, std::size_t c, DenseMatrix shared, std::vector<double> diags,
            double m_scale = 1.0);

  /// Diagonal-free variant.
  static VvmaParam without_diagonals(std::size_t k, std::size_t r, std::size_t c, DenseMatrix shared,
                                     double m_scale = kNoDiagScale);

  std::size_t k() const noexcept { return k_; }
  std::size_t row_blocks() const noexcept { return r_; }
  std::size_t col_blocks() const noexcept { return c_; }
  std::size_t rows() const noexcept { return r_ * k_; }
  std::size_t cols() const noexcept { return c_ * k_; }
  bool diag_enabled() const noexcept { return diag_enabled_; }
  double m_scale() const noexcept { return m_scale_; }

  const DenseMatrix& shared() const noexcept { return shared_; }
  DenseMatrix& shared() noexcept { return shared_; }

  std::span<const double> diags() const noexcept { return diags_; }
  std::span<double> diags() noexcept { return diags_; }
  std::span<const double> diag(std::size_t i, std::size_t j) const;
  std::span<double> diag(std::size_t i, std::size_t j);

  friend bool operator==(const VvmaParam&, const VvmaParam&) = default;

 private:
  VvmaParam() = default;

  std::size_t k_ = 0;
  std::size_t r_ = 0;
  std::size_t c_ = 0;
  DenseMatrix shared_;
  std::vector<double> diags_;
  bool diag_enabled_ = true;
  double m_scale_ = 1.0;
};

VvmaParam new_vvma(std::size_t k, std::size_t r, std::size_t c, const InitSpec& init, std::uint64_t seed);

/// Materialises the (r*k) x (c*k) matrix. Intended for oracles and small
/// shapes; the fast paths below never call it.
DenseMatrix expand(const VvmaParam& p);

/// y_i = m_scale * M * sum_j (v_ij ⊙ x_j), without forming the tiled matrix.
Vector matvec(const VvmaParam& p, std::span<const double> x);

/// Column-batched matvec: X is (c*k) x t, result is (r*k) x t.
DenseMatrix matmul(const VvmaParam& p, const DenseMatrix& x);

std::size_t param_count(const VvmaParam& p) noexcept;

BlockGrid pad_shape(std::size_t m, std::size_t n, std::size_t k);

std::string to_json(const VvmaParam& p);
VvmaParam vvma_from_json(const std::string& text);

std::string to_json(const DenseMatrix& m);
DenseMatrix matrix_from_json(const std::string& text);

}  // namespace vvma
