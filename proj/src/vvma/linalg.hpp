#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>

#include "vvma/matrix.hpp"

namespace vvma {

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct RandomSpec {
  std::variant<Gaussian, Uniform> distribution = Gaussian{};
  std::uint64_t seed = 0;
};

DenseMatrix random_matrix(std::size_t m, std::size_t n, const RandomSpec& spec);

double frob_norm(const DenseMatrix& a) noexcept;
double frob_dist(const DenseMatrix& a, const DenseMatrix& b);

struct SvdResult {
  DenseMatrix u;  // m x m
  Vector s;       // min(m, n) values, nonincreasing
  DenseMatrix v;  // n x n
};

struct JacobiOptions {
  int max_sweeps = 30;
  double tolerance = 1e-12;
};

/// One-sided (Hestenes) Jacobi SVD. Throws ErrorCode::numerical if the
/// off-diagonal mass is still above tolerance after max_sweeps.
SvdResult svd(const DenseMatrix& a, const JacobiOptions& opts = {});

/// Singular values only; skips accumulating the right rotations.
Vector singular_values(const DenseMatrix& a, const JacobiOptions& opts = {});

/// sqrt(sum_{i > p} sigma_i^2): the smallest Frobenius error any rank-<=p
/// matrix can achieve against `a`.
double optimal_lowrank_error(const DenseMatrix& a, std::size_t p);
double optimal_lowrank_error_from_singular_values(const Vector& sigma, std::size_t p);

/// Truncated-SVD reconstruction of rank p.
DenseMatrix optimal_lowrank(const DenseMatrix& a, std::size_t p);

}  // namespace vvma
