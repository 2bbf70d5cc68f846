#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vvma/core.hpp"
#include "vvma/matrix.hpp"

namespace vvma {

struct FitConfig {
  double learning_rate = 1e-4;
  std::size_t steps = 30000;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t log_every = 100;
  /// VVMA fits only. Disabling diagonals also sets m_scale to 0.1.
  bool diag_enabled = true;
};

void validate(const FitConfig& cfg);

struct LossPoint {
  std::size_t step = 0;
  double loss = 0.0;
  friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

struct FitReport {
  double final_loss = 0.0;  // Frobenius distance, not squared
  std::vector<LossPoint> loss_curve;
  double wall_seconds = 0.0;
  std::size_t params_fitted = 0;
};

struct LowRankParam {
  DenseMatrix u;  // m x p
  DenseMatrix v;  // n x p
  std::size_t rank() const noexcept { return u.cols(); }
};

DenseMatrix expand(const LowRankParam& p);

struct VvmaGrad {
  DenseMatrix grad_shared;
  std::vector<double> grad_diags;  // empty when diagonals are disabled
  double loss = 0.0;               // squared Frobenius distance
};

/// Gradients of |expand(p) - W|_F^2 with respect to M and every diagonal.
/// W must have exactly the expanded shape.
VvmaGrad vvma_fit_grad(const VvmaParam& p, const DenseMatrix& w);

/// As above, but W may be smaller than the expanded shape; entries outside W
/// are cropped away and do not contribute.
VvmaGrad vvma_fit_grad_cropped(const VvmaParam& p, const DenseMatrix& w);

struct LowRankGrad {
  DenseMatrix grad_u;
  DenseMatrix grad_v;
  double loss = 0.0;  // squared
};

LowRankGrad lowrank_fit_grad(const LowRankParam& p, const DenseMatrix& w);

std::pair<VvmaParam, FitReport> fit_vvma(const DenseMatrix& w, std::size_t k, const FitConfig& cfg);
std::pair<LowRankParam, FitReport> fit_lowrank(const DenseMatrix& w, std::size_t p, const FitConfig& cfg);

/// Low-rank rank whose parameter count p*(m+n) best matches a VVMA of block
/// size k over the same shape. Clamped to [1, min(m, n)].
std::size_t matched_rank(std::size_t m, std::size_t n, std::size_t k);

std::string to_csv(const FitReport& report);
/// JSON summary; wall_seconds is omitted unless include_timing is set so the
/// default output is reproducible byte for byte.
std::string to_json(const FitReport& report, const FitConfig& cfg, bool include_timing = false);

}  // namespace vvma
