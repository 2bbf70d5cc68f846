#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vvma/error.hpp"

namespace vvma {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed-size flat parameter block.
class Adam {
 public:
  Adam(std::size_t size, const AdamConfig& cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {
    require(cfg.learning_rate > 0.0, ErrorCode::invalid_argument, "learning rate must be > 0");
    require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
            ErrorCode::invalid_argument, "Adam betas must lie in [0, 1)");
  }

  /// Advances the shared step counter; call once per optimisation step before
  /// update() on each block.
  void tick() {
    ++t_;
    corr1_ = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    corr2_ = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  }

  void update(std::span<double> params, std::span<const double> grads, std::size_t offset = 0) {
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double lr = cfg_.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grads[i];
      double& m = m_[offset + i];
      double& v = v_[offset + i];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      const double m_hat = m / corr1_;
      const double v_hat = v / corr2_;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
  double corr1_ = 1.0;
  double corr2_ = 1.0;
};

}  // namespace vvma
