#pragma once

// Reference forward pass for the train module: every layer weight is
// materialised entry by entry and applied as a dense product.

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "vvma/train.hpp"

namespace oracle {

// Weight of layer l read straight from the flat parameter list.
inline vvma::DenseMatrix layer_weight(const vvma::Model& model, std::size_t l) {
  const vvma::LayerSpec& s = model.layers[l];
  const std::size_t t0 = model.first_tensor[l];
  if (s.kind == vvma::LayerKind::dense) return vvma::DenseMatrix(s.out_dim, s.in_dim, model.params[t0]);
  const std::size_t r = (s.out_dim + s.k - 1) / s.k;
  const std::size_t c = (s.in_dim + s.k - 1) / s.k;
  vvma::DenseMatrix m(s.k, s.k, model.params[t0]);
  const vvma::VvmaParam p = s.diag_enabled
                                ? vvma::VvmaParam(s.k, r, c, std::move(m), model.params[t0 + 1], s.m_scale)
                                : vvma::VvmaParam::without_diagonals(s.k, r, c, std::move(m), s.m_scale);
  return oracle::expand(p).cropped(s.out_dim, s.in_dim);
}

inline vvma::DenseMatrix forward(const vvma::Model& model, vvma::DenseMatrix x) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const vvma::LayerSpec& s = model.layers[l];
    if (s.kind == vvma::LayerKind::relu || s.kind == vvma::LayerKind::tanh) {
      for (double& v : x.data()) v = s.kind == vvma::LayerKind::relu ? std::max(v, 0.0) : std::tanh(v);
      continue;
    }
    vvma::DenseMatrix y = oracle::matmul(oracle::layer_weight(model, l), x);
    const vvma::Tensor& bias = model.params[model.first_tensor[l] + model.tensor_count(l) - 1];
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j) y.at(i, j) += bias[i];
    x = std::move(y);
  }
  return x;
}

inline double mse(const vvma::DenseMatrix& y, const vvma::DenseMatrix& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y.values()[i] - t.values()[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

}  // namespace oracle
