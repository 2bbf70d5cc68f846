#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vvma/core.hpp"
#include "vvma/fit.hpp"
#include "vvma/matrix.hpp"

namespace vvma {

enum class LayerKind { dense, vvma, relu, tanh };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  std::size_t k = 0;  // vvma only
  bool diag_enabled = true;
  double m_scale = 1.0;
};

/// Parses "IN,LAYER,LAYER,..." where LAYER is dense:OUT, vvma:OUT, relu or
/// tanh, e.g. "16,vvma:16,tanh,vvma:8". Every vvma layer gets block size k;
/// with diagonals disabled its m_scale is 0.1.
std::vector<LayerSpec> parse_arch(const std::string& spec, std::size_t k, bool diag_enabled);
void validate(const std::vector<LayerSpec>& layers);

using Tensor = std::vector<double>;
using TensorList = std::vector<Tensor>;

/// Parameters live in one flat list, layer by layer: dense layers own
/// [W (out x in, row-major), bias]; vvma layers own [M, diagonals, bias], or
/// [M, bias] without diagonals; activations own nothing.
struct Model {
  std::vector<LayerSpec> layers;
  TensorList params;
  std::vector<std::size_t> first_tensor;

  std::size_t tensor_count(std::size_t layer) const;
};

struct ModelInit {
  /// Multiplies the fan-based weight scale.
  double weight_gain = 1.0;
  /// Diagonal entries ~ U[lo, hi]; lo == hi gives a constant.
  double diag_lo = 1.0;
  double diag_hi = 1.0;
  double bias_scale = 0.0;
};

Model init_model(const std::vector<LayerSpec>& layers, std::uint64_t seed, const ModelInit& init = {});

/// The layer's structured weight as a VvmaParam over the padded shape.
VvmaParam vvma_layer_param(const Model& model, std::size_t layer);
/// Dense weight of a dense layer, or the cropped expansion of a vvma layer.
DenseMatrix layer_weight(const Model& model, std::size_t layer);

/// acts[0] is the input batch (features x samples); acts[l + 1] is the
/// output of layer l.
using Activations = std::vector<DenseMatrix>;

Activations forward(const Model& model, const DenseMatrix& x);

double mse(const DenseMatrix& y, const DenseMatrix& targets);

struct Gradients {
  TensorList params;
  DenseMatrix input;
};

/// Backpropagates `upstream` (gradient w.r.t. the final activation).
Gradients backward_from(const Model& model, const Activations& acts, const DenseMatrix& upstream);

/// Gradients of mse(forward(x), targets).
Gradients backward(const Model& model, const Activations& acts, const DenseMatrix& targets);

double global_norm(const TensorList& grads) noexcept;

/// Scales every tensor by clip_norm / g when the joint norm g exceeds
/// clip_norm. Returns g.
double clip_global_norm(TensorList& grads, double clip_norm);

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double clip_norm = 1.0;
  double learning_rate = 1e-2;
  std::size_t steps = 2000;
  std::size_t batch = 0;  // 0 or >= samples: full batch
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t log_every = 10;
};

void validate(const TrainConfig& cfg);

/// Regression against a frozen, randomly initialised teacher network.
struct TeacherTask {
  std::vector<LayerSpec> teacher;
  std::size_t samples = 256;
  std::uint64_t seed = 0;
  ModelInit teacher_init{1.0, -1.0, 1.0, 0.1};
  double target_scale = 1.0;

  DenseMatrix inputs() const;
  DenseMatrix targets(const DenseMatrix& inputs) const;
};

/// A teacher that mirrors `student` but always carries diagonals.
TeacherTask teacher_for(const std::vector<LayerSpec>& student, std::uint64_t seed);

/// Preset where plain SGD with large steps blows up unless gradients are
/// clipped.
struct StressPreset {
  std::vector<LayerSpec> arch;
  TeacherTask task;
  TrainConfig config;
};
StressPreset stress_preset(double clip_norm, std::uint64_t seed);

struct TrainReport {
  std::vector<LossPoint> loss_curve;
  bool diverged = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t steps_run = 0;
};

TrainReport train(const std::vector<LayerSpec>& arch, const TeacherTask& task, const TrainConfig& cfg);

std::string to_csv(const TrainReport& report);
std::string to_json(const TrainReport& report, const TrainConfig& cfg);

}  // namespace vvma
