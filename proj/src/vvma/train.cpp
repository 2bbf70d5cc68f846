#include "vvma/train.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vvma/adam.hpp"
#include "vvma/error.hpp"
#include "vvma/format.hpp"
#include "vvma/rng.hpp"

namespace vvma {

// --- architecture ------------------------------------------------------------

namespace {

std::size_t parse_count(const std::string& text, const std::string& token) {
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_argument, "bad dimension in arch token '" + token + "'");
  }
  require(pos == text.size() && value >= 1 && text.find('-') == std::string::npos, ErrorCode::invalid_argument,
          "bad dimension in arch token '" + token + "'");
  return static_cast<std::size_t>(value);
}

}  // namespace

std::vector<LayerSpec> parse_arch(const std::string& spec, std::size_t k, bool diag_enabled) {
  std::vector<std::string> tokens;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) tokens.push_back(tok);
  require(tokens.size() >= 2, ErrorCode::invalid_argument, "arch needs an input dimension and at least one layer");

  std::size_t dim = parse_count(tokens[0], tokens[0]);
  std::vector<LayerSpec> layers;
  for (std::size_t idx = 1; idx < tokens.size(); ++idx) {
    const std::string& tok = tokens[idx];
    LayerSpec l;
    l.in_dim = dim;
    if (tok == "relu" || tok == "tanh") {
      l.kind = tok == "relu" ? LayerKind::relu : LayerKind::tanh;
      l.out_dim = dim;
    } else {
      const auto colon = tok.find(':');
      require(colon != std::string::npos, ErrorCode::invalid_argument, "unknown arch token '" + tok + "'");
      const std::string kind = tok.substr(0, colon);
      l.out_dim = parse_count(tok.substr(colon + 1), tok);
      if (kind == "dense") {
        l.kind = LayerKind::dense;
      } else if (kind == "vvma") {
        require(k >= 1, ErrorCode::invalid_argument, "vvma layers need k >= 1");
        l.kind = LayerKind::vvma;
        l.k = k;
        l.diag_enabled = diag_enabled;
        l.m_scale = diag_enabled ? 1.0 : kNoDiagScale;
      } else {
        fail(ErrorCode::invalid_argument, "unknown layer kind '" + kind + "'");
      }
    }
    dim = l.out_dim;
    layers.push_back(l);
  }
  return layers;
}

void validate(const std::vector<LayerSpec>& layers) {
  require(!layers.empty(), ErrorCode::invalid_argument, "model has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    require(s.in_dim >= 1 && s.out_dim >= 1, ErrorCode::invalid_argument, "layer dims must be >= 1");
    if (l > 0)
      require(layers[l - 1].out_dim == s.in_dim, ErrorCode::shape_mismatch,
              "layer " + std::to_string(l) + " input does not match the previous output");
    if (s.kind == LayerKind::relu || s.kind == LayerKind::tanh)
      require(s.in_dim == s.out_dim, ErrorCode::shape_mismatch, "activations preserve dimension");
    if (s.kind == LayerKind::vvma) require(s.k >= 1, ErrorCode::invalid_argument, "vvma layer needs k >= 1");
  }
}

// --- parameters --------------------------------------------------------------

std::size_t Model::tensor_count(std::size_t layer) const {
  const std::size_t end = layer + 1 < first_tensor.size() ? first_tensor[layer + 1] : params.size();
  return end - first_tensor[layer];
}

Model init_model(const std::vector<LayerSpec>& layers, std::uint64_t seed, const ModelInit& init) {
  validate(layers);
  Model model;
  model.layers = layers;
  Rng rng(seed);
  auto uniform_tensor = [&](std::size_t n, double bound) {
    Tensor t(n);
    for (double& x : t) x = rng.uniform(-bound, bound);
    return t;
  };
  for (const auto& s : layers) {
    model.first_tensor.push_back(model.params.size());
    switch (s.kind) {
      case LayerKind::dense: {
        const double bound = init.weight_gain * std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
        model.params.push_back(uniform_tensor(s.out_dim * s.in_dim, bound));
        model.params.push_back(uniform_tensor(s.out_dim, init.bias_scale));
        break;
      }
      case LayerKind::vvma: {
        const BlockGrid g = pad_shape(s.out_dim, s.in_dim, s.k);
        const double bound = init.weight_gain * std::sqrt(6.0 / static_cast<double>(s.k + s.k));
        model.params.push_back(uniform_tensor(s.k * s.k, bound));
        if (s.diag_enabled) {
          Tensor d(g.r * g.c * s.k);
          for (double& x : d) x = init.diag_lo == init.diag_hi ? init.diag_lo : rng.uniform(init.diag_lo, init.diag_hi);
          model.params.push_back(std::move(d));
        }
        model.params.push_back(uniform_tensor(s.out_dim, init.bias_scale));
        break;
      }
      case LayerKind::relu:
      case LayerKind::tanh:
        break;
    }
  }
  return model;
}

VvmaParam vvma_layer_param(const Model& model, std::size_t layer) {
  const auto& s = model.layers.at(layer);
  require(s.kind == LayerKind::vvma, ErrorCode::invalid_argument, "layer is not a vvma layer");
  const BlockGrid g = pad_shape(s.out_dim, s.in_dim, s.k);
  const std::size_t t0 = model.first_tensor[layer];
  DenseMatrix m(s.k, s.k, model.params[t0]);
  if (!s.diag_enabled) return VvmaParam::without_diagonals(s.k, g.r, g.c, std::move(m), s.m_scale);
  return VvmaParam(s.k, g.r, g.c, std::move(m), model.params[t0 + 1], s.m_scale);
}

DenseMatrix layer_weight(const Model& model, std::size_t layer) {
  const auto& s = model.layers.at(layer);
  if (s.kind == LayerKind::dense) return DenseMatrix(s.out_dim, s.in_dim, model.params[model.first_tensor[layer]]);
  require(s.kind == LayerKind::vvma, ErrorCode::invalid_argument, "layer has no weight matrix");
  return expand(vvma_layer_param(model, layer)).cropped(s.out_dim, s.in_dim);
}

// --- forward / backward ------------------------------------------------------

namespace {

void add_bias(DenseMatrix& y, const Tensor& bias) {
  for (std::size_t a = 0; a < y.rows(); ++a)
    for (double& v : y.row(a)) v += bias[a];
}

Tensor row_sums(const DenseMatrix& g) {
  Tensor out(g.rows(), 0.0);
  for (std::size_t a = 0; a < g.rows(); ++a)
    for (double v : g.row(a)) out[a] += v;
  return out;
}

// Gradients of a vvma layer given the padded input xp and padded upstream gp.
void vvma_backward(const LayerSpec& s, const VvmaParam& p, const DenseMatrix& xp, const DenseMatrix& gp,
                   Tensor& grad_m, Tensor* grad_diag, DenseMatrix& grad_xp) {
  const std::size_t k = s.k;
  const std::size_t batch = xp.cols();
  const double scale = p.m_scale();
  grad_m.assign(k * k, 0.0);
  if (grad_diag != nullptr) grad_diag->assign(p.diags().size(), 0.0);
  grad_xp = DenseMatrix(xp.rows(), batch);
  DenseMatrix z(k, batch);
  DenseMatrix dz(k, batch);
  for (std::size_t i = 0; i < p.row_blocks(); ++i) {
    // z_i = sum_j v_ij ⊙ x_j
    std::fill(z.data().begin(), z.data().end(), 0.0);
    for (std::size_t j = 0; j < p.col_blocks(); ++j) {
      for (std::size_t b = 0; b < k; ++b) {
        const double v = p.diag_enabled() ? p.diag(i, j)[b] : 1.0;
        auto xr = xp.row(j * k + b);
        auto zr = z.row(b);
        for (std::size_t c = 0; c < batch; ++c) zr[c] += v * xr[c];
      }
    }
    // dM += s * g_i z_i^T ; dz_i = s * M^T g_i
    std::fill(dz.data().begin(), dz.data().end(), 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      auto gr = gp.row(i * k + a);
      for (std::size_t b = 0; b < k; ++b) {
        auto zr = z.row(b);
        double acc = 0.0;
        for (std::size_t c = 0; c < batch; ++c) acc += gr[c] * zr[c];
        grad_m[a * k + b] += scale * acc;
        const double m = scale * p.shared().at(a, b);
        auto dzr = dz.row(b);
        for (std::size_t c = 0; c < batch; ++c) dzr[c] += m * gr[c];
      }
    }
    // dv_ij = rowsum(dz_i ⊙ x_j) ; dx_j += v_ij ⊙ dz_i
    for (std::size_t j = 0; j < p.col_blocks(); ++j) {
      for (std::size_t b = 0; b < k; ++b) {
        auto xr = xp.row(j * k + b);
        auto dzr = dz.row(b);
        auto gxr = grad_xp.row(j * k + b);
        if (p.diag_enabled()) {
          const double v = p.diag(i, j)[b];
          double acc = 0.0;
          for (std::size_t c = 0; c < batch; ++c) {
            acc += dzr[c] * xr[c];
            gxr[c] += v * dzr[c];
          }
          (*grad_diag)[(i * p.col_blocks() + j) * k + b] += acc;
        } else {
          for (std::size_t c = 0; c < batch; ++c) gxr[c] += dzr[c];
        }
      }
    }
  }
}

}  // namespace

Activations forward(const Model& model, const DenseMatrix& x) {
  require(!model.layers.empty(), ErrorCode::invalid_argument, "model has no layers");
  require(x.rows() == model.layers.front().in_dim, ErrorCode::shape_mismatch,
          "input has " + std::to_string(x.rows()) + " features, model expects " +
              std::to_string(model.layers.front().in_dim));
  Activations acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& s = model.layers[l];
    const DenseMatrix& in = acts.back();
    const std::size_t t0 = l < model.first_tensor.size() ? model.first_tensor[l] : 0;
    DenseMatrix out;
    switch (s.kind) {
      case LayerKind::dense:
        out = matmul(DenseMatrix(s.out_dim, s.in_dim, model.params[t0]), in);
        add_bias(out, model.params[t0 + 1]);
        break;
      case LayerKind::vvma: {
        const VvmaParam p = vvma_layer_param(model, l);
        out = matmul(p, in.padded(p.cols(), in.cols())).cropped(s.out_dim, in.cols());
        add_bias(out, model.params[t0 + (s.diag_enabled ? 2 : 1)]);
        break;
      }
      case LayerKind::relu:
        out = in;
        for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::tanh:
        out = in;
        for (double& v : out.data()) v = std::tanh(v);
        break;
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

double mse(const DenseMatrix& y, const DenseMatrix& targets) {
  require(y.rows() == targets.rows() && y.cols() == targets.cols(), ErrorCode::shape_mismatch,
          "prediction and target shapes differ");
  double acc = 0.0;
  auto yd = y.data();
  auto td = targets.data();
  for (std::size_t i = 0; i < yd.size(); ++i) {
    const double d = yd[i] - td[i];
    acc += d * d;
  }
  return acc / static_cast<double>(yd.size());
}

Gradients backward_from(const Model& model, const Activations& acts, const DenseMatrix& upstream) {
  require(acts.size() == model.layers.size() + 1, ErrorCode::shape_mismatch, "activations do not match the model");
  require(upstream.rows() == acts.back().rows() && upstream.cols() == acts.back().cols(), ErrorCode::shape_mismatch,
          "upstream gradient shape mismatch");
  Gradients grads;
  grads.params.resize(model.params.size());
  DenseMatrix g = upstream;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& s = model.layers[l];
    const DenseMatrix& in = acts[l];
    const DenseMatrix& out = acts[l + 1];
    const std::size_t t0 = model.first_tensor[l];
    switch (s.kind) {
      case LayerKind::dense: {
        const DenseMatrix w(s.out_dim, s.in_dim, model.params[t0]);
        grads.params[t0] = matmul(g, in.transposed()).values();
        grads.params[t0 + 1] = row_sums(g);
        g = matmul(w.transposed(), g);
        break;
      }
      case LayerKind::vvma: {
        const VvmaParam p = vvma_layer_param(model, l);
        const DenseMatrix xp = in.padded(p.cols(), in.cols());
        const DenseMatrix gp = g.padded(p.rows(), g.cols());
        DenseMatrix gxp;
        Tensor* gdiag = s.diag_enabled ? &grads.params[t0 + 1] : nullptr;
        vvma_backward(s, p, xp, gp, grads.params[t0], gdiag, gxp);
        grads.params[t0 + (s.diag_enabled ? 2 : 1)] = row_sums(g);
        g = gxp.cropped(s.in_dim, g.cols());
        break;
      }
      case LayerKind::relu: {
        auto gd = g.data();
        auto xd = in.data();
        for (std::size_t i = 0; i < gd.size(); ++i)
          if (!(xd[i] > 0.0)) gd[i] = 0.0;
        break;
      }
      case LayerKind::tanh: {
        auto gd = g.data();
        auto yd = out.data();
        for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= 1.0 - yd[i] * yd[i];
        break;
      }
    }
  }
  grads.input = std::move(g);
  return grads;
}

Gradients backward(const Model& model, const Activations& acts, const DenseMatrix& targets) {
  const DenseMatrix& y = acts.back();
  require(y.rows() == targets.rows() && y.cols() == targets.cols(), ErrorCode::shape_mismatch,
          "prediction and target shapes differ");
  DenseMatrix upstream(y.rows(), y.cols());
  const double scale = 2.0 / static_cast<double>(y.size());
  auto ud = upstream.data();
  auto yd = y.data();
  auto td = targets.data();
  for (std::size_t i = 0; i < ud.size(); ++i) ud[i] = scale * (yd[i] - td[i]);
  return backward_from(model, acts, upstream);
}

double global_norm(const TensorList& grads) noexcept {
  double acc = 0.0;
  for (const auto& t : grads)
    for (double v : t) acc += v * v;
  return std::sqrt(acc);
}

double clip_global_norm(TensorList& grads, double clip_norm) {
  require(clip_norm > 0.0, ErrorCode::invalid_argument, "clip_norm must be > 0");
  const double norm = global_norm(grads);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& t : grads)
      for (double& v : t) v *= scale;
  }
  return norm;
}

// --- training ----------------------------------------------------------------

void validate(const TrainConfig& cfg) {
  require(cfg.clip_norm > 0.0, ErrorCode::invalid_argument, "clip_norm must be > 0");
  require(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate), ErrorCode::invalid_argument,
          "learning_rate must be > 0");
  require(cfg.steps >= 1, ErrorCode::invalid_argument, "steps must be >= 1");
  require(cfg.log_every >= 1, ErrorCode::invalid_argument, "log_every must be >= 1");
}

DenseMatrix TeacherTask::inputs() const {
  validate(teacher);
  require(samples >= 1, ErrorCode::invalid_argument, "teacher task needs samples >= 1");
  DenseMatrix x(teacher.front().in_dim, samples);
  Rng rng(Rng::derive(seed, 1));
  for (double& v : x.data()) v = rng.gaussian();
  return x;
}

DenseMatrix TeacherTask::targets(const DenseMatrix& inputs) const {
  const Model net = init_model(teacher, Rng::derive(seed, 2), teacher_init);
  DenseMatrix y = forward(net, inputs).back();
  for (double& v : y.data()) v *= target_scale;
  return y;
}

TeacherTask teacher_for(const std::vector<LayerSpec>& student, std::uint64_t seed) {
  TeacherTask task;
  task.teacher = student;
  for (auto& l : task.teacher) {
    if (l.kind != LayerKind::vvma) continue;
    l.diag_enabled = true;
    l.m_scale = 1.0;
  }
  task.seed = seed;
  return task;
}

StressPreset stress_preset(double clip_norm, std::uint64_t seed) {
  StressPreset s;
  // Twelve stacked linear vvma layers: the gradient scales like the
  // product of layer norms, so one unclipped SGD step overflows.
  std::string spec = "32";
  for (int i = 0; i < 12; ++i) spec += ",vvma:32";
  s.arch = parse_arch(spec, 8, true);
  s.task = teacher_for(s.arch, seed);
  s.task.target_scale = 1.0;
  s.config.clip_norm = clip_norm;
  s.config.learning_rate = 1.0;
  s.config.steps = 500;
  s.config.optimizer = OptimizerKind::sgd;
  s.config.seed = seed;
  s.config.log_every = 10;
  return s;
}

namespace {

bool all_params_finite(const TensorList& params) {
  for (const auto& t : params)
    if (!all_finite(t)) return false;
  return true;
}

DenseMatrix batch_columns(const DenseMatrix& m, std::size_t first, std::size_t count) {
  DenseMatrix out(m.rows(), count);
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t c = 0; c < count; ++c) out.at(a, c) = m.at(a, (first + c) % m.cols());
  return out;
}

}  // namespace

TrainReport train(const std::vector<LayerSpec>& arch, const TeacherTask& task, const TrainConfig& cfg) {
  validate(cfg);
  validate(arch);
  require(task.teacher.front().in_dim == arch.front().in_dim && task.teacher.back().out_dim == arch.back().out_dim,
          ErrorCode::shape_mismatch, "student and teacher dimensions differ");

  const DenseMatrix x = task.inputs();
  const DenseMatrix y = task.targets(x);
  Model model = init_model(arch, Rng::derive(cfg.seed, 3));
  const bool full_batch = cfg.batch == 0 || cfg.batch >= x.cols();

  std::size_t total = 0;
  for (const auto& t : model.params) total += t.size();
  Adam adam(total, {cfg.learning_rate, 0.9, 0.999, 1e-8});

  TrainReport report;
  auto full_loss = [&] { return mse(forward(model, x).back(), y); };
  report.initial_loss = full_loss();

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const DenseMatrix bx = full_batch ? x : batch_columns(x, step * cfg.batch, cfg.batch);
    const DenseMatrix by = full_batch ? y : batch_columns(y, step * cfg.batch, cfg.batch);
    const Activations acts = forward(model, bx);
    const double batch_loss = mse(acts.back(), by);
    if (!std::isfinite(batch_loss)) {
      report.loss_curve.push_back({step, batch_loss});
      report.diverged = true;
      break;
    }
    if (step % cfg.log_every == 0) report.loss_curve.push_back({step, full_batch ? batch_loss : full_loss()});

    Gradients g = backward(model, acts, by);
    clip_global_norm(g.params, cfg.clip_norm);
    if (cfg.optimizer == OptimizerKind::sgd) {
      for (std::size_t t = 0; t < model.params.size(); ++t)
        for (std::size_t i = 0; i < model.params[t].size(); ++i) model.params[t][i] -= cfg.learning_rate * g.params[t][i];
    } else {
      adam.tick();
      std::size_t offset = 0;
      for (std::size_t t = 0; t < model.params.size(); ++t) {
        adam.update(model.params[t], g.params[t], offset);
        offset += model.params[t].size();
      }
    }
    report.steps_run = step + 1;
    if (!all_params_finite(model.params)) {
      report.loss_curve.push_back({step + 1, std::numeric_limits<double>::quiet_NaN()});
      report.diverged = true;
      break;
    }
  }

  if (report.diverged) {
    report.final_loss = report.loss_curve.back().loss;
  } else {
    report.final_loss = full_loss();
    if (!std::isfinite(report.final_loss)) report.diverged = true;
    report.loss_curve.push_back({cfg.steps, report.final_loss});
  }
  return report;
}

std::string to_csv(const TrainReport& report) {
  std::string out = "step,loss\n";
  for (const auto& pt : report.loss_curve) out += std::to_string(pt.step) + ',' + format_double(pt.loss) + '\n';
  return out;
}

std::string to_json(const TrainReport& report, const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  j["diverged"] = report.diverged;
  j["initial_loss"] = num(report.initial_loss);
  j["final_loss"] = num(report.final_loss);
  j["steps_run"] = report.steps_run;
  j["config"] = {
      {"clip_norm", cfg.clip_norm}, {"learning_rate", cfg.learning_rate},
      {"steps", cfg.steps},         {"batch", cfg.batch},
      {"seed", cfg.seed},           {"optimizer", cfg.optimizer == OptimizerKind::sgd ? "sgd" : "adam"},
      {"log_every", cfg.log_every},
  };
  return j.dump(2);
}

}  // namespace vvma
