#include "vvma/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vvma/adam.hpp"
#include "vvma/error.hpp"
#include "vvma/format.hpp"
#include "vvma/linalg.hpp"
#include "vvma/rng.hpp"

namespace vvma {

void validate(const FitConfig& cfg) {
  require(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate), ErrorCode::invalid_argument,
          "learning_rate must be > 0");
  require(cfg.steps >= 1, ErrorCode::invalid_argument, "steps must be >= 1");
  require(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0 && cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0,
          ErrorCode::invalid_argument, "Adam betas must lie in [0, 1)");
  require(cfg.adam_epsilon > 0.0, ErrorCode::invalid_argument, "adam_epsilon must be > 0");
  require(cfg.log_every >= 1, ErrorCode::invalid_argument, "log_every must be >= 1");
}

DenseMatrix expand(const LowRankParam& p) { return matmul(p.u, p.v.transposed()); }

VvmaGrad vvma_fit_grad(const VvmaParam& p, const DenseMatrix& w) {
  require(w.rows() == p.rows() && w.cols() == p.cols(), ErrorCode::shape_mismatch,
          "target is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + ", expansion is " +
              std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
  return vvma_fit_grad_cropped(p, w);
}

VvmaGrad vvma_fit_grad_cropped(const VvmaParam& p, const DenseMatrix& w) {
  require(w.rows() <= p.rows() && w.cols() <= p.cols(), ErrorCode::shape_mismatch,
          "target larger than the VVMA expansion");
  const std::size_t k = p.k();
  const double s = p.m_scale();
  const double two_s = 2.0 * s;
  VvmaGrad g{DenseMatrix(k, k), std::vector<double>(p.diag_enabled() ? p.diags().size() : 0, 0.0), 0.0};
  double loss = 0.0;
  for (std::size_t i = 0; i < p.row_blocks(); ++i) {
    const std::size_t row0 = i * k;
    if (row0 >= w.rows()) break;
    const std::size_t rows = std::min(k, w.rows() - row0);
    for (std::size_t j = 0; j < p.col_blocks(); ++j) {
      const std::size_t col0 = j * k;
      if (col0 >= w.cols()) break;
      const std::size_t cols = std::min(k, w.cols() - col0);
      if (p.diag_enabled()) {
        const double* v = p.diag(i, j).data();
        double* gv = g.grad_diags.data() + (i * p.col_blocks() + j) * k;
        for (std::size_t a = 0; a < rows; ++a) {
          const double* m = p.shared().row(a).data();
          const double* t = w.row(row0 + a).data() + col0;
          double* gm = g.grad_shared.row(a).data();
          for (std::size_t b = 0; b < cols; ++b) {
            const double e = s * m[b] * v[b] - t[b];
            loss += e * e;
            gm[b] += two_s * e * v[b];
            gv[b] += two_s * e * m[b];
          }
        }
      } else {
        for (std::size_t a = 0; a < rows; ++a) {
          const double* m = p.shared().row(a).data();
          const double* t = w.row(row0 + a).data() + col0;
          double* gm = g.grad_shared.row(a).data();
          for (std::size_t b = 0; b < cols; ++b) {
            const double e = s * m[b] - t[b];
            loss += e * e;
            gm[b] += two_s * e;
          }
        }
      }
    }
  }
  g.loss = loss;
  return g;
}

LowRankGrad lowrank_fit_grad(const LowRankParam& p, const DenseMatrix& w) {
  require(p.u.rows() == w.rows() && p.v.rows() == w.cols() && p.u.cols() == p.v.cols(), ErrorCode::shape_mismatch,
          "low-rank factors do not match the target shape");
  const std::size_t rank = p.rank();
  LowRankGrad g{DenseMatrix(p.u.rows(), rank), DenseMatrix(p.v.rows(), rank), 0.0};
  double loss = 0.0;
  for (std::size_t a = 0; a < w.rows(); ++a) {
    const double* ua = p.u.row(a).data();
    const double* wa = w.row(a).data();
    double* gua = g.grad_u.row(a).data();
    for (std::size_t b = 0; b < w.cols(); ++b) {
      const double* vb = p.v.row(b).data();
      double approx = 0.0;
      for (std::size_t q = 0; q < rank; ++q) approx += ua[q] * vb[q];
      const double e = approx - wa[b];
      loss += e * e;
      const double two_e = 2.0 * e;
      double* gvb = g.grad_v.row(b).data();
      for (std::size_t q = 0; q < rank; ++q) {
        gua[q] += two_e * vb[q];
        gvb[q] += two_e * ua[q];
      }
    }
  }
  g.loss = loss;
  return g;
}

namespace {

using Clock = std::chrono::steady_clock;

AdamConfig adam_config(const FitConfig& cfg) {
  return {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
}

void check_loss(double squared, std::size_t step) {
  if (!std::isfinite(squared))
    fail(ErrorCode::numerical, "non-finite loss at step " + std::to_string(step) + "; fit aborted");
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::pair<VvmaParam, FitReport> fit_vvma(const DenseMatrix& w, std::size_t k, const FitConfig& cfg) {
  validate(cfg);
  require(!w.empty(), ErrorCode::invalid_argument, "target matrix is empty");
  require(w.all_finite(), ErrorCode::invalid_argument, "target matrix must be finite");
  require(k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
  const auto start = Clock::now();

  const BlockGrid grid = pad_shape(w.rows(), w.cols(), k);
  VvmaParam p = new_vvma(k, grid.r, grid.c, InitSpec{InitKind::fan_uniform, cfg.diag_enabled}, cfg.seed);
  Adam adam(p.shared().size() + p.diags().size(), adam_config(cfg));

  FitReport report;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const VvmaGrad g = vvma_fit_grad_cropped(p, w);
    check_loss(g.loss, step);
    if (step % cfg.log_every == 0) report.loss_curve.push_back({step, std::sqrt(g.loss)});
    adam.tick();
    adam.update(p.shared().data(), g.grad_shared.data());
    if (p.diag_enabled()) adam.update(p.diags(), g.grad_diags, p.shared().size());
  }

  const double final_loss = frob_dist(expand(p).cropped(w.rows(), w.cols()), w);
  check_loss(final_loss, cfg.steps);
  report.loss_curve.push_back({cfg.steps, final_loss});
  report.final_loss = final_loss;
  report.params_fitted = param_count(p);
  report.wall_seconds = seconds_since(start);
  return {std::move(p), std::move(report)};
}

std::pair<LowRankParam, FitReport> fit_lowrank(const DenseMatrix& w, std::size_t rank, const FitConfig& cfg) {
  validate(cfg);
  require(!w.empty(), ErrorCode::invalid_argument, "target matrix is empty");
  require(w.all_finite(), ErrorCode::invalid_argument, "target matrix must be finite");
  require(rank >= 1 && rank <= std::min(w.rows(), w.cols()), ErrorCode::invalid_argument,
          "rank must lie in [1, min(m, n)]");
  const auto start = Clock::now();
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();

  // E|U V^T|_F^2 = m n p sigma^4 for i.i.d. N(0, sigma^2) factors; aim for a tenth of |W|_F.
  const double target = std::max(frob_norm(w), 1.0) / 10.0;
  const double sigma = std::sqrt(target / std::sqrt(static_cast<double>(m * n * rank)));
  LowRankParam p{DenseMatrix(m, rank), DenseMatrix(n, rank)};
  Rng rng(cfg.seed);
  for (double& x : p.u.data()) x = rng.gaussian(0.0, sigma);
  for (double& x : p.v.data()) x = rng.gaussian(0.0, sigma);

  Adam adam(p.u.size() + p.v.size(), adam_config(cfg));
  FitReport report;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const LowRankGrad g = lowrank_fit_grad(p, w);
    check_loss(g.loss, step);
    if (step % cfg.log_every == 0) report.loss_curve.push_back({step, std::sqrt(g.loss)});
    adam.tick();
    adam.update(p.u.data(), g.grad_u.data());
    adam.update(p.v.data(), g.grad_v.data(), p.u.size());
  }

  const double final_loss = frob_dist(expand(p), w);
  check_loss(final_loss, cfg.steps);
  report.loss_curve.push_back({cfg.steps, final_loss});
  report.final_loss = final_loss;
  report.params_fitted = rank * (m + n);
  report.wall_seconds = seconds_since(start);
  return {std::move(p), std::move(report)};
}

std::size_t matched_rank(std::size_t m, std::size_t n, std::size_t k) {
  const BlockGrid grid = pad_shape(m, n, k);
  const std::size_t budget = k * k + grid.r * grid.c * k;
  const std::size_t denom = m + n;
  const std::size_t p = (budget + denom / 2) / denom;
  return std::clamp<std::size_t>(p, 1, std::min(m, n));
}

std::string to_csv(const FitReport& report) {
  std::string out = "step,loss\n";
  for (const auto& pt : report.loss_curve) {
    out += std::to_string(pt.step);
    out += ',';
    out += format_double(pt.loss);
    out += '\n';
  }
  return out;
}

std::string to_json(const FitReport& report, const FitConfig& cfg, bool include_timing) {
  nlohmann::ordered_json j;
  j["final_loss"] = report.final_loss;
  j["params_fitted"] = report.params_fitted;
  if (include_timing) j["wall_seconds"] = report.wall_seconds;
  j["config"] = {
      {"learning_rate", cfg.learning_rate}, {"steps", cfg.steps},
      {"seed", cfg.seed},                   {"adam_beta1", cfg.adam_beta1},
      {"adam_beta2", cfg.adam_beta2},       {"adam_epsilon", cfg.adam_epsilon},
      {"log_every", cfg.log_every},         {"diag_enabled", cfg.diag_enabled},
  };
  return j.dump(2);
}

}  // namespace vvma
