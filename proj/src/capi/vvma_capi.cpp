#include "vvma/vvma.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "vvma/core.hpp"
#include "vvma/costmodel.hpp"
#include "vvma/error.hpp"
#include "vvma/fit.hpp"
#include "vvma/linalg.hpp"
#include "vvma/rng.hpp"
#include "vvma/systolic.hpp"
#include "vvma/train.hpp"

struct vvma_matrix {
  vvma::DenseMatrix value;
};

struct vvma_param {
  vvma::VvmaParam value;
};

struct vvma_fit_report {
  vvma::FitReport report;
  vvma::FitConfig config;
};

struct vvma_sim_result {
  vvma::SimResult result;
  vvma_matrix output;
};

struct vvma_train_report {
  vvma::TrainReport report;
  vvma::TrainConfig config;
};

namespace {

thread_local std::string g_last_error;

vvma_status status_of(vvma::ErrorCode code) { return static_cast<vvma_status>(code); }

template <typename F>
vvma_status guarded(F&& body) noexcept {
  try {
    body();
    g_last_error.clear();
    return VVMA_OK;
  } catch (const vvma::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return VVMA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VVMA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return VVMA_ERR_INTERNAL;
  }
}

void need(const void* ptr, const char* name) {
  if (ptr == nullptr) vvma::fail(vvma::ErrorCode::invalid_argument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

vvma::FitConfig to_cpp(const vvma_fit_config* cfg) {
  vvma::FitConfig c;
  if (cfg == nullptr) return c;
  c.learning_rate = cfg->learning_rate;
  c.steps = cfg->steps;
  c.seed = cfg->seed;
  c.adam_beta1 = cfg->adam_beta1;
  c.adam_beta2 = cfg->adam_beta2;
  c.adam_epsilon = cfg->adam_epsilon;
  c.log_every = cfg->log_every;
  c.diag_enabled = cfg->diag_enabled != 0;
  return c;
}

vvma::ClockParams to_cpp(const vvma_clock_params* cp) {
  need(cp, "clock params");
  return {cp->k, cp->t};
}

vvma::SimConfig to_cpp(const vvma_sim_config* cfg) {
  need(cfg, "sim config");
  vvma::SimConfig c;
  c.k = cfg->k;
  c.mode = cfg->mode == VVMA_SIM_VVMA ? vvma::SimMode::vvma : vvma::SimMode::baseline;
  c.record_trace = cfg->record_trace != 0;
  c.vv_unit_enabled = cfg->vv_unit_enabled != 0;
  c.trace_limit = cfg->trace_limit;
  return c;
}

vvma::TrainConfig to_cpp(const vvma_train_config* cfg) {
  vvma::TrainConfig c;
  if (cfg == nullptr) return c;
  c.clip_norm = cfg->clip_norm;
  c.learning_rate = cfg->learning_rate;
  c.steps = cfg->steps;
  c.batch = cfg->batch;
  c.seed = cfg->seed;
  c.optimizer = cfg->optimizer == VVMA_OPT_SGD ? vvma::OptimizerKind::sgd : vvma::OptimizerKind::adam;
  c.log_every = cfg->log_every;
  return c;
}

}  // namespace

extern "C" {

const char* vvma_last_error(void) { return g_last_error.c_str(); }

const char* vvma_status_name(vvma_status status) {
  switch (status) {
    case VVMA_OK: return "ok";
    case VVMA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case VVMA_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case VVMA_ERR_NUMERICAL: return "numerical failure";
    case VVMA_ERR_IO: return "I/O error";
    case VVMA_ERR_PARSE: return "parse error";
    case VVMA_ERR_BUDGET_EXCEEDED: return "budget exceeded";
    case VVMA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* vvma_version(void) { return "0.1.0"; }

const char* vvma_rng_name(void) { return vvma::Rng::kName.data(); }

void vvma_string_free(char* str) { std::free(str); }

// ---- matrices ---------------------------------------------------------------

vvma_status vvma_matrix_create(size_t rows, size_t cols, const double* data, vvma_matrix** out) {
  return guarded([&] {
    need(out, "out");
    vvma::DenseMatrix m(rows, cols);
    if (data != nullptr) {
      std::copy_n(data, m.size(), m.data().begin());
      vvma::require(m.all_finite(), vvma::ErrorCode::invalid_argument, "matrix contains non-finite entries");
    }
    *out = new vvma_matrix{std::move(m)};
  });
}

vvma_status vvma_matrix_random(size_t rows, size_t cols, const vvma_random_spec* spec, vvma_matrix** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    vvma::RandomSpec rs;
    rs.seed = spec->seed;
    if (spec->distribution == VVMA_DIST_UNIFORM)
      rs.distribution = vvma::Uniform{spec->a, spec->b};
    else
      rs.distribution = vvma::Gaussian{spec->a, spec->b};
    *out = new vvma_matrix{vvma::random_matrix(rows, cols, rs)};
  });
}

void vvma_matrix_free(vvma_matrix* m) { delete m; }
size_t vvma_matrix_rows(const vvma_matrix* m) { return m == nullptr ? 0 : m->value.rows(); }
size_t vvma_matrix_cols(const vvma_matrix* m) { return m == nullptr ? 0 : m->value.cols(); }
const double* vvma_matrix_data(const vvma_matrix* m) { return m == nullptr ? nullptr : m->value.data().data(); }

vvma_status vvma_matrix_multiply(const vvma_matrix* a, const vvma_matrix* b, vvma_matrix** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = new vvma_matrix{vvma::matmul(a->value, b->value)};
  });
}

vvma_status vvma_matrix_frob_norm(const vvma_matrix* m, double* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = vvma::frob_norm(m->value);
  });
}

vvma_status vvma_matrix_frob_dist(const vvma_matrix* a, const vvma_matrix* b, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = vvma::frob_dist(a->value, b->value);
  });
}

vvma_status vvma_matrix_max_abs_diff(const vvma_matrix* a, const vvma_matrix* b, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = vvma::max_abs((a->value - b->value).data());
  });
}

vvma_status vvma_singular_values(const vvma_matrix* m, double* out, size_t len) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    const vvma::Vector s = vvma::singular_values(m->value);
    vvma::require(len == s.size(), vvma::ErrorCode::shape_mismatch, "output length must equal min(rows, cols)");
    std::copy(s.begin(), s.end(), out);
  });
}

vvma_status vvma_optimal_lowrank_error(const vvma_matrix* m, size_t p, double* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = vvma::optimal_lowrank_error(m->value, p);
  });
}

// ---- VVMA parameters --------------------------------------------------------

vvma_status vvma_pad_shape(size_t m, size_t n, size_t k, size_t* r, size_t* c) {
  return guarded([&] {
    need(r, "r");
    need(c, "c");
    const vvma::BlockGrid g = vvma::pad_shape(m, n, k);
    *r = g.r;
    *c = g.c;
  });
}

vvma_status vvma_param_create(size_t k, size_t r, size_t c, vvma_init init, int diag_enabled, uint64_t seed,
                              vvma_param** out) {
  return guarded([&] {
    need(out, "out");
    vvma::InitSpec spec;
    switch (init) {
      case VVMA_INIT_ZEROS: spec.kind = vvma::InitKind::zeros; break;
      case VVMA_INIT_ONES: spec.kind = vvma::InitKind::ones; break;
      case VVMA_INIT_FAN_UNIFORM: spec.kind = vvma::InitKind::fan_uniform; break;
      default: vvma::fail(vvma::ErrorCode::invalid_argument, "unknown init kind");
    }
    spec.diag_enabled = diag_enabled != 0;
    *out = new vvma_param{vvma::new_vvma(k, r, c, spec, seed)};
  });
}

void vvma_param_free(vvma_param* p) { delete p; }
size_t vvma_param_k(const vvma_param* p) { return p == nullptr ? 0 : p->value.k(); }
size_t vvma_param_row_blocks(const vvma_param* p) { return p == nullptr ? 0 : p->value.row_blocks(); }
size_t vvma_param_col_blocks(const vvma_param* p) { return p == nullptr ? 0 : p->value.col_blocks(); }
int vvma_param_diag_enabled(const vvma_param* p) { return p != nullptr && p->value.diag_enabled() ? 1 : 0; }
double vvma_param_m_scale(const vvma_param* p) { return p == nullptr ? 0.0 : p->value.m_scale(); }
size_t vvma_param_count(const vvma_param* p) { return p == nullptr ? 0 : vvma::param_count(p->value); }

vvma_status vvma_param_expand(const vvma_param* p, vvma_matrix** out) {
  return guarded([&] {
    need(p, "p");
    need(out, "out");
    *out = new vvma_matrix{vvma::expand(p->value)};
  });
}

vvma_status vvma_param_matvec(const vvma_param* p, const double* x, size_t x_len, double* y, size_t y_len) {
  return guarded([&] {
    need(p, "p");
    need(x, "x");
    need(y, "y");
    vvma::require(y_len == p->value.rows(), vvma::ErrorCode::shape_mismatch, "output length must equal r*k");
    const vvma::Vector out = vvma::matvec(p->value, std::span<const double>(x, x_len));
    std::copy(out.begin(), out.end(), y);
  });
}

vvma_status vvma_param_to_json(const vvma_param* p, char** out) {
  return guarded([&] {
    need(p, "p");
    need(out, "out");
    *out = dup_string(vvma::to_json(p->value));
  });
}

vvma_status vvma_param_from_json(const char* json, vvma_param** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new vvma_param{vvma::vvma_from_json(json)};
  });
}

// ---- fitting ----------------------------------------------------------------

void vvma_fit_config_default(vvma_fit_config* cfg) {
  if (cfg == nullptr) return;
  const vvma::FitConfig d;
  *cfg = {d.learning_rate, d.steps, d.seed, d.adam_beta1, d.adam_beta2, d.adam_epsilon, d.log_every,
          d.diag_enabled ? 1 : 0};
}

size_t vvma_matched_rank(size_t m, size_t n, size_t k) {
  if (m == 0 || n == 0 || k == 0) return 0;
  return vvma::matched_rank(m, n, k);
}

vvma_status vvma_fit_vvma(const vvma_matrix* target, size_t k, const vvma_fit_config* cfg, vvma_param** out_param,
                          vvma_fit_report** out_report) {
  return guarded([&] {
    need(target, "target");
    need(cfg, "cfg");
    need(out_report, "out_report");
    const vvma::FitConfig c = to_cpp(cfg);
    auto [param, report] = vvma::fit_vvma(target->value, k, c);
    *out_report = new vvma_fit_report{std::move(report), c};
    if (out_param != nullptr) *out_param = new vvma_param{std::move(param)};
  });
}

vvma_status vvma_fit_lowrank(const vvma_matrix* target, size_t p, const vvma_fit_config* cfg, vvma_matrix** out_u,
                             vvma_matrix** out_v, vvma_fit_report** out_report) {
  return guarded([&] {
    need(target, "target");
    need(cfg, "cfg");
    need(out_report, "out_report");
    const vvma::FitConfig c = to_cpp(cfg);
    auto [param, report] = vvma::fit_lowrank(target->value, p, c);
    *out_report = new vvma_fit_report{std::move(report), c};
    if (out_u != nullptr) *out_u = new vvma_matrix{std::move(param.u)};
    if (out_v != nullptr) *out_v = new vvma_matrix{std::move(param.v)};
  });
}

void vvma_fit_report_free(vvma_fit_report* r) { delete r; }
double vvma_fit_report_final_loss(const vvma_fit_report* r) { return r == nullptr ? 0.0 : r->report.final_loss; }
size_t vvma_fit_report_params_fitted(const vvma_fit_report* r) { return r == nullptr ? 0 : r->report.params_fitted; }
double vvma_fit_report_wall_seconds(const vvma_fit_report* r) { return r == nullptr ? 0.0 : r->report.wall_seconds; }
size_t vvma_fit_report_curve_length(const vvma_fit_report* r) {
  return r == nullptr ? 0 : r->report.loss_curve.size();
}

vvma_status vvma_fit_report_curve_point(const vvma_fit_report* r, size_t index, size_t* step, double* loss) {
  return guarded([&] {
    need(r, "report");
    vvma::require(index < r->report.loss_curve.size(), vvma::ErrorCode::invalid_argument, "curve index out of range");
    if (step != nullptr) *step = r->report.loss_curve[index].step;
    if (loss != nullptr) *loss = r->report.loss_curve[index].loss;
  });
}

vvma_status vvma_fit_report_to_csv(const vvma_fit_report* r, char** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(vvma::to_csv(r->report));
  });
}

vvma_status vvma_fit_report_to_json(const vvma_fit_report* r, int include_timing, char** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(vvma::to_json(r->report, r->config, include_timing != 0));
  });
}

// ---- cost model -------------------------------------------------------------

vvma_status vvma_clocks(uint64_t m, uint64_t n, uint64_t repeats, const vvma_clock_params* cp, vvma_exec_mode mode,
                        uint64_t* out) {
  return guarded([&] {
    need(out, "out");
    const vvma::MatmulShape s{"", m, n, repeats, true};
    *out = mode == VVMA_EXEC_VVMA ? vvma::clocks_vvma(s, to_cpp(cp)) : vvma::clocks_baseline(s, to_cpp(cp));
  });
}

vvma_status vvma_flops(uint64_t m, uint64_t n, uint64_t repeats, const vvma_clock_params* cp, vvma_exec_mode mode,
                       uint64_t* out) {
  return guarded([&] {
    need(out, "out");
    const vvma::MatmulShape s{"", m, n, repeats, true};
    *out = vvma::flops(s, to_cpp(cp), mode == VVMA_EXEC_VVMA ? vvma::ExecMode::vvma : vvma::ExecMode::baseline);
  });
}

vvma_status vvma_cost_evaluate(const char* shapes_json, const vvma_clock_params* cp, vvma_cost_report* total,
                               char** json_out, char** csv_out) {
  return guarded([&] {
    need(shapes_json, "shapes_json");
    const vvma::ClockParams params = to_cpp(cp);
    vvma::validate(params);
    const auto shapes = vvma::shapes_from_json(shapes_json);
    const vvma::CostReport r = vvma::aggregate(shapes, params);
    std::string json;
    std::string csv;
    if (json_out != nullptr) json = vvma::cost_json(shapes, params);
    if (csv_out != nullptr) csv = vvma::cost_csv(shapes, params);
    if (total != nullptr)
      *total = {r.clocks_baseline, r.clocks_vvma, r.flops_baseline, r.flops_vvma,
                r.params_baseline, r.params_vvma, r.speedup};
    if (json_out != nullptr) *json_out = dup_string(json);
    if (csv_out != nullptr) *csv_out = dup_string(csv);
  });
}

// ---- simulator --------------------------------------------------------------

void vvma_sim_config_default(vvma_sim_config* cfg) {
  if (cfg == nullptr) return;
  const vvma::SimConfig d;
  *cfg = {d.k, VVMA_SIM_BASELINE, 0, 1, d.trace_limit};
}

vvma_status vvma_simulate_baseline(const vvma_matrix* w, const vvma_matrix* x, const vvma_sim_config* cfg,
                                   vvma_sim_result** out) {
  return guarded([&] {
    need(w, "w");
    need(x, "x");
    need(out, "out");
    vvma::SimResult r = vvma::simulate_baseline(w->value, x->value, to_cpp(cfg));
    vvma::DenseMatrix output = r.output;
    *out = new vvma_sim_result{std::move(r), vvma_matrix{std::move(output)}};
  });
}

vvma_status vvma_simulate_vvma(const vvma_param* p, const vvma_matrix* x, const vvma_sim_config* cfg,
                               vvma_sim_result** out) {
  return guarded([&] {
    need(p, "p");
    need(x, "x");
    need(out, "out");
    vvma::SimResult r = vvma::simulate_vvma(p->value, x->value, to_cpp(cfg));
    vvma::DenseMatrix output = r.output;
    *out = new vvma_sim_result{std::move(r), vvma_matrix{std::move(output)}};
  });
}

vvma_status vvma_simulate(const vvma_param* p, const vvma_matrix* x, const vvma_sim_config* cfg,
                          vvma_sim_result** out) {
  return guarded([&] {
    need(p, "p");
    need(x, "x");
    need(out, "out");
    vvma::SimResult r = vvma::simulate(p->value, x->value, to_cpp(cfg));
    vvma::DenseMatrix output = r.output;
    *out = new vvma_sim_result{std::move(r), vvma_matrix{std::move(output)}};
  });
}

void vvma_sim_result_free(vvma_sim_result* r) { delete r; }
uint64_t vvma_sim_result_cycles(const vvma_sim_result* r) { return r == nullptr ? 0 : r->result.cycles; }
uint64_t vvma_sim_result_weight_row_loads(const vvma_sim_result* r) {
  return r == nullptr ? 0 : r->result.weight_row_loads;
}
const vvma_matrix* vvma_sim_result_output(const vvma_sim_result* r) { return r == nullptr ? nullptr : &r->output; }
int vvma_sim_result_has_trace(const vvma_sim_result* r) { return r != nullptr && r->result.trace ? 1 : 0; }

size_t vvma_sim_result_event_count(const vvma_sim_result* r, vvma_event_kind kind) {
  if (r == nullptr || !r->result.trace) return 0;
  return r->result.trace->count(static_cast<vvma::EventKind>(kind));
}

vvma_status vvma_sim_result_trace_csv(const vvma_sim_result* r, char** out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    vvma::require(r->result.trace.has_value(), vvma::ErrorCode::invalid_argument, "simulation ran without a trace");
    *out = dup_string(vvma::trace_csv(*r->result.trace));
  });
}

// ---- training ---------------------------------------------------------------

void vvma_train_config_default(vvma_train_config* cfg) {
  if (cfg == nullptr) return;
  const vvma::TrainConfig d;
  *cfg = {d.clip_norm, d.learning_rate, d.steps, d.batch, d.seed, VVMA_OPT_ADAM, d.log_every};
}

vvma_status vvma_train_teacher(const char* arch, size_t k, int diag_enabled, const vvma_train_config* cfg,
                               uint64_t task_seed, vvma_train_report** out) {
  return guarded([&] {
    need(arch, "arch");
    need(cfg, "cfg");
    need(out, "out");
    const auto layers = vvma::parse_arch(arch, k, diag_enabled != 0);
    const vvma::TrainConfig c = to_cpp(cfg);
    const vvma::TeacherTask task = vvma::teacher_for(layers, task_seed);
    *out = new vvma_train_report{vvma::train(layers, task, c), c};
  });
}

vvma_status vvma_train_stress(double clip_norm, uint64_t seed, vvma_train_report** out) {
  return guarded([&] {
    need(out, "out");
    const vvma::StressPreset s = vvma::stress_preset(clip_norm, seed);
    *out = new vvma_train_report{vvma::train(s.arch, s.task, s.config), s.config};
  });
}

void vvma_train_report_free(vvma_train_report* r) { delete r; }
int vvma_train_report_diverged(const vvma_train_report* r) { return r != nullptr && r->report.diverged ? 1 : 0; }
double vvma_train_report_initial_loss(const vvma_train_report* r) {
  return r == nullptr ? 0.0 : r->report.initial_loss;
}
double vvma_train_report_final_loss(const vvma_train_report* r) { return r == nullptr ? 0.0 : r->report.final_loss; }
size_t vvma_train_report_steps_run(const vvma_train_report* r) { return r == nullptr ? 0 : r->report.steps_run; }

vvma_status vvma_train_report_to_csv(const vvma_train_report* r, char** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(vvma::to_csv(r->report));
  });
}

vvma_status vvma_train_report_to_json(const vvma_train_report* r, char** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(vvma::to_json(r->report, r->config));
  });
}

}  // extern "C"
