// vvma: command-line driver for fitting, clock modeling, systolic simulation
// and training experiments. Links against the C API only.

#include <vvma/vvma.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheck = 2;

// Raised for bad input; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  vvma_status status;
  ApiError(vvma_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(vvma_status s, const char* what) {
  if (s != VVMA_OK)
    throw ApiError(s, std::string(what) + ": " + vvma_status_name(s) + ": " + vvma_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using MatrixPtr = std::unique_ptr<vvma_matrix, Deleter<vvma_matrix, vvma_matrix_free>>;
using ParamPtr = std::unique_ptr<vvma_param, Deleter<vvma_param, vvma_param_free>>;
using FitReportPtr = std::unique_ptr<vvma_fit_report, Deleter<vvma_fit_report, vvma_fit_report_free>>;
using SimResultPtr = std::unique_ptr<vvma_sim_result, Deleter<vvma_sim_result, vvma_sim_result_free>>;
using TrainReportPtr = std::unique_ptr<vvma_train_report, Deleter<vvma_train_report, vvma_train_report_free>>;

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  vvma_string_free(s);
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << contents;
    if (!f.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Collects primary artifacts for one run and writes them plus the manifest.
class Output {
 public:
  Output(std::string command, std::vector<std::string> argv, std::optional<fs::path> dir)
      : command_(std::move(command)), argv_(std::move(argv)), dir_(std::move(dir)), started_(utc_now()),
        t0_(std::chrono::steady_clock::now()) {}

  bool enabled() const { return dir_.has_value(); }

  void add(const std::string& name, const std::string& contents) {
    if (dir_) files_.emplace_back(name, contents);
  }

  void finish(const json& config, std::uint64_t seed, int exit_code) {
    if (!dir_) return;
    fs::create_directories(*dir_);
    json artifacts = json::array();
    for (const auto& [name, contents] : files_) {
      write_atomic(*dir_ / name, contents);
      artifacts.push_back(name);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["config"] = config;
    m["seed"] = seed;
    m["artifacts"] = artifacts;
    m["tool_version"] = vvma_version();
    m["rng"] = vvma_rng_name();
    m["exit_code"] = exit_code;
    m["started_at"] = started_;
    m["wall_seconds"] = wall;
    write_atomic(*dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::optional<fs::path> dir_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::optional<fs::path> out_dir(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t steps = 30000;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::string dist = "gaussian";
  std::string baselines = "all";
  std::string diag = "on";
  std::size_t log_every = 100;
  std::string out;
};

struct MethodResult {
  std::string method;
  std::size_t params = 0;
  double loss = 0.0;
  std::string csv;
  std::string json_text;
};

double ratio(double loss, double optimal) {
  if (optimal > 0.0) return loss / optimal;
  return loss == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
}

// Runs fn on its own thread; a thrown error is rethrown on join.
class Task {
 public:
  template <typename F>
  explicit Task(F fn) : thread_([this, fn] {
      try {
        fn();
      } catch (...) {
        error_ = std::current_exception();
      }
    }) {}
  void join() {
    thread_.join();
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
  std::thread thread_;
};

int cmd_fit(const FitArgs& a, const std::vector<std::string>& argv) {
  Output out("fit", argv, out_dir(a.out));
  const bool want_vvma = a.baselines == "vvma" || a.baselines == "all";
  const bool want_lowrank = a.baselines == "lowrank" || a.baselines == "all";
  const bool want_optimal = a.baselines == "optimal" || a.baselines == "all";
  const std::size_t p = vvma_matched_rank(a.n, a.n, a.k);

  vvma_random_spec spec{};
  if (a.dist == "gaussian") {
    spec = {VVMA_DIST_GAUSSIAN, 0.0, 1.0, a.seed};
  } else {
    spec = {VVMA_DIST_UNIFORM, -1.0, 1.0, a.seed};
  }
  vvma_matrix* raw = nullptr;
  check(vvma_matrix_random(a.n, a.n, &spec, &raw), "target");
  MatrixPtr target(raw);

  vvma_fit_config cfg;
  vvma_fit_config_default(&cfg);
  cfg.learning_rate = a.lr;
  cfg.steps = a.steps;
  cfg.seed = a.seed + 1;
  cfg.log_every = a.log_every;
  cfg.diag_enabled = a.diag == "on" ? 1 : 0;

  MethodResult vv, lr, opt;
  vv.method = "vvma";
  lr.method = "lowrank";
  opt.method = "optimal";
  auto run_vvma = [&] {
    vvma_fit_report* rep = nullptr;
    check(vvma_fit_vvma(target.get(), a.k, &cfg, nullptr, &rep), "fit_vvma");
    FitReportPtr r(rep);
    vv.params = vvma_fit_report_params_fitted(rep);
    vv.loss = vvma_fit_report_final_loss(rep);
    char* s = nullptr;
    check(vvma_fit_report_to_csv(rep, &s), "fit_vvma csv");
    vv.csv = take(s);
    check(vvma_fit_report_to_json(rep, 0, &s), "fit_vvma json");
    vv.json_text = take(s);
  };
  auto run_lowrank = [&] {
    vvma_fit_report* rep = nullptr;
    check(vvma_fit_lowrank(target.get(), p, &cfg, nullptr, nullptr, &rep), "fit_lowrank");
    FitReportPtr r(rep);
    lr.params = vvma_fit_report_params_fitted(rep);
    lr.loss = vvma_fit_report_final_loss(rep);
    char* s = nullptr;
    check(vvma_fit_report_to_csv(rep, &s), "fit_lowrank csv");
    lr.csv = take(s);
    check(vvma_fit_report_to_json(rep, 0, &s), "fit_lowrank json");
    lr.json_text = take(s);
  };
  auto run_optimal = [&] {
    check(vvma_optimal_lowrank_error(target.get(), p, &opt.loss), "optimal");
    opt.params = p * (2 * a.n);
  };

  // The three computations are independent; run them concurrently.
  std::vector<std::unique_ptr<Task>> tasks;
  if (want_lowrank) tasks.push_back(std::make_unique<Task>(run_lowrank));
  tasks.push_back(std::make_unique<Task>(run_optimal));
  if (want_vvma) run_vvma();
  for (auto& t : tasks) t->join();

  std::vector<const MethodResult*> rows;
  if (want_vvma) rows.push_back(&vv);
  if (want_lowrank) rows.push_back(&lr);
  if (want_optimal) rows.push_back(&opt);

  std::string table = "method,params,final_loss,ratio_to_optimal\n";
  for (const auto* r : rows)
    table += r->method + "," + std::to_string(r->params) + "," + fmt(r->loss) + "," + fmt(ratio(r->loss, opt.loss)) + "\n";
  std::cout << "n=" << a.n << " k=" << a.k << " p=" << p << "\n" << table;

  // Eckart-Young: no rank-p fit may beat the truncated SVD.
  int code = kExitOk;
  if (want_lowrank && lr.loss < opt.loss * (1.0 - 1e-9)) {
    std::cerr << "check failed: lowrank loss below the truncated-SVD optimum\n";
    code = kExitCheck;
  }

  json config;
  config["n"] = a.n;
  config["k"] = a.k;
  config["p"] = p;
  config["steps"] = a.steps;
  config["learning_rate"] = a.lr;
  config["dist"] = a.dist;
  config["baselines"] = a.baselines;
  config["diag"] = a.diag;
  config["log_every"] = a.log_every;
  config["target_seed"] = a.seed;
  config["init_seed"] = cfg.seed;

  if (want_vvma) {
    out.add("fit_vvma.csv", vv.csv);
    out.add("fit_vvma.json", vv.json_text + "\n");
  }
  if (want_lowrank) {
    out.add("fit_lowrank.csv", lr.csv);
    out.add("fit_lowrank.json", lr.json_text + "\n");
  }
  if (want_optimal) {
    json o;
    o["method"] = "optimal";
    o["p"] = p;
    o["params"] = opt.params;
    o["final_loss"] = opt.loss;
    out.add("optimal.json", o.dump(2) + "\n");
  }
  out.add("comparison.csv", table);
  out.finish(config, a.seed, code);
  return code;
}

// ---- clocks ----------------------------------------------------------------

struct ClocksArgs {
  std::string shapes;
  std::uint64_t k = 32;
  std::uint64_t t = 1;
  std::string out;
};

int cmd_clocks(const ClocksArgs& a, const std::vector<std::string>& argv) {
  Output out("clocks", argv, out_dir(a.out));
  const std::string text = read_file(a.shapes);
  const vvma_clock_params cp{a.k, a.t};
  vvma_cost_report total{};
  char* js = nullptr;
  char* csv = nullptr;
  check(vvma_cost_evaluate(text.c_str(), &cp, &total, &js, &csv), "cost model");
  const std::string json_text = take(js);
  const std::string csv_text = take(csv);
  std::cout << csv_text;

  json config;
  config["shapes"] = a.shapes;
  config["k"] = a.k;
  config["t"] = a.t;
  out.add("cost.csv", csv_text);
  out.add("cost.json", json_text + "\n");
  out.finish(config, 0, kExitOk);
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::size_t k = 8;
  std::string blocks = "8x8";
  std::size_t t = 1;
  std::string mode = "both";
  bool trace = false;
  std::size_t trace_limit = 1000000;
  std::uint64_t seed = 0;
  std::string out;
};

std::pair<std::size_t, std::size_t> parse_blocks(const std::string& s) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw UsageError("--blocks expects RxC, got '" + s + "'");
  std::size_t r = 0, c = 0;
  const char* b = s.data();
  auto r1 = std::from_chars(b, b + x, r);
  auto r2 = std::from_chars(b + x + 1, b + s.size(), c);
  if (r1.ec != std::errc() || r1.ptr != b + x || r2.ec != std::errc() || r2.ptr != b + s.size() || r == 0 || c == 0)
    throw UsageError("--blocks expects RxC with positive integers, got '" + s + "'");
  return {r, c};
}

MatrixPtr random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  vvma_random_spec spec{VVMA_DIST_GAUSSIAN, 0.0, 1.0, seed};
  vvma_matrix* m = nullptr;
  check(vvma_matrix_random(rows, cols, &spec, &m), "random matrix");
  return MatrixPtr(m);
}

// Random shared matrix with random diagonals, built through the JSON codec.
ParamPtr random_param(std::size_t k, std::size_t r, std::size_t c, std::uint64_t seed) {
  vvma_param* raw = nullptr;
  check(vvma_param_create(k, r, c, VVMA_INIT_FAN_UNIFORM, 1, seed, &raw), "param");
  ParamPtr base(raw);
  char* s = nullptr;
  check(vvma_param_to_json(base.get(), &s), "param json");
  json j = json::parse(take(s));
  MatrixPtr d = random_matrix(r * c, k, seed + 1);
  const double* v = vvma_matrix_data(d.get());
  json diags = json::array();
  for (std::size_t b = 0; b < r * c; ++b) diags.push_back(std::vector<double>(v + b * k, v + (b + 1) * k));
  j["diags"] = diags;
  check(vvma_param_from_json(j.dump().c_str(), &raw), "param from json");
  return ParamPtr(raw);
}

json event_counts(const vvma_sim_result* r) {
  json e;
  e["load_row"] = vvma_sim_result_event_count(r, VVMA_EVENT_LOAD_ROW);
  e["fill"] = vvma_sim_result_event_count(r, VVMA_EVENT_FILL);
  e["stream_in"] = vvma_sim_result_event_count(r, VVMA_EVENT_STREAM_IN);
  e["stream_out"] = vvma_sim_result_event_count(r, VVMA_EVENT_STREAM_OUT);
  e["vv_mul"] = vvma_sim_result_event_count(r, VVMA_EVENT_VV_MUL);
  return e;
}

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
  const auto [rb, cb] = parse_blocks(a.blocks);
  const std::size_t m = rb * a.k;
  const std::size_t n = cb * a.k;
  MatrixPtr x = random_matrix(n, a.t, a.seed);

  vvma_sim_config cfg;
  vvma_sim_config_default(&cfg);
  cfg.k = a.k;
  cfg.record_trace = a.trace ? 1 : 0;
  cfg.trace_limit = a.trace_limit;
  const vvma_clock_params cp{a.k, a.t};

  Output out("simulate", argv, out_dir(a.out));
  json summary;
  summary["k"] = a.k;
  summary["blocks"] = {rb, cb};
  summary["t"] = a.t;
  summary["seed"] = a.seed;
  bool ok = true;

  auto report = [&](const char* name, const vvma_sim_result* res, const vvma_matrix* dense_w, vvma_exec_mode em) {
    MatrixPtr expect;
    vvma_matrix* e = nullptr;
    check(vvma_matrix_multiply(dense_w, x.get(), &e), "oracle");
    expect.reset(e);
    double err = 0.0, scale = 0.0;
    check(vvma_matrix_max_abs_diff(vvma_sim_result_output(res), expect.get(), &err), "oracle diff");
    check(vvma_matrix_frob_norm(expect.get(), &scale), "oracle norm");
    const bool oracle_ok = err <= 1e-10 * std::max(1.0, scale);
    std::uint64_t closed = 0;
    check(vvma_clocks(m, n, 1, &cp, em, &closed), "closed form");
    const std::uint64_t cycles = vvma_sim_result_cycles(res);
    const bool clocks_ok = cycles == closed;
    ok = ok && oracle_ok && clocks_ok;

    json r;
    r["cycles"] = cycles;
    r["closed_form_cycles"] = closed;
    r["weight_row_loads"] = vvma_sim_result_weight_row_loads(res);
    r["max_abs_error"] = err;
    r["oracle_pass"] = oracle_ok;
    r["clocks_pass"] = clocks_ok;
    if (vvma_sim_result_has_trace(res)) {
      r["events"] = event_counts(res);
      char* s = nullptr;
      check(vvma_sim_result_trace_csv(res, &s), "trace csv");
      out.add(std::string("trace_") + name + ".csv", take(s));
    }
    summary[name] = r;
    std::cout << name << ": cycles=" << cycles << " closed_form=" << closed
              << " oracle=" << (oracle_ok ? "pass" : "FAIL") << " clocks=" << (clocks_ok ? "pass" : "FAIL") << "\n";
  };

  if (a.mode == "baseline" || a.mode == "both") {
    MatrixPtr w = random_matrix(m, n, a.seed + 1);
    cfg.mode = VVMA_SIM_BASELINE;
    vvma_sim_result* r = nullptr;
    check(vvma_simulate_baseline(w.get(), x.get(), &cfg, &r), "simulate baseline");
    SimResultPtr res(r);
    report("baseline", res.get(), w.get(), VVMA_EXEC_BASELINE);
  }
  if (a.mode == "vvma" || a.mode == "both") {
    ParamPtr p = random_param(a.k, rb, cb, a.seed + 2);
    vvma_matrix* e = nullptr;
    check(vvma_param_expand(p.get(), &e), "expand");
    MatrixPtr w(e);
    cfg.mode = VVMA_SIM_VVMA;
    vvma_sim_result* r = nullptr;
    check(vvma_simulate_vvma(p.get(), x.get(), &cfg, &r), "simulate vvma");
    SimResultPtr res(r);
    report("vvma", res.get(), w.get(), VVMA_EXEC_VVMA);
  }
  summary["pass"] = ok;

  json config;
  config["k"] = a.k;
  config["blocks"] = a.blocks;
  config["t"] = a.t;
  config["mode"] = a.mode;
  config["trace"] = a.trace;
  config["trace_limit"] = a.trace_limit;
  config["seed"] = a.seed;
  out.add("simulate.json", summary.dump(2) + "\n");
  const int code = ok ? kExitOk : kExitCheck;
  out.finish(config, a.seed, code);
  if (!ok) std::cerr << "check failed: simulator disagrees with the oracle or the closed form\n";
  return code;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string task = "teacher";
  std::string arch;
  std::size_t k = 8;
  std::string diag = "on";
  double clip = 1.0;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;
  double lr = 1e-2;
  std::string optimizer = "adam";
  std::size_t batch = 0;
  std::size_t log_every = 10;
  std::string out;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  Output out("train", argv, out_dir(a.out));
  json config;
  config["task"] = a.task;
  config["clip"] = a.clip;
  config["seed"] = a.seed;
  vvma_train_report* raw = nullptr;
  if (a.task == "stress") {
    check(vvma_train_stress(a.clip, a.seed, &raw), "train stress");
  } else {
    if (a.arch.empty()) throw UsageError("--arch is required for the teacher task");
    vvma_train_config cfg;
    vvma_train_config_default(&cfg);
    cfg.clip_norm = a.clip;
    cfg.learning_rate = a.lr;
    cfg.steps = a.steps;
    cfg.batch = a.batch;
    cfg.seed = a.seed;
    cfg.optimizer = a.optimizer == "sgd" ? VVMA_OPT_SGD : VVMA_OPT_ADAM;
    cfg.log_every = a.log_every;
    const vvma_status s = vvma_train_teacher(a.arch.c_str(), a.k, a.diag == "on" ? 1 : 0, &cfg, a.seed, &raw);
    if (s == VVMA_ERR_INVALID_ARGUMENT || s == VVMA_ERR_PARSE) throw UsageError(vvma_last_error());
    check(s, "train teacher");
    config["arch"] = a.arch;
    config["k"] = a.k;
    config["diag"] = a.diag;
    config["steps"] = a.steps;
    config["learning_rate"] = a.lr;
    config["optimizer"] = a.optimizer;
    config["batch"] = a.batch;
    config["log_every"] = a.log_every;
  }
  TrainReportPtr rep(raw);
  char* s = nullptr;
  check(vvma_train_report_to_csv(rep.get(), &s), "train csv");
  const std::string csv = take(s);
  check(vvma_train_report_to_json(rep.get(), &s), "train json");
  const std::string js = take(s);

  std::cout << "initial_loss=" << fmt(vvma_train_report_initial_loss(rep.get()))
            << " final_loss=" << fmt(vvma_train_report_final_loss(rep.get()))
            << " steps_run=" << vvma_train_report_steps_run(rep.get())
            << " diverged=" << (vvma_train_report_diverged(rep.get()) ? "true" : "false") << "\n";

  out.add("train.csv", csv);
  out.add("train.json", js + "\n");
  out.finish(config, a.seed, kExitOk);
  return kExitOk;
}

// ---- dispatch --------------------------------------------------------------

int run(std::vector<std::string> args);

int cmd_rerun(const std::string& manifest_path, const std::string& out) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed manifest: ") + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw UsageError("manifest has no argv");
  std::vector<std::string> args = m["argv"].get<std::vector<std::string>>();
  if (!out.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--out") {
        args[i + 1] = out;
        replaced = true;
      }
    if (!replaced) {
      args.push_back("--out");
      args.push_back(out);
    }
  }
  return run(std::move(args));
}

int run(std::vector<std::string> args) {
  CLI::App app{"VVMA fitting, cost modeling, simulation and training experiments", "vvma"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vvma_version()));

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit VVMA and low-rank parametrizations to a random square target");
  f->add_option("--n", fit.n, "Target dimension")->required()->check(CLI::PositiveNumber);
  f->add_option("--k", fit.k, "Shared matrix size")->required()->check(CLI::PositiveNumber);
  f->add_option("--steps", fit.steps, "Adam steps")->capture_default_str()->check(CLI::PositiveNumber);
  f->add_option("--lr", fit.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  f->add_option("--seed", fit.seed, "Seed")->capture_default_str();
  f->add_option("--dist", fit.dist, "Target distribution")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "uniform"}));
  f->add_option("--baselines", fit.baselines, "Methods to report")
      ->capture_default_str()
      ->check(CLI::IsMember({"vvma", "lowrank", "optimal", "all"}));
  f->add_option("--diag", fit.diag, "VVMA diagonals")->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  f->add_option("--log-every", fit.log_every, "Loss logging interval")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  f->add_option("--out", fit.out, "Output directory");

  ClocksArgs clk;
  auto* c = app.add_subcommand("clocks", "Evaluate the clock and FLOP model on a shapes file");
  c->add_option("--shapes", clk.shapes, "Shapes JSON file")->required();
  c->add_option("--k", clk.k, "Array size")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--t", clk.t, "Vectors per block")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--out", clk.out, "Output directory");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the systolic array simulator on a seeded random instance");
  s->add_option("--k", sim.k, "Array size")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--blocks", sim.blocks, "Block grid RxC")->capture_default_str();
  s->add_option("--t", sim.t, "Vectors per block")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--mode", sim.mode, "Dataflow")->capture_default_str()->check(CLI::IsMember({"baseline", "vvma", "both"}));
  s->add_flag("--trace", sim.trace, "Record the event trace");
  s->add_option("--trace-limit", sim.trace_limit, "Maximum trace events")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  s->add_option("--out", sim.out, "Output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a small network on a teacher-student or stress task");
  t->add_option("--task", tr.task, "Task")->capture_default_str()->check(CLI::IsMember({"teacher", "stress"}));
  t->add_option("--arch", tr.arch, "Architecture, e.g. 16,vvma:16,tanh,vvma:16");
  t->add_option("--k", tr.k, "Shared matrix size")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--diag", tr.diag, "VVMA diagonals")->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  t->add_option("--clip", tr.clip, "Global gradient norm clip")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--steps", tr.steps, "Training steps")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Seed")->capture_default_str();
  t->add_option("--lr", tr.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--optimizer", tr.optimizer, "Optimizer")
      ->capture_default_str()
      ->check(CLI::IsMember({"sgd", "adam"}));
  t->add_option("--batch", tr.batch, "Batch size, 0 for full batch")->capture_default_str();
  t->add_option("--log-every", tr.log_every, "Loss logging interval")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  t->add_option("--out", tr.out, "Output directory");

  std::string manifest, rerun_out;
  auto* r = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
  r->add_option("manifest", manifest, "Path to manifest.json")->required();
  r->add_option("--out", rerun_out, "Output directory for the repeated run");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (*f) return cmd_fit(fit, args);
  if (*c) return cmd_clocks(clk, args);
  if (*s) return cmd_simulate(sim, args);
  if (*t) return cmd_train(tr, args);
  return cmd_rerun(manifest, rerun_out);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(std::move(args));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status == VVMA_ERR_NUMERICAL ? kExitCheck : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
