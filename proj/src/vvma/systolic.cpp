#include "vvma/systolic.hpp"

#include <algorithm>

#include "vvma/error.hpp"

namespace vvma {

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::load_row: return "load_row";
    case EventKind::fill: return "fill";
    case EventKind::stream_in: return "stream_in";
    case EventKind::stream_out: return "stream_out";
    case EventKind::vv_mul: return "vv_mul";
  }
  return "unknown";
}

std::size_t SimTrace::count(EventKind kind) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const TraceEvent& e) { return e.kind == kind; }));
}

namespace {

struct StreamColumn {
  std::size_t block_i = 0;
  std::size_t block_j = 0;
  std::size_t col = 0;
  bool vv = false;
  std::vector<double> values;  // k entries, already through the pre-unit
};

class Recorder {
 public:
  explicit Recorder(bool enabled) {
    if (enabled) trace_.emplace();
  }
  void emit(std::uint64_t cycle, EventKind kind, std::size_t i, std::size_t j) {
    if (trace_) trace_->events.push_back({cycle, kind, i, j});
  }
  std::optional<SimTrace> take() { return std::move(trace_); }

 private:
  std::optional<SimTrace> trace_;
};

// Register-level model of a k x k weight-stationary array. PE(q, p) holds the
// weight for input q and output p; inputs move right, partial sums move down.
class WeightStationaryArray {
 public:
  explicit WeightStationaryArray(std::size_t k)
      : k_(k), weight_(k * k, 0.0), x_(k * k, 0.0), tag_(k * k, kBubble), psum_(k * k, 0.0) {}

  /// Loads output row `a` of a block into every PE of column a.
  void load_row(std::size_t a, std::span<const double> row) {
    for (std::size_t q = 0; q < k_; ++q) weight_[q * k_ + a] = row[q];
  }

  /// Streams `cols` starting at cycle `start`; column u enters the input
  /// register at start + u. Returns the cycle after the last write-back and
  /// fills `out[u]` with the k outputs of column u.
  std::uint64_t stream(std::uint64_t start, const std::vector<StreamColumn>& cols,
                       std::vector<std::vector<double>>& out, Recorder& rec) {
    const std::int64_t n = static_cast<std::int64_t>(cols.size());
    const std::int64_t k = static_cast<std::int64_t>(k_);
    out.assign(cols.size(), std::vector<double>(k_, 0.0));
    std::fill(tag_.begin(), tag_.end(), kBubble);
    const std::uint64_t end = start + cols.size() + 2 * k_;
    for (std::uint64_t cycle = start; cycle < end; ++cycle) {
      const std::int64_t rel = static_cast<std::int64_t>(cycle - start);
      if (rel < n) {
        const auto& c = cols[static_cast<std::size_t>(rel)];
        rec.emit(cycle, EventKind::stream_in, c.block_i, c.block_j);
        if (c.vv) rec.emit(cycle, EventKind::vv_mul, c.block_i, c.block_j);
      }
      for (std::int64_t q = k - 1; q >= 0; --q) {
        for (std::int64_t p = k - 1; p >= 0; --p) {
          const std::size_t idx = static_cast<std::size_t>(q * k + p);
          std::int64_t tag;
          double val;
          if (p == 0) {
            // Element q of column u reaches the first PE one register stage
            // plus q skew cycles after the column entered.
            const std::int64_t u = rel - 1 - q;
            tag = (u >= 0 && u < n) ? u : kBubble;
            val = tag == kBubble ? 0.0 : cols[static_cast<std::size_t>(u)].values[static_cast<std::size_t>(q)];
          } else {
            tag = tag_[idx - 1];
            val = x_[idx - 1];
          }
          const double above = q == 0 ? 0.0 : psum_[idx - k_];
          x_[idx] = val;
          tag_[idx] = tag;
          psum_[idx] = tag == kBubble ? 0.0 : above + weight_[idx] * val;
        }
      }
      const std::size_t bottom = (k_ - 1) * k_;
      for (std::size_t p = 0; p < k_; ++p) {
        const std::int64_t tag = tag_[bottom + p];
        if (tag == kBubble) continue;
        out[static_cast<std::size_t>(tag)][p] = psum_[bottom + p];
        if (p == k_ - 1) {
          const auto& c = cols[static_cast<std::size_t>(tag)];
          rec.emit(cycle, EventKind::stream_out, c.block_i, c.block_j);
        }
      }
    }
    return end;
  }

 private:
  static constexpr std::int64_t kBubble = -1;
  std::size_t k_;
  std::vector<double> weight_;
  std::vector<double> x_;
  std::vector<std::int64_t> tag_;
  std::vector<double> psum_;
};

void check_trace_budget(const SimConfig& cfg, SimMode mode, std::size_t blocks, std::size_t t, bool vv_events) {
  if (!cfg.record_trace) return;
  const std::uint64_t estimate = trace_event_estimate(mode, cfg.k, blocks, t, vv_events);
  if (estimate > cfg.trace_limit)
    fail(ErrorCode::budget_exceeded, "trace would record " + std::to_string(estimate) + " events, above the limit of " +
                                         std::to_string(cfg.trace_limit));
}

PartialGrid empty_grid(std::size_t r, std::size_t c) { return {r, c, std::vector<std::optional<DenseMatrix>>(r * c)}; }

void store_partial(PartialGrid& grid, std::size_t k, const std::vector<StreamColumn>& cols,
                   const std::vector<std::vector<double>>& out, std::size_t t) {
  for (std::size_t u = 0; u < cols.size(); ++u) {
    auto& slot = grid.blocks[cols[u].block_i * grid.c + cols[u].block_j];
    if (!slot) slot.emplace(k, t);
    for (std::size_t a = 0; a < k; ++a) slot->at(a, cols[u].col) = out[u][a];
  }
}

}  // namespace

SimResult simulate(const VvmaParam& p, const DenseMatrix& x, const SimConfig& cfg) {
  if (cfg.mode == SimMode::vvma) return simulate_vvma(p, x, cfg);
  return simulate_baseline(expand(p), x, cfg);
}

std::uint64_t trace_event_estimate(SimMode mode, std::size_t k, std::size_t blocks, std::size_t t, bool vv_events) {
  const std::uint64_t b = blocks;
  if (mode == SimMode::baseline) return b * (k + 1 + 2 * t);
  return k + 1 + b * t * (vv_events ? 3 : 2);
}

SimResult simulate_baseline(const DenseMatrix& w, const DenseMatrix& x, const SimConfig& cfg) {
  require(cfg.k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
  require(!w.empty() && x.cols() >= 1, ErrorCode::invalid_argument, "empty simulation input");
  require(w.cols() == x.rows(), ErrorCode::shape_mismatch,
          "W has " + std::to_string(w.cols()) + " columns but X has " + std::to_string(x.rows()) + " rows");
  const std::size_t k = cfg.k;
  const std::size_t t = x.cols();
  const BlockGrid grid = pad_shape(w.rows(), w.cols(), k);
  check_trace_budget(cfg, SimMode::baseline, grid.r * grid.c, t, false);

  const DenseMatrix wp = w.padded(grid.r * k, grid.c * k);
  const DenseMatrix xp = x.padded(grid.c * k, t);
  WeightStationaryArray array(k);
  Recorder rec(cfg.record_trace);
  PartialGrid partials = empty_grid(grid.r, grid.c);
  std::vector<StreamColumn> cols(t);
  std::vector<std::vector<double>> out;
  std::vector<double> row(k);
  std::uint64_t cycle = 0;
  std::uint64_t loads = 0;

  for (std::size_t i = 0; i < grid.r; ++i) {
    for (std::size_t j = 0; j < grid.c; ++j) {
      for (std::size_t a = 0; a < k; ++a) {
        auto src = wp.row(i * k + a);
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(j * k), k, row.begin());
        array.load_row(a, row);
        rec.emit(cycle++, EventKind::load_row, i, j);
        ++loads;
      }
      rec.emit(cycle, EventKind::fill, i, j);
      for (std::size_t s = 0; s < t; ++s) {
        cols[s] = {i, j, s, false, std::vector<double>(k)};
        for (std::size_t b = 0; b < k; ++b) cols[s].values[b] = xp.at(j * k + b, s);
      }
      cycle = array.stream(cycle, cols, out, rec);
      store_partial(partials, k, cols, out, t);
    }
  }

  SimResult res;
  res.output = accumulate_partials(partials).cropped(w.rows(), t);
  res.cycles = cycle;
  res.weight_row_loads = loads;
  res.trace = rec.take();
  return res;
}

SimResult simulate_vvma(const VvmaParam& p, const DenseMatrix& x, const SimConfig& cfg) {
  require(cfg.k == p.k(), ErrorCode::shape_mismatch, "simulator k does not match the VVMA block size");
  require(x.cols() >= 1, ErrorCode::invalid_argument, "empty simulation input");
  require(x.rows() == p.cols(), ErrorCode::shape_mismatch,
          "VVMA expects " + std::to_string(p.cols()) + " input rows, X has " + std::to_string(x.rows()));
  const std::size_t k = p.k();
  const std::size_t t = x.cols();
  const std::size_t r = p.row_blocks();
  const std::size_t c = p.col_blocks();
  const bool scale_inputs = cfg.vv_unit_enabled && p.diag_enabled();
  check_trace_budget(cfg, SimMode::vvma, r * c, t, scale_inputs);

  WeightStationaryArray array(k);
  Recorder rec(cfg.record_trace);
  std::uint64_t cycle = 0;
  std::vector<double> row(k);
  for (std::size_t a = 0; a < k; ++a) {
    auto m = p.shared().row(a);
    for (std::size_t b = 0; b < k; ++b) row[b] = p.m_scale() * m[b];
    array.load_row(a, row);
    rec.emit(cycle++, EventKind::load_row, 0, 0);
  }
  rec.emit(cycle, EventKind::fill, 0, 0);

  std::vector<StreamColumn> cols;
  cols.reserve(r * c * t);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t s = 0; s < t; ++s) {
        StreamColumn col{i, j, s, scale_inputs, std::vector<double>(k)};
        for (std::size_t b = 0; b < k; ++b) col.values[b] = x.at(j * k + b, s);
        if (scale_inputs) {
          auto v = p.diag(i, j);
          for (std::size_t b = 0; b < k; ++b) col.values[b] *= v[b];
        }
        cols.push_back(std::move(col));
      }
    }
  }
  std::vector<std::vector<double>> out;
  cycle = array.stream(cycle, cols, out, rec);
  PartialGrid partials = empty_grid(r, c);
  store_partial(partials, k, cols, out, t);

  SimResult res;
  res.output = accumulate_partials(partials);
  res.cycles = cycle;
  res.weight_row_loads = k;
  res.trace = rec.take();
  return res;
}

DenseMatrix accumulate_partials(const PartialGrid& grid) {
  require(grid.r >= 1 && grid.c >= 1 && grid.blocks.size() == grid.r * grid.c, ErrorCode::shape_mismatch,
          "partial grid does not hold r*c entries");
  const auto& first = grid.blocks.front();
  require(first.has_value(), ErrorCode::invalid_argument, "missing partial for block (0, 0)");
  const std::size_t k = first->rows();
  const std::size_t t = first->cols();
  DenseMatrix y(grid.r * k, t);
  for (std::size_t i = 0; i < grid.r; ++i) {
    for (std::size_t j = 0; j < grid.c; ++j) {
      const auto& part = grid.blocks[i * grid.c + j];
      require(part.has_value(), ErrorCode::invalid_argument,
              "missing partial for block (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      require(part->rows() == k && part->cols() == t, ErrorCode::shape_mismatch, "partial block shape mismatch");
      for (std::size_t a = 0; a < k; ++a) {
        auto dst = y.row(i * k + a);
        auto src = part->row(a);
        for (std::size_t s = 0; s < t; ++s) dst[s] += src[s];
      }
    }
  }
  return y;
}

std::string trace_csv(const SimTrace& trace) {
  std::string out = "cycle,kind,block_i,block_j\n";
  for (const auto& e : trace.events) {
    out += std::to_string(e.cycle) + ',' + to_string(e.kind) + ',' + std::to_string(e.block_i) + ',' +
           std::to_string(e.block_j) + '\n';
  }
  return out;
}

}  // namespace vvma
