#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vvma/core.hpp"
#include "vvma/matrix.hpp"

namespace vvma {

enum class SimMode { baseline, vvma };

struct SimConfig {
  std::size_t k = 8;
  SimMode mode = SimMode::baseline;
  bool record_trace = false;
  /// VVMA only: when false the vector-vector pre-unit passes inputs through
  /// unscaled, as if every diagonal were all ones.
  bool vv_unit_enabled = true;
  std::size_t trace_limit = 1'000'000;
};

enum class EventKind { load_row, fill, stream_in, stream_out, vv_mul };

const char* to_string(EventKind kind) noexcept;

struct TraceEvent {
  std::uint64_t cycle = 0;
  EventKind kind = EventKind::load_row;
  std::size_t block_i = 0;
  std::size_t block_j = 0;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct SimTrace {
  std::vector<TraceEvent> events;
  std::size_t count(EventKind kind) const noexcept;
};

struct SimResult {
  DenseMatrix output;  // rows of W (or expand(p)) x t
  std::uint64_t cycles = 0;
  std::uint64_t weight_row_loads = 0;
  std::optional<SimTrace> trace;
};

/// Weight-stationary k x k array. Every block of W is loaded one row per
/// cycle, then its t input columns stream through a one-cycle input
/// register and the skewed array; outputs leave 2k - 1 cycles after their
/// column entered and are written back one cycle later. Loads never overlap
/// streaming.
SimResult simulate_baseline(const DenseMatrix& w, const DenseMatrix& x, const SimConfig& cfg);

/// Shared-matrix dataflow: m_scale * M is loaded once, then the columns of
/// every block stream back to back. The input register doubles as the
/// vector-vector unit, scaling each column by v_ij in the cycle it enters.
SimResult simulate_vvma(const VvmaParam& p, const DenseMatrix& x, const SimConfig& cfg);

/// Runs the dataflow selected by cfg.mode on the same weights: the baseline
/// sees the dense expansion of p. The two entry points above ignore cfg.mode.
SimResult simulate(const VvmaParam& p, const DenseMatrix& x, const SimConfig& cfg);

/// Per-block partial products for an r x c grid, each k x t, stored row-major
/// by block. Missing entries are an error.
struct PartialGrid {
  std::size_t r = 0;
  std::size_t c = 0;
  std::vector<std::optional<DenseMatrix>> blocks;
};

/// y_i = sum_j partial(i, j), summed left to right.
DenseMatrix accumulate_partials(const PartialGrid& grid);

/// Upper bound on recorded events for a configuration; used to reject traces
/// that would exceed cfg.trace_limit before any work is done.
std::uint64_t trace_event_estimate(SimMode mode, std::size_t k, std::size_t blocks, std::size_t t, bool vv_events);

std::string trace_csv(const SimTrace& trace);

}  // namespace vvma
