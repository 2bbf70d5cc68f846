#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "vvma/costmodel.hpp"
#include "vvma/systolic.hpp"

using namespace vvma;

namespace {

SimConfig config(std::size_t k, bool trace = false) {
  SimConfig cfg;
  cfg.k = k;
  cfg.record_trace = trace;
  return cfg;
}

std::uint64_t closed_baseline(std::size_t m, std::size_t n, std::size_t k, std::size_t t) {
  return clocks_baseline({"", m, n, 1, true}, {k, t});
}

std::uint64_t closed_vvma(std::size_t m, std::size_t n, std::size_t k, std::size_t t) {
  return clocks_vvma({"", m, n, 1, true}, {k, t});
}

DenseMatrix tiled(const VvmaParam& p) {
  const VvmaParam plain = VvmaParam::without_diagonals(p.k(), p.row_blocks(), p.col_blocks(), p.shared(), p.m_scale());
  return oracle::expand(plain);
}

}  // namespace

TEST_CASE("baseline: identity weight over a 2 x 2 grid") {
  const DenseMatrix x(4, 1, {1.0, -2.0, 3.0, 0.5});
  const SimResult r = simulate_baseline(DenseMatrix::identity(4), x, config(2));
  CHECK(r.output == x);
  CHECK(r.cycles == 28);
  CHECK(r.weight_row_loads == 8);
}

TEST_CASE("baseline: a single block takes 3k + 1 cycles at t = 1") {
  for (std::size_t k : {1, 2, 5, 8}) {
    const SimResult r = simulate_baseline(oracle::gaussian(k, k, k), oracle::gaussian(k, 1, k + 1), config(k));
    CHECK(r.cycles == 3 * k + 1);
  }
}

TEST_CASE("baseline: random 64 x 64 with k = 8 and t = 5 matches the dense product") {
  const DenseMatrix w = oracle::gaussian(64, 64, 1);
  const DenseMatrix x = oracle::gaussian(64, 5, 2);
  const SimResult r = simulate_baseline(w, x, config(8));
  CHECK(oracle::max_abs_diff(r.output.data(), oracle::matmul(w, x).data()) <= 1e-12);
  CHECK(r.cycles == closed_baseline(64, 64, 8, 5));
}

TEST_CASE("baseline: shapes that are not multiples of k are padded and cropped") {
  const DenseMatrix w = oracle::gaussian(10, 7, 3);
  const DenseMatrix x = oracle::gaussian(7, 3, 4);
  const SimResult r = simulate_baseline(w, x, config(4));
  REQUIRE(r.output.rows() == 10);
  REQUIRE(r.output.cols() == 3);
  CHECK(oracle::max_abs_diff(r.output.data(), oracle::matmul(w, x).data()) <= 1e-12);
  CHECK(r.cycles == closed_baseline(10, 7, 4, 3));
}

TEST_CASE("vvma: k = 2 over a 2 x 2 grid takes 10 cycles against 28") {
  const VvmaParam p = oracle::random_param(2, 2, 2, 5);
  const DenseMatrix x = oracle::gaussian(4, 1, 6);
  const SimResult r = simulate_vvma(p, x, config(2));
  CHECK(r.cycles == 10);
  CHECK(simulate_baseline(expand(p), x, config(2)).cycles == 28);
  CHECK(r.weight_row_loads == 2);
}

TEST_CASE("vvma: ones diagonals give the tiled shared matrix") {
  const VvmaParam p = new_vvma(4, 3, 2, {}, 7);
  const DenseMatrix x = oracle::gaussian(8, 2, 8);
  const SimResult r = simulate_vvma(p, x, config(4));
  CHECK(oracle::max_abs_diff(r.output.data(), oracle::matmul(tiled(p), x).data()) <= 1e-12);
}

TEST_CASE("vvma: random k = 8, 8 x 8 blocks, t = 3") {
  const VvmaParam p = oracle::random_param(8, 8, 8, 9);
  const DenseMatrix x = oracle::gaussian(64, 3, 10);
  const SimResult r = simulate_vvma(p, x, config(8));
  CHECK(r.cycles == 216);
  CHECK(r.cycles == closed_vvma(64, 64, 8, 3));
  CHECK(oracle::max_abs_diff(r.output.data(), oracle::matmul(oracle::expand(p), x).data()) <= 1e-12);
}

TEST_CASE("vvma: no-diagonal parameters honour m_scale") {
  const VvmaParam p = oracle::random_param(3, 2, 3, 11, false);
  const DenseMatrix x = oracle::gaussian(9, 4, 12);
  const SimResult r = simulate_vvma(p, x, config(3));
  CHECK(oracle::max_abs_diff(r.output.data(), oracle::matmul(oracle::expand(p), x).data()) <= 1e-12);
}

TEST_CASE("simulate dispatches on the configured mode") {
  const VvmaParam p = oracle::random_param(3, 2, 2, 13);
  const DenseMatrix x = oracle::gaussian(6, 2, 14);
  SimConfig cfg = config(3);
  cfg.mode = SimMode::baseline;
  CHECK(simulate(p, x, cfg).cycles == closed_baseline(6, 6, 3, 2));
  cfg.mode = SimMode::vvma;
  CHECK(simulate(p, x, cfg).cycles == closed_vvma(6, 6, 3, 2));
}

TEST_CASE("accumulate_partials") {
  SUBCASE("single column passes through") {
    const DenseMatrix a = oracle::gaussian(3, 2, 1);
    const DenseMatrix b = oracle::gaussian(3, 2, 2);
    const DenseMatrix y = accumulate_partials({2, 1, {a, b}});
    REQUIRE(y.rows() == 6);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(y.at(i, j) == a.at(i, j));
        CHECK(y.at(3 + i, j) == b.at(i, j));
      }
  }
  SUBCASE("opposite partials cancel") {
    const DenseMatrix a = oracle::gaussian(4, 1, 3);
    const DenseMatrix y = accumulate_partials({1, 2, {a, -1.0 * a}});
    CHECK(y == DenseMatrix(4, 1));
  }
  SUBCASE("a three-block row matches the dense product") {
    const std::size_t k = 4;
    const DenseMatrix w = oracle::gaussian(k, 3 * k, 4);
    const DenseMatrix x = oracle::gaussian(3 * k, 2, 5);
    PartialGrid grid{1, 3, {}};
    for (std::size_t j = 0; j < 3; ++j) {
      DenseMatrix wj(k, k), xj(k, 2);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) wj.at(a, b) = w.at(a, j * k + b);
        for (std::size_t c = 0; c < 2; ++c) xj.at(a, c) = x.at(j * k + a, c);
      }
      grid.blocks.emplace_back(oracle::matmul(wj, xj));
    }
    const DenseMatrix y = accumulate_partials(grid);
    CHECK(oracle::max_abs_diff(y.data(), oracle::matmul(w, x).data()) <= 1e-12);
  }
  SUBCASE("missing blocks are an error") {
    PartialGrid grid{1, 2, {DenseMatrix(2, 1), std::nullopt}};
    CHECK_VVMA_ERROR(accumulate_partials(grid), ErrorCode::invalid_argument);
  }
}

TEST_CASE("property: cycles equal the closed forms and outputs match the oracle") {
  std::uint64_t seed = 100;
  for (std::size_t k : {1, 2, 3, 4, 8, 16})
    for (std::size_t r : {1, 2, 3})
      for (std::size_t c : {1, 2, 3})
        for (std::size_t t : {1, 2, 5}) {
          const VvmaParam p = oracle::random_param(k, r, c, ++seed);
          const DenseMatrix w = expand(p);
          const DenseMatrix x = oracle::gaussian(c * k, t, ++seed);
          const DenseMatrix ref = oracle::matmul(w, x);
          const SimResult b = simulate_baseline(w, x, config(k));
          const SimResult v = simulate_vvma(p, x, config(k));
          CHECK(b.cycles == closed_baseline(r * k, c * k, k, t));
          CHECK(v.cycles == closed_vvma(r * k, c * k, k, t));
          CHECK(oracle::max_abs_diff(b.output.data(), ref.data()) <= 1e-12);
          CHECK(oracle::max_abs_diff(v.output.data(), ref.data()) <= 1e-12);
          if (r * c == 1) CHECK(b.cycles == v.cycles);
        }
}

TEST_CASE("property: weight rows are loaded blocks * k times, or k times with sharing") {
  for (std::size_t k : {2, 4, 8})
    for (std::size_t r : {1, 3})
      for (std::size_t c : {2, 4}) {
        const VvmaParam p = oracle::random_param(k, r, c, k + r + c);
        const DenseMatrix x = oracle::gaussian(c * k, 2, 1);
        const SimResult b = simulate_baseline(expand(p), x, config(k, true));
        const SimResult v = simulate_vvma(p, x, config(k, true));
        REQUIRE(b.trace.has_value());
        REQUIRE(v.trace.has_value());
        CHECK(b.trace->count(EventKind::load_row) == r * c * k);
        CHECK(b.weight_row_loads == r * c * k);
        CHECK(v.trace->count(EventKind::load_row) == k);
        CHECK(v.weight_row_loads == k);
        CHECK(b.trace->count(EventKind::fill) == r * c);
        CHECK(v.trace->count(EventKind::fill) == 1);
        CHECK(b.trace->count(EventKind::stream_in) == r * c * 2);
        CHECK(v.trace->count(EventKind::stream_out) == r * c * 2);
        CHECK(v.trace->count(EventKind::vv_mul) == r * c * 2);
        CHECK(b.trace->count(EventKind::vv_mul) == 0);
      }
}

TEST_CASE("property: each column leaves the array 2k - 1 cycles after it enters") {
  for (std::size_t k : {1, 3, 8}) {
    const VvmaParam p = oracle::random_param(k, 2, 2, k);
    const DenseMatrix x = oracle::gaussian(2 * k, 3, 2);
    for (int mode = 0; mode < 2; ++mode) {
      const SimResult res = mode == 0 ? simulate_baseline(expand(p), x, config(k, true)) : simulate_vvma(p, x, config(k, true));
      std::map<std::pair<std::size_t, std::size_t>, std::vector<std::uint64_t>> in, out;
      for (const auto& e : res.trace->events) {
        if (e.kind == EventKind::stream_in) in[{e.block_i, e.block_j}].push_back(e.cycle);
        if (e.kind == EventKind::stream_out) out[{e.block_i, e.block_j}].push_back(e.cycle);
      }
      REQUIRE(in.size() == 4);
      for (const auto& [block, cycles] : in) {
        REQUIRE(out[block].size() == cycles.size());
        for (std::size_t i = 0; i < cycles.size(); ++i) CHECK(out[block][i] - cycles[i] == 2 * k - 1);
      }
    }
  }
}

TEST_CASE("property: the vector unit adds no cycles") {
  for (std::size_t k : {2, 4, 8}) {
    const VvmaParam p = new_vvma(k, 3, 3, {}, k);
    const DenseMatrix x = oracle::gaussian(3 * k, 4, 3);
    SimConfig on = config(k, true);
    SimConfig off = on;
    off.vv_unit_enabled = false;
    const SimResult a = simulate_vvma(p, x, on);
    const SimResult b = simulate_vvma(p, x, off);
    CHECK(a.cycles == b.cycles);
    CHECK(a.output == b.output);
    CHECK(b.trace->count(EventKind::vv_mul) == 0);
    CHECK(a.trace->count(EventKind::vv_mul) == 9 * 4);
  }
}

TEST_CASE("traces are bounded") {
  const VvmaParam p = oracle::random_param(4, 4, 4, 1);
  const DenseMatrix x = oracle::gaussian(16, 8, 2);
  SimConfig cfg = config(4, true);
  const SimResult full = simulate_vvma(p, x, cfg);
  CHECK(full.trace->events.size() <= trace_event_estimate(SimMode::vvma, 4, 16, 8, true));
  const SimResult base = simulate_baseline(expand(p), x, cfg);
  CHECK(base.trace->events.size() <= trace_event_estimate(SimMode::baseline, 4, 16, 8, false));
  cfg.trace_limit = 100;
  CHECK_VVMA_ERROR(simulate_vvma(p, x, cfg), ErrorCode::budget_exceeded);
  CHECK_VVMA_ERROR(simulate_baseline(expand(p), x, cfg), ErrorCode::budget_exceeded);
  cfg.record_trace = false;
  const SimResult quiet = simulate_vvma(p, x, cfg);
  CHECK_FALSE(quiet.trace.has_value());
  CHECK(quiet.cycles == full.cycles);
}

TEST_CASE("trace csv") {
  SimTrace t;
  t.events = {{0, EventKind::load_row, 0, 0}, {3, EventKind::stream_out, 1, 2}};
  CHECK(trace_csv(t) == "cycle,kind,block_i,block_j\n0,load_row,0,0\n3,stream_out,1,2\n");
  CHECK(std::string(to_string(EventKind::vv_mul)) == "vv_mul");
  CHECK(std::string(to_string(EventKind::fill)) == "fill");
  CHECK(std::string(to_string(EventKind::stream_in)) == "stream_in");
}

TEST_CASE("invalid simulator inputs") {
  CHECK_VVMA_ERROR(simulate_baseline(oracle::gaussian(4, 4, 1), oracle::gaussian(3, 1, 2), config(2)),
                   ErrorCode::shape_mismatch);
  CHECK_VVMA_ERROR(simulate_baseline(oracle::gaussian(4, 4, 1), oracle::gaussian(4, 1, 2), config(0)),
                   ErrorCode::invalid_argument);
  const VvmaParam p = oracle::random_param(2, 2, 2, 3);
  CHECK_VVMA_ERROR(simulate_vvma(p, oracle::gaussian(4, 1, 2), config(4)), ErrorCode::shape_mismatch);
  CHECK_VVMA_ERROR(simulate_vvma(p, oracle::gaussian(5, 1, 2), config(2)), ErrorCode::shape_mismatch);
}
