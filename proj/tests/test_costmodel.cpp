#include <doctest.h>

#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "vvma/costmodel.hpp"

using namespace vvma;

namespace {

MatmulShape shape(std::uint64_t m, std::uint64_t n, std::uint64_t repeats = 1, bool structured = true) {
  return {"s", m, n, repeats, structured};
}

std::string read_data(const std::string& name) {
  std::ifstream f(std::string(VVMA_DATA_DIR) + "/" + name);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("clocks_baseline examples") {
  CHECK(clocks_baseline(shape(1024, 1024), {32, 1}) == 99328);
  for (std::uint64_t k : {1, 4, 32}) CHECK(clocks_baseline(shape(k, k), {k, 1}) == 3 * k + 1);
}

TEST_CASE("baseline clocks per vector amortize to the block count") {
  const MatmulShape s = shape(1024, 1024);
  for (std::uint64_t t : {1000, 100000, 10000000}) {
    const double per_vector = static_cast<double>(clocks_baseline(s, {32, t})) / static_cast<double>(t);
    CHECK(per_vector >= 1024.0);
    CHECK(per_vector <= 1024.0 * (1.0 + 97.0 / static_cast<double>(t)));
  }
}

TEST_CASE("clocks_vvma examples") {
  CHECK(clocks_vvma(shape(1024, 1024), {32, 1}) == 1120);
  for (std::uint64_t k : {1, 4, 32}) {
    CHECK(clocks_vvma(shape(k, k), {k, 1}) == 3 * k + 1);
    CHECK(clocks_vvma(shape(k, k), {k, 1}) == clocks_baseline(shape(k, k), {k, 1}));
  }
  const CostReport r = cost(shape(1024, 1024), {32, 1});
  CHECK(r.speedup == doctest::Approx(99328.0 / 1120.0));
  CHECK(r.speedup == doctest::Approx(88.7).epsilon(1e-3));
}

TEST_CASE("flops examples") {
  CHECK(flops(shape(1024, 1024), {32, 1}, ExecMode::baseline) == 2097152);
  CHECK(flops(shape(1024, 1024), {32, 1}, ExecMode::vvma) == 2129920);
  CHECK(flops(shape(1024, 1024, 3), {32, 5}, ExecMode::baseline) == 15 * 2097152ull);
  // Unstructured layers keep dense costs in VVMA mode.
  CHECK(flops(shape(1024, 1024, 1, false), {32, 1}, ExecMode::vvma) == 2097152);
}

TEST_CASE("params examples") {
  CHECK(params(shape(1024, 1024), {32, 1}, ExecMode::baseline) == 1048576);
  CHECK(params(shape(1024, 1024), {32, 1}, ExecMode::vvma) == 1024 + 1024 * 32);
  CHECK(params(shape(1024, 1024, 1, false), {32, 1}, ExecMode::vvma) == 1048576);
  // Repeats reuse the same weights.
  CHECK(params(shape(1024, 1024, 25), {32, 1}, ExecMode::vvma) == 1024 + 1024 * 32);
}

TEST_CASE("rectangular shapes use ceiling-divided grids") {
  CHECK(clocks_baseline(shape(100, 70), {32, 1}) == 12 * 97);
  CHECK(clocks_vvma(shape(100, 70), {32, 1}) == 96 + 12);
}

TEST_CASE("property: more than one block is strictly cheaper with sharing") {
  for (std::uint64_t k : {1, 2, 8, 32})
    for (std::uint64_t m : {1, 7, 64, 100})
      for (std::uint64_t n : {1, 9, 64, 129})
        for (std::uint64_t t : {1, 3, 50})
          for (std::uint64_t rep : {1, 4}) {
            const MatmulShape s = shape(m, n, rep);
            const std::uint64_t blocks = ((m + k - 1) / k) * ((n + k - 1) / k);
            if (blocks * rep > 1)
              CHECK(clocks_vvma(s, {k, t}) < clocks_baseline(s, {k, t}));
            else
              CHECK(clocks_vvma(s, {k, t}) == clocks_baseline(s, {k, t}));
          }
}

TEST_CASE("property: clocks are nondecreasing in m, n, t and repeats") {
  const ClockParams base{8, 2};
  for (std::uint64_t m = 1; m < 40; ++m)
    for (std::uint64_t n : {1, 8, 9, 33}) {
      for (auto fn : {clocks_baseline, clocks_vvma}) {
        CHECK(fn(shape(m + 1, n), base) >= fn(shape(m, n), base));
        CHECK(fn(shape(n, m + 1), base) >= fn(shape(n, m), base));
        CHECK(fn(shape(m, n), {8, 3}) >= fn(shape(m, n), base));
        CHECK(fn(shape(m, n, 2), base) >= fn(shape(m, n, 1), base));
      }
    }
}

TEST_CASE("property: speedup at t = 1 tends to 3k + 1 as blocks grow") {
  const std::uint64_t k = 16;
  double prev = 0.0;
  for (std::uint64_t n : {16, 64, 256, 1024, 4096, 16384}) {
    const double s = cost(shape(n, n), {k, 1}).speedup;
    CHECK(s > prev);
    CHECK(s < 3.0 * k + 1.0);
    prev = s;
  }
  CHECK(prev > 0.99 * (3.0 * k + 1.0));
}

TEST_CASE("property: large t drives the speedup toward 1") {
  const double s = cost(shape(1024, 1024), {32, 4096}).speedup;
  CHECK(s > 1.0);
  CHECK(s < 1.03);
}

TEST_CASE("aggregate sums the shapes") {
  const std::vector<MatmulShape> model{shape(1024, 1024), shape(64, 32, 3), shape(500, 200, 2, false)};
  const ClockParams cp{32, 1};
  const CostReport r = aggregate(model, cp);
  std::uint64_t cb = 0, cv = 0, fb = 0, fv = 0, pb = 0, pv = 0;
  for (const auto& s : model) {
    const CostReport one = cost(s, cp);
    cb += one.clocks_baseline;
    cv += one.clocks_vvma;
    fb += one.flops_baseline;
    fv += one.flops_vvma;
    pb += one.params_baseline;
    pv += one.params_vvma;
  }
  CHECK(r.clocks_baseline == cb);
  CHECK(r.clocks_vvma == cv);
  CHECK(r.flops_baseline == fb);
  CHECK(r.flops_vvma == fv);
  CHECK(r.params_baseline == pb);
  CHECK(r.params_vvma == pv);
  CHECK(r.speedup == static_cast<double>(cb) / static_cast<double>(cv));
  CHECK_VVMA_ERROR(aggregate({}, cp), ErrorCode::invalid_argument);
}

TEST_CASE("bundled LSTM-like shapes land in the expected speedup band") {
  const auto model = shapes_from_json(read_data("shapes/lstm_seq2seq.json"));
  const CostReport r = aggregate(model, {32, 1});
  CHECK(r.speedup >= 3.0);
  CHECK(r.speedup <= 5.0);
  const auto square = shapes_from_json(read_data("shapes/square_1024.json"));
  REQUIRE(square.size() == 1);
  CHECK(aggregate(square, {32, 1}).clocks_baseline == 99328);
  CHECK(aggregate(square, {32, 1}).clocks_vvma == 1120);
}

TEST_CASE("shapes_from_json parsing") {
  const auto s = shapes_from_json(R"([{"name":"a","m":4,"n":8},{"name":"b","m":2,"n":3,"repeats":5,"structured":false}])");
  REQUIRE(s.size() == 2);
  CHECK(s[0].repeats == 1);
  CHECK(s[0].structured);
  CHECK(s[1].repeats == 5);
  CHECK_FALSE(s[1].structured);
  CHECK_VVMA_ERROR(shapes_from_json("{"), ErrorCode::parse);
  CHECK_VVMA_ERROR(shapes_from_json(R"({"name":"a"})"), ErrorCode::parse);
  CHECK_VVMA_ERROR(shapes_from_json(R"([{"name":"a","m":4}])"), ErrorCode::parse);
  CHECK_VVMA_ERROR(shapes_from_json(R"([{"name":"a","m":-4,"n":2}])"), ErrorCode::parse);
  CHECK_VVMA_ERROR(shapes_from_json(R"([{"name":"a","m":0,"n":2}])"), ErrorCode::parse);
  CHECK_VVMA_ERROR(shapes_from_json("[]"), ErrorCode::parse);
}

TEST_CASE("invalid parameters and overflow are reported") {
  CHECK_VVMA_ERROR(clocks_baseline(shape(4, 4), {0, 1}), ErrorCode::invalid_argument);
  CHECK_VVMA_ERROR(clocks_baseline(shape(4, 4), {4, 0}), ErrorCode::invalid_argument);
  CHECK_VVMA_ERROR(clocks_vvma(shape(0, 4), {4, 1}), ErrorCode::invalid_argument);
  const std::uint64_t big = std::numeric_limits<std::uint64_t>::max() / 2;
  CHECK_VVMA_ERROR(clocks_baseline(shape(big, big), {1, 1}), ErrorCode::invalid_argument);
}

TEST_CASE("csv and json reports") {
  const std::vector<MatmulShape> model{{"square", 1024, 1024, 1, true}};
  const std::string csv = cost_csv(model, {32, 1});
  CHECK(csv.rfind("name,m,n,repeats,structured,clocks_baseline,clocks_vvma,", 0) == 0);
  CHECK(csv.find("\nsquare,1024,1024,1,true,99328,1120,") != std::string::npos);
  CHECK(csv.find("\nTOTAL,,,,,99328,1120,") != std::string::npos);
  const std::string js = cost_json(model, {32, 1});
  CHECK(js.find("\"clocks_baseline\": 99328") != std::string::npos);
  CHECK(cost_json(model, {32, 1}) == js);
}
