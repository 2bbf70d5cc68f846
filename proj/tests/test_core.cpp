#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "oracles.hpp"
#include "vvma/core.hpp"
#include "vvma/linalg.hpp"

using namespace vvma;

TEST_CASE("new_vvma zeros init gives zero matrix and zero diagonals") {
  const VvmaParam p = new_vvma(2, 1, 1, {InitKind::zeros, true}, 0);
  CHECK(p.shared() == DenseMatrix(2, 2));
  REQUIRE(p.diags().size() == 2);
  CHECK(p.diag(0, 0)[0] == 0.0);
  CHECK(p.diag(0, 0)[1] == 0.0);
}

TEST_CASE("new_vvma default init parameter count") {
  const VvmaParam p = new_vvma(32, 8, 8, {}, 7);
  CHECK(param_count(p) == 3072);
}

TEST_CASE("new_vvma fan_uniform stays inside the fan bound with ones diagonals") {
  const std::size_t k = 16;
  const VvmaParam p = new_vvma(k, 2, 3, {}, 11);
  const double s = std::sqrt(6.0 / (2.0 * k));
  for (double v : p.shared().values()) CHECK(std::abs(v) <= s);
  for (double v : p.diags()) CHECK(v == 1.0);
  CHECK(p.m_scale() == 1.0);
}

TEST_CASE("new_vvma is deterministic in the seed") {
  CHECK(new_vvma(8, 2, 2, {}, 5) == new_vvma(8, 2, 2, {}, 5));
  CHECK_FALSE(new_vvma(8, 2, 2, {}, 5) == new_vvma(8, 2, 2, {}, 6));
}

TEST_CASE("k = 1 ones init expands to the all-ones matrix") {
  const DenseMatrix e = expand(new_vvma(1, 3, 3, {InitKind::ones, true}, 0));
  CHECK(e == DenseMatrix(3, 3, std::vector<double>(9, 1.0)));
}

TEST_CASE("expand with scalar blocks") {
  const double a = 1.5;
  const VvmaParam p(1, 2, 2, DenseMatrix(1, 1, {a}), {2.0, 3.0, 5.0, 7.0});
  const DenseMatrix e = expand(p);
  CHECK(e == DenseMatrix(2, 2, {a * 2.0, a * 3.0, a * 5.0, a * 7.0}));
}

TEST_CASE("no-diagonal expansion tiles 0.1 * M") {
  const DenseMatrix m = oracle::gaussian(4, 4, 3);
  const VvmaParam p = VvmaParam::without_diagonals(4, 3, 2, m);
  CHECK(p.m_scale() == kNoDiagScale);
  CHECK(p.diags().empty());
  const DenseMatrix e = expand(p);
  for (std::size_t a = 0; a < e.rows(); ++a)
    for (std::size_t b = 0; b < e.cols(); ++b) CHECK(e.at(a, b) == 0.1 * m.at(a % 4, b % 4));
}

TEST_CASE("expand matches the entrywise oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const VvmaParam p = oracle::random_param(1 + seed % 5, 1 + seed % 3, 1 + (seed / 3) % 3, seed);
    CHECK(expand(p) == oracle::expand(p));
  }
}

TEST_CASE("expansion of k = 4 over a 3 x 3 grid has rank at most 4 * 3") {
  const DenseMatrix e = expand(oracle::random_param(4, 3, 3, 42));
  const Vector s = singular_values(e);
  REQUIRE(s.size() == 12);
  // Independent diagonals per block lift the rank above k; it is bounded by
  // k times the shorter side of the block grid.
  CHECK(s[4] > 1e-3 * s[0]);
}

TEST_CASE("scalar blocks with generic diagonals reach full rank") {
  const VvmaParam p(1, 2, 2, DenseMatrix(1, 1, {1.5}), {2.0, 3.0, 5.0, 7.0});
  const Vector s = singular_values(expand(p));
  CHECK(s[1] > 0.1);
}

TEST_CASE("matvec with identity shared matrix and ones diagonals is the identity") {
  const VvmaParam p(2, 1, 1, DenseMatrix::identity(2), {1.0, 1.0});
  const Vector y = matvec(p, std::vector<double>{3.0, 5.0});
  CHECK(y == Vector{3.0, 5.0});
}

TEST_CASE("matvec matches the dense expansion on a 2 x 3 grid") {
  const VvmaParam p = oracle::random_param(4, 2, 3, 9);
  const Vector x = oracle::gaussian_vector(12, 10);
  const Vector y = matvec(p, x);
  const Vector ref = oracle::matvec(oracle::expand(p), x);
  REQUIRE(y.size() == 8);
  CHECK(oracle::max_abs_diff(y, ref) <= 1e-10 * (1.0 + max_abs(ref)));
}

TEST_CASE("zero diagonal annihilates the output") {
  const VvmaParam p(3, 1, 1, oracle::gaussian(3, 3, 1), {0.0, 0.0, 0.0});
  const Vector y = matvec(p, std::vector<double>{1.0, -2.0, 4.0});
  CHECK(y == Vector{0.0, 0.0, 0.0});
}

TEST_CASE("param_count examples") {
  CHECK(param_count(new_vvma(128, 8, 8, {}, 0)) == 24576);
  CHECK(param_count(new_vvma(32, 8, 8, {InitKind::fan_uniform, false}, 0)) == 1024);
  CHECK(param_count(new_vvma(32, 16, 16, {}, 0)) == 9216);
}

TEST_CASE("pad_shape uses ceiling division") {
  CHECK(pad_shape(1024, 1024, 32) == BlockGrid{32, 32});
  CHECK(pad_shape(100, 70, 32) == BlockGrid{4, 3});
  CHECK(pad_shape(1, 1, 32) == BlockGrid{1, 1});
  CHECK_VVMA_ERROR(pad_shape(0, 4, 2), ErrorCode::invalid_argument);
  CHECK_VVMA_ERROR(pad_shape(4, 4, 0), ErrorCode::invalid_argument);
}

TEST_CASE("property: matvec equals expand(p) x over the grid of sizes") {
  std::uint64_t seed = 100;
  for (std::size_t k : {1, 2, 4, 8, 32})
    for (std::size_t r : {1, 2, 3, 8})
      for (std::size_t c : {1, 2, 3, 8}) {
        for (bool diag : {true, false}) {
          const VvmaParam p = oracle::random_param(k, r, c, ++seed, diag);
          const Vector x = oracle::gaussian_vector(c * k, ++seed);
          const Vector ref = oracle::matvec(oracle::expand(p), x);
          const Vector y = matvec(p, x);
          CHECK(oracle::max_abs_diff(y, ref) <= 1e-10 * (1.0 + max_abs(ref)));
        }
      }
}

TEST_CASE("property: batched matmul equals column-wise matvec") {
  const VvmaParam p = oracle::random_param(4, 3, 2, 5);
  const DenseMatrix x = oracle::gaussian(8, 5, 6);
  const DenseMatrix y = matmul(p, x);
  REQUIRE(y.rows() == 12);
  REQUIRE(y.cols() == 5);
  const DenseMatrix ref = oracle::matmul(oracle::expand(p), x);
  CHECK(oracle::max_abs_diff(y.data(), ref.data()) <= 1e-10 * (1.0 + max_abs(ref.data())));
}

TEST_CASE("property: rank is at most k * min(r, c)") {
  std::uint64_t seed = 500;
  for (std::size_t k : {1, 2, 3, 5})
    for (std::size_t r : {1, 2, 4})
      for (std::size_t c : {1, 3, 5}) {
        const VvmaParam p = oracle::random_param(k, r, c, ++seed);
        const Vector s = singular_values(expand(p));
        for (std::size_t i = k * std::min(r, c); i < s.size(); ++i) CHECK(s[i] <= 1e-8 * s[0]);
      }
}

TEST_CASE("property: rank is at most k without diagonals or with one block row or column") {
  std::uint64_t seed = 900;
  for (std::size_t k : {1, 2, 4, 7}) {
    for (const auto& [r, c, diag] : {std::tuple{4, 3, false}, std::tuple{1, 6, true}, std::tuple{5, 1, true}}) {
      const VvmaParam p = oracle::random_param(k, r, c, ++seed, diag);
      const Vector s = singular_values(expand(p));
      for (std::size_t i = k; i < s.size(); ++i) CHECK(s[i] <= 1e-8 * s[0]);
    }
  }
}

TEST_CASE("property: matvec is linear") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const VvmaParam p = oracle::random_param(1 + seed % 8, 1 + seed % 4, 1 + seed % 3, seed);
    const std::size_t n = p.cols();
    const Vector x = oracle::gaussian_vector(n, seed + 1000);
    const Vector z = oracle::gaussian_vector(n, seed + 2000);
    const double alpha = 0.75;
    const double beta = -2.5;
    Vector mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = alpha * x[i] + beta * z[i];
    const Vector lhs = matvec(p, mix);
    const Vector yx = matvec(p, x);
    const Vector yz = matvec(p, z);
    Vector rhs(lhs.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = alpha * yx[i] + beta * yz[i];
    CHECK(oracle::max_abs_diff(lhs, rhs) <= 1e-10 * (1.0 + max_abs(rhs)));
  }
}

TEST_CASE("property: without diagonals every block is bit-identical") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t k = 1 + seed % 6;
    const VvmaParam p = oracle::random_param(k, 3, 4, seed, false);
    const DenseMatrix e = expand(p);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) CHECK(e.at(i * k + a, j * k + b) == e.at(a, b));
  }
}

TEST_CASE("property: more than one block compresses the weight") {
  // k = 1 is excluded: 1 + r*c scalars describe an r x c matrix, one more
  // than the dense count.
  CHECK(param_count(new_vvma(1, 2, 3, {}, 0)) == 7);
  for (std::size_t k : {2, 4, 8, 16})
    for (std::size_t r : {1, 2, 5})
      for (std::size_t c : {1, 3, 4}) {
        if (r * c <= 1) continue;
        const VvmaParam p = new_vvma(k, r, c, {}, 0);
        const std::size_t m = r * k;
        const std::size_t n = c * k;
        if (k < std::min(m, n)) CHECK(param_count(p) < m * n);
      }
}

TEST_CASE("JSON round trip is bit exact") {
  for (bool diag : {true, false}) {
    const VvmaParam p = oracle::random_param(5, 2, 3, 77, diag);
    const VvmaParam q = vvma_from_json(to_json(p));
    CHECK(q == p);
    CHECK(to_json(q) == to_json(p));
  }
  const DenseMatrix m = oracle::gaussian(3, 7, 1);
  CHECK(matrix_from_json(to_json(m)) == m);
}

TEST_CASE("malformed JSON is rejected") {
  CHECK_VVMA_ERROR(vvma_from_json("not json"), ErrorCode::parse);
  CHECK_VVMA_ERROR(vvma_from_json("[1,2]"), ErrorCode::parse);
  CHECK_VVMA_ERROR(vvma_from_json(R"({"k":2,"r":1,"c":1,"diag_enabled":true,"m_scale":1,"M":[1,2,3],"diags":[[1,1]]})"),
                   ErrorCode::parse);
  CHECK_VVMA_ERROR(vvma_from_json(R"({"k":2,"r":1,"c":1,"diag_enabled":true,"m_scale":1,"M":[1,2,3,4],"diags":[[1]]})"),
                   ErrorCode::parse);
  CHECK_VVMA_ERROR(matrix_from_json(R"({"rows":2,"cols":2,"data":[1]})"), ErrorCode::parse);
}

TEST_CASE("invalid construction is rejected") {
  CHECK_VVMA_ERROR(VvmaParam(2, 1, 1, DenseMatrix(3, 3), {1.0, 1.0}), ErrorCode::shape_mismatch);
  CHECK_VVMA_ERROR(VvmaParam(2, 1, 2, DenseMatrix(2, 2), {1.0, 1.0}), ErrorCode::shape_mismatch);
  CHECK_VVMA_ERROR(VvmaParam(2, 1, 1, DenseMatrix(2, 2), {1.0, NAN}), ErrorCode::invalid_argument);
  CHECK_VVMA_ERROR(new_vvma(0, 1, 1, {}, 0), ErrorCode::invalid_argument);
  const VvmaParam p = oracle::random_param(2, 2, 2, 1);
  CHECK_VVMA_ERROR(matvec(p, std::vector<double>(3, 1.0)), ErrorCode::shape_mismatch);
}
