#include "vvma/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vvma/error.hpp"
#include "vvma/rng.hpp"

namespace vvma {

DenseMatrix random_matrix(std::size_t m, std::size_t n, const RandomSpec& spec) {
  require(m >= 1 && n >= 1, ErrorCode::invalid_argument, "random_matrix requires m, n >= 1");
  DenseMatrix out(m, n);
  Rng rng(spec.seed);
  if (const auto* g = std::get_if<Gaussian>(&spec.distribution)) {
    require(std::isfinite(g->mean) && std::isfinite(g->stddev) && g->stddev > 0.0, ErrorCode::invalid_argument,
            "gaussian stddev must be > 0");
    for (double& x : out.data()) x = rng.gaussian(g->mean, g->stddev);
  } else {
    const auto& u = std::get<Uniform>(spec.distribution);
    require(std::isfinite(u.lo) && std::isfinite(u.hi) && u.lo < u.hi, ErrorCode::invalid_argument,
            "uniform range requires lo < hi");
    for (double& x : out.data()) x = rng.uniform(u.lo, u.hi);
  }
  return out;
}

double frob_norm(const DenseMatrix& a) noexcept {
  double acc = 0.0;
  for (double x : a.data()) acc += x * x;
  return std::sqrt(acc);
}

double frob_dist(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::shape_mismatch, "frob_dist: shape mismatch");
  double acc = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double d = ad[i] - bd[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

namespace {

double dot(const double* x, const double* y, std::size_t n) noexcept {
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += x[i] * y[i];
    a1 += x[i + 1] * y[i + 1];
    a2 += x[i + 2] * y[i + 2];
    a3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) a0 += x[i] * y[i];
  return (a0 + a1) + (a2 + a3);
}

void rotate(double* x, double* y, std::size_t n, double c, double s) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// Orthogonalises the rows of `cols` (the columns of A, stored transposed)
// in place, applying the same rotations to the rows of `vt` when non-empty.
void jacobi_sweeps(DenseMatrix& cols, DenseMatrix* vt, const JacobiOptions& opts) {
  const std::size_t n = cols.rows();
  const std::size_t m = cols.cols();
  // Columns this small relative to |A|_F are numerically zero; rotating them
  // against each other only reshuffles rounding noise and never converges.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += dot(cols.row(i).data(), cols.row(i).data(), m);
  const double eps = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<std::size_t>(m, 1));
  const double negligible = eps * eps * total;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double* gi = cols.row(i).data();
      for (std::size_t j = i + 1; j < n; ++j) {
        double* gj = cols.row(j).data();
        const double alpha = dot(gi, gi, m);
        const double beta = dot(gj, gj, m);
        if (alpha <= negligible || beta <= negligible) continue;
        const double gamma = dot(gi, gj, m);
        if (std::abs(gamma) <= opts.tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(gi, gj, m, c, s);
        if (vt != nullptr) rotate(vt->row(i).data(), vt->row(j).data(), n, c, s);
      }
    }
    if (!rotated) return;
  }
  fail(ErrorCode::numerical, "Jacobi SVD did not converge within " + std::to_string(opts.max_sweeps) + " sweeps");
}

// Fills rows [filled, m) of `basis` with unit vectors orthogonal to the
// earlier rows, drawing candidates from the standard basis.
void complete_orthonormal(DenseMatrix& basis, std::size_t filled) {
  const std::size_t m = basis.cols();
  std::vector<double> cand(m);
  for (std::size_t e = 0; e < m && filled < basis.rows(); ++e) {
    std::fill(cand.begin(), cand.end(), 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t q = 0; q < filled; ++q) {
        auto b = basis.row(q);
        const double proj = dot(b.data(), cand.data(), m);
        for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * b[i];
      }
    }
    const double norm = std::sqrt(dot(cand.data(), cand.data(), m));
    if (norm < 1e-6) continue;
    auto dst = basis.row(filled++);
    for (std::size_t i = 0; i < m; ++i) dst[i] = cand[i] / norm;
  }
}

SvdResult svd_tall(const DenseMatrix& a, const JacobiOptions& opts) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix cols = a.transposed();
  DenseMatrix vt = DenseMatrix::identity(n);
  jacobi_sweeps(cols, &vt, opts);

  Vector norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = std::sqrt(dot(cols.row(i).data(), cols.row(i).data(), m));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double cutoff = (norms.empty() ? 0.0 : norms[order[0]]) * 1e-14;
  SvdResult res{DenseMatrix(m, m), Vector(n), DenseMatrix(n, n)};
  DenseMatrix ut(m, m);
  DenseMatrix vt_sorted(n, n);
  std::size_t filled = 0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t src = order[rank];
    res.s[rank] = norms[src];
    std::copy(vt.row(src).begin(), vt.row(src).end(), vt_sorted.row(rank).begin());
    if (norms[src] > cutoff && norms[src] > 0.0) {
      auto dst = ut.row(rank);
      auto g = cols.row(src);
      for (std::size_t i = 0; i < m; ++i) dst[i] = g[i] / norms[src];
      filled = rank + 1;
    }
  }
  // Rows past `filled` (zero singular values, or m > n) need a basis completion.
  complete_orthonormal(ut, filled);
  res.u = ut.transposed();
  res.v = vt_sorted.transposed();
  return res;
}

}  // namespace

SvdResult svd(const DenseMatrix& a, const JacobiOptions& opts) {
  require(!a.empty(), ErrorCode::invalid_argument, "svd of an empty matrix");
  require(a.all_finite(), ErrorCode::invalid_argument, "svd input must be finite");
  if (a.rows() >= a.cols()) return svd_tall(a, opts);
  SvdResult t = svd_tall(a.transposed(), opts);
  return {std::move(t.v), std::move(t.s), std::move(t.u)};
}

Vector singular_values(const DenseMatrix& a, const JacobiOptions& opts) {
  require(!a.empty(), ErrorCode::invalid_argument, "singular_values of an empty matrix");
  require(a.all_finite(), ErrorCode::invalid_argument, "singular_values input must be finite");
  // Columns of the wider orientation are the ones Jacobi rotates.
  DenseMatrix cols = a.rows() >= a.cols() ? a.transposed() : a;
  jacobi_sweeps(cols, nullptr, opts);
  Vector s(cols.rows());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(dot(cols.row(i).data(), cols.row(i).data(), cols.cols()));
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

double optimal_lowrank_error_from_singular_values(const Vector& sigma, std::size_t p) {
  require(p <= sigma.size(), ErrorCode::invalid_argument,
          "rank " + std::to_string(p) + " exceeds min(m, n) = " + std::to_string(sigma.size()));
  double tail = 0.0;
  // Smallest first for accuracy.
  for (std::size_t i = sigma.size(); i > p; --i) tail += sigma[i - 1] * sigma[i - 1];
  return std::sqrt(tail);
}

double optimal_lowrank_error(const DenseMatrix& a, std::size_t p) {
  require(p <= std::min(a.rows(), a.cols()), ErrorCode::invalid_argument,
          "rank " + std::to_string(p) + " exceeds min(m, n)");
  return optimal_lowrank_error_from_singular_values(singular_values(a), p);
}

DenseMatrix optimal_lowrank(const DenseMatrix& a, std::size_t p) {
  require(p <= std::min(a.rows(), a.cols()), ErrorCode::invalid_argument,
          "rank " + std::to_string(p) + " exceeds min(m, n)");
  const SvdResult d = svd(a);
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t q = 0; q < p; ++q) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double ui = d.u.at(i, q) * d.s[q];
      if (ui == 0.0) continue;
      auto row = out.row(i);
      for (std::size_t j = 0; j < a.cols(); ++j) row[j] += ui * d.v.at(j, q);
    }
  }
  return out;
}

}  // namespace vvma
