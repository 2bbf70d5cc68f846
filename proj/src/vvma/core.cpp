#include "vvma/core.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "vvma/error.hpp"
#include "vvma/rng.hpp"

namespace vvma {

using nlohmann::json;

namespace {

constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();

std::size_t mul_checked(std::size_t a, std::size_t b) {
  if (b != 0 && a > kMax / b) fail(ErrorCode::invalid_argument, "VVMA dimensions overflow");
  return a * b;
}

void check_dims(std::size_t k, std::size_t r, std::size_t c) {
  require(k >= 1 && r >= 1 && c >= 1, ErrorCode::invalid_argument, "VVMA dimensions k, r, c must be >= 1");
  // Expanded shape and diagonal storage must both be addressable.
  mul_checked(mul_checked(mul_checked(r, k), mul_checked(c, k)), sizeof(double));
}

}  // namespace

VvmaParam::VvmaParam(std::size_t k, std::size_t r, std::size_t c, DenseMatrix shared, std::vector<double> diags,
                     double m_scale)
    : k_(k), r_(r), c_(c), shared_(std::move(shared)), diags_(std::move(diags)), m_scale_(m_scale) {
  check_dims(k, r, c);
  require(shared_.rows() == k && shared_.cols() == k, ErrorCode::shape_mismatch, "shared matrix must be k x k");
  require(diags_.size() == r * c * k, ErrorCode::shape_mismatch,
          "diagonal storage must hold r*c*k = " + std::to_string(r * c * k) + " values, got " +
              std::to_string(diags_.size()));
  require(all_finite(diags_) && shared_.all_finite() && std::isfinite(m_scale), ErrorCode::invalid_argument,
          "VVMA parameters must be finite");
}

VvmaParam VvmaParam::without_diagonals(std::size_t k, std::size_t r, std::size_t c, DenseMatrix shared,
                                       double m_scale) {
  check_dims(k, r, c);
  require(shared.rows() == k && shared.cols() == k, ErrorCode::shape_mismatch, "shared matrix must be k x k");
  require(shared.all_finite() && std::isfinite(m_scale), ErrorCode::invalid_argument,
          "VVMA parameters must be finite");
  VvmaParam p;
  p.k_ = k;
  p.r_ = r;
  p.c_ = c;
  p.shared_ = std::move(shared);
  p.diag_enabled_ = false;
  p.m_scale_ = m_scale;
  return p;
}

std::span<const double> VvmaParam::diag(std::size_t i, std::size_t j) const {
  require(diag_enabled_, ErrorCode::invalid_argument, "diagonals are disabled");
  require(i < r_ && j < c_, ErrorCode::invalid_argument, "block index out of range");
  return {diags_.data() + (i * c_ + j) * k_, k_};
}

std::span<double> VvmaParam::diag(std::size_t i, std::size_t j) {
  require(diag_enabled_, ErrorCode::invalid_argument, "diagonals are disabled");
  require(i < r_ && j < c_, ErrorCode::invalid_argument, "block index out of range");
  return {diags_.data() + (i * c_ + j) * k_, k_};
}

VvmaParam new_vvma(std::size_t k, std::size_t r, std::size_t c, const InitSpec& init, std::uint64_t seed) {
  check_dims(k, r, c);
  DenseMatrix shared(k, k);
  double diag_fill = 1.0;
  switch (init.kind) {
    case InitKind::zeros:
      diag_fill = 0.0;
      break;
    case InitKind::ones:
      for (double& x : shared.data()) x = 1.0;
      break;
    case InitKind::fan_uniform: {
      const double s = std::sqrt(6.0 / static_cast<double>(k + k));
      Rng rng(seed);
      for (double& x : shared.data()) x = rng.uniform(-s, s);
      break;
    }
  }
  if (!init.diag_enabled) return VvmaParam::without_diagonals(k, r, c, std::move(shared));
  return VvmaParam(k, r, c, std::move(shared), std::vector<double>(r * c * k, diag_fill));
}

DenseMatrix expand(const VvmaParam& p) {
  const std::size_t k = p.k();
  const double s = p.m_scale();
  DenseMatrix out(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.row_blocks(); ++i) {
    for (std::size_t j = 0; j < p.col_blocks(); ++j) {
      for (std::size_t a = 0; a < k; ++a) {
        auto m_row = p.shared().row(a);
        double* dst = out.row(i * k + a).data() + j * k;
        if (p.diag_enabled()) {
          auto v = p.diag(i, j);
          for (std::size_t b = 0; b < k; ++b) dst[b] = s * m_row[b] * v[b];
        } else {
          for (std::size_t b = 0; b < k; ++b) dst[b] = s * m_row[b];
        }
      }
    }
  }
  return out;
}

Vector matvec(const VvmaParam& p, std::span<const double> x) {
  require(x.size() == p.cols(), ErrorCode::shape_mismatch,
          "VVMA matvec expects input length " + std::to_string(p.cols()) + ", got " + std::to_string(x.size()));
  const std::size_t k = p.k();
  const double s = p.m_scale();
  Vector y(p.rows(), 0.0);
  Vector z(k);
  for (std::size_t i = 0; i < p.row_blocks(); ++i) {
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t j = 0; j < p.col_blocks(); ++j) {
      const double* xj = x.data() + j * k;
      if (p.diag_enabled()) {
        auto v = p.diag(i, j);
        for (std::size_t b = 0; b < k; ++b) z[b] += v[b] * xj[b];
      } else {
        for (std::size_t b = 0; b < k; ++b) z[b] += xj[b];
      }
    }
    for (std::size_t a = 0; a < k; ++a) {
      auto m_row = p.shared().row(a);
      double acc = 0.0;
      for (std::size_t b = 0; b < k; ++b) acc += m_row[b] * z[b];
      y[i * k + a] = s * acc;
    }
  }
  return y;
}

DenseMatrix matmul(const VvmaParam& p, const DenseMatrix& x) {
  require(x.rows() == p.cols(), ErrorCode::shape_mismatch,
          "VVMA matmul expects " + std::to_string(p.cols()) + " input rows, got " + std::to_string(x.rows()));
  const std::size_t k = p.k();
  const std::size_t t = x.cols();
  const double s = p.m_scale();
  DenseMatrix y(p.rows(), t);
  DenseMatrix z(k, t);
  for (std::size_t i = 0; i < p.row_blocks(); ++i) {
    std::fill(z.data().begin(), z.data().end(), 0.0);
    for (std::size_t j = 0; j < p.col_blocks(); ++j) {
      const std::span<const double> diag = p.diag_enabled() ? p.diag(i, j) : std::span<const double>{};
      for (std::size_t b = 0; b < k; ++b) {
        const double v = diag.empty() ? 1.0 : diag[b];
        auto xr = x.row(j * k + b);
        auto zr = z.row(b);
        for (std::size_t col = 0; col < t; ++col) zr[col] += v * xr[col];
      }
    }
    for (std::size_t a = 0; a < k; ++a) {
      auto yr = y.row(i * k + a);
      for (std::size_t b = 0; b < k; ++b) {
        const double m = s * p.shared().at(a, b);
        auto zr = z.row(b);
        for (std::size_t col = 0; col < t; ++col) yr[col] += m * zr[col];
      }
    }
  }
  return y;
}

std::size_t param_count(const VvmaParam& p) noexcept {
  const std::size_t k = p.k();
  return k * k + (p.diag_enabled() ? p.row_blocks() * p.col_blocks() * k : 0);
}

BlockGrid pad_shape(std::size_t m, std::size_t n, std::size_t k) {
  require(m >= 1 && n >= 1 && k >= 1, ErrorCode::invalid_argument, "pad_shape requires m, n, k >= 1");
  return {(m + k - 1) / k, (n + k - 1) / k};
}

// --- serialization ---------------------------------------------------------

namespace {

constexpr const char* kParamFormat = "vvma-param/1";
constexpr const char* kMatrixFormat = "dense-matrix/1";

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) fail(ErrorCode::parse, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("bad field '") + name + "': " + e.what());
  }
}

json parse_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("invalid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::parse, "expected a JSON object");
  return j;
}

}  // namespace

std::string to_json(const VvmaParam& p) {
  json diags = json::array();
  if (p.diag_enabled()) {
    for (std::size_t i = 0; i < p.row_blocks(); ++i)
      for (std::size_t j = 0; j < p.col_blocks(); ++j) {
        auto v = p.diag(i, j);
        diags.push_back(std::vector<double>(v.begin(), v.end()));
      }
  }
  json j = {
      {"format", kParamFormat},
      {"k", p.k()},
      {"r", p.row_blocks()},
      {"c", p.col_blocks()},
      {"diag_enabled", p.diag_enabled()},
      {"m_scale", p.m_scale()},
      {"M", p.shared().values()},
      {"diags", diags},
  };
  return j.dump();
}

VvmaParam vvma_from_json(const std::string& text) {
  const json j = parse_object(text);
  if (j.contains("format"))
    require(j.at("format") == kParamFormat, ErrorCode::parse, "unsupported VVMA param format");
  const auto k = field<std::size_t>(j, "k");
  const auto r = field<std::size_t>(j, "r");
  const auto c = field<std::size_t>(j, "c");
  const auto enabled = field<bool>(j, "diag_enabled");
  const auto scale = field<double>(j, "m_scale");
  auto m = field<std::vector<double>>(j, "M");
  require(k >= 1 && m.size() == k * k, ErrorCode::parse, "field 'M' must hold k*k values");
  DenseMatrix shared(k, k, std::move(m));
  if (!enabled) return VvmaParam::without_diagonals(k, r, c, std::move(shared), scale);

  auto grid = field<std::vector<std::vector<double>>>(j, "diags");
  require(grid.size() == r * c, ErrorCode::parse, "field 'diags' must hold r*c vectors");
  std::vector<double> flat;
  flat.reserve(r * c * k);
  for (const auto& v : grid) {
    require(v.size() == k, ErrorCode::parse, "each diagonal vector must have length k");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return VvmaParam(k, r, c, std::move(shared), std::move(flat), scale);
}

std::string to_json(const DenseMatrix& m) {
  json j = {{"format", kMatrixFormat}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
  return j.dump();
}

DenseMatrix matrix_from_json(const std::string& text) {
  const json j = parse_object(text);
  const auto rows = field<std::size_t>(j, "rows");
  const auto cols = field<std::size_t>(j, "cols");
  auto data = field<std::vector<double>>(j, "data");
  require(data.size() == rows * cols, ErrorCode::parse, "field 'data' must hold rows*cols values");
  return DenseMatrix(rows, cols, std::move(data));
}

}  // namespace vvma
