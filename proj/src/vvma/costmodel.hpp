#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vvma {

struct ClockParams {
  std::uint64_t k = 32;  // systolic array edge
  std::uint64_t t = 1;   // vectors streamed per weight residency
};

struct MatmulShape {
  std::string name;
  std::uint64_t m = 1;  // output dim
  std::uint64_t n = 1;  // input dim
  std::uint64_t repeats = 1;
  /// false keeps the layer dense in the VVMA model (embeddings, softmax
  /// projections); its VVMA-mode costs then equal the baseline ones.
  bool structured = true;
};

enum class ExecMode { baseline, vvma };

struct CostReport {
  std::uint64_t clocks_baseline = 0;
  std::uint64_t clocks_vvma = 0;
  std::uint64_t flops_baseline = 0;
  std::uint64_t flops_vvma = 0;
  std::uint64_t params_baseline = 0;
  std::uint64_t params_vvma = 0;
  double speedup = 0.0;
};

void validate(const ClockParams& cp);
void validate(const MatmulShape& shape);

/// repeats * ceil(m/k) * ceil(n/k) * (3k + t): every block is loaded (k),
/// filled and drained (2k), then streamed (t).
std::uint64_t clocks_baseline(const MatmulShape& shape, const ClockParams& cp);

/// 3k + repeats * ceil(m/k) * ceil(n/k) * t: the shared block is loaded and
/// filled once, after which every block only streams.
std::uint64_t clocks_vvma(const MatmulShape& shape, const ClockParams& cp);

/// Executed floating point operations. The VVMA count adds one element-wise
/// multiply per k-slice of the input per block.
std::uint64_t flops(const MatmulShape& shape, const ClockParams& cp, ExecMode mode);

std::uint64_t params(const MatmulShape& shape, const ClockParams& cp, ExecMode mode);

CostReport cost(const MatmulShape& shape, const ClockParams& cp);
CostReport aggregate(const std::vector<MatmulShape>& model, const ClockParams& cp);

/// Parses a JSON array of {name, m, n, repeats[, structured]} objects.
std::vector<MatmulShape> shapes_from_json(const std::string& text);

std::string cost_csv(const std::vector<MatmulShape>& model, const ClockParams& cp);
std::string cost_json(const std::vector<MatmulShape>& model, const ClockParams& cp);

}  // namespace vvma
