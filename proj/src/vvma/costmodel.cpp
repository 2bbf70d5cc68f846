#include "vvma/costmodel.hpp"

#include <limits>

#include <nlohmann/json.hpp>

#include "vvma/error.hpp"
#include "vvma/format.hpp"

namespace vvma {

namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  if (b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b)
    fail(ErrorCode::invalid_argument, "cost model count overflows 64 bits");
  return a * b;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
  if (a > std::numeric_limits<std::uint64_t>::max() - b)
    fail(ErrorCode::invalid_argument, "cost model count overflows 64 bits");
  return a + b;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0 ? 1 : 0); }

std::uint64_t blocks(const MatmulShape& s, const ClockParams& cp) {
  return mul(ceil_div(s.m, cp.k), ceil_div(s.n, cp.k));
}

}  // namespace

void validate(const ClockParams& cp) {
  require(cp.k >= 1 && cp.t >= 1, ErrorCode::invalid_argument, "clock params require k >= 1 and t >= 1");
}

void validate(const MatmulShape& s) {
  require(s.m >= 1 && s.n >= 1 && s.repeats >= 1, ErrorCode::invalid_argument,
          "shape '" + s.name + "' requires m, n, repeats >= 1");
}

std::uint64_t clocks_baseline(const MatmulShape& s, const ClockParams& cp) {
  validate(cp);
  validate(s);
  return mul(mul(s.repeats, blocks(s, cp)), add(mul(3, cp.k), cp.t));
}

std::uint64_t clocks_vvma(const MatmulShape& s, const ClockParams& cp) {
  validate(cp);
  validate(s);
  if (!s.structured) return clocks_baseline(s, cp);
  return add(mul(3, cp.k), mul(mul(s.repeats, blocks(s, cp)), cp.t));
}

std::uint64_t flops(const MatmulShape& s, const ClockParams& cp, ExecMode mode) {
  validate(cp);
  validate(s);
  std::uint64_t per_vector = mul(2, mul(s.m, s.n));
  if (mode == ExecMode::vvma && s.structured) per_vector = add(per_vector, mul(cp.k, blocks(s, cp)));
  return mul(mul(s.repeats, cp.t), per_vector);
}

std::uint64_t params(const MatmulShape& s, const ClockParams& cp, ExecMode mode) {
  validate(cp);
  validate(s);
  if (mode == ExecMode::baseline || !s.structured) return mul(s.m, s.n);
  return add(mul(cp.k, cp.k), mul(blocks(s, cp), cp.k));
}

namespace {

void finish(CostReport& r) {
  r.speedup = r.clocks_vvma == 0 ? 0.0
                                 : static_cast<double>(r.clocks_baseline) / static_cast<double>(r.clocks_vvma);
}

}  // namespace

CostReport cost(const MatmulShape& s, const ClockParams& cp) {
  CostReport r;
  r.clocks_baseline = clocks_baseline(s, cp);
  r.clocks_vvma = clocks_vvma(s, cp);
  r.flops_baseline = flops(s, cp, ExecMode::baseline);
  r.flops_vvma = flops(s, cp, ExecMode::vvma);
  r.params_baseline = params(s, cp, ExecMode::baseline);
  r.params_vvma = params(s, cp, ExecMode::vvma);
  finish(r);
  return r;
}

CostReport aggregate(const std::vector<MatmulShape>& model, const ClockParams& cp) {
  require(!model.empty(), ErrorCode::invalid_argument, "model description is empty");
  CostReport total;
  for (const auto& s : model) {
    const CostReport r = cost(s, cp);
    total.clocks_baseline = add(total.clocks_baseline, r.clocks_baseline);
    total.clocks_vvma = add(total.clocks_vvma, r.clocks_vvma);
    total.flops_baseline = add(total.flops_baseline, r.flops_baseline);
    total.flops_vvma = add(total.flops_vvma, r.flops_vvma);
    total.params_baseline = add(total.params_baseline, r.params_baseline);
    total.params_vvma = add(total.params_vvma, r.params_vvma);
  }
  finish(total);
  return total;
}

std::vector<MatmulShape> shapes_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("shapes file is not valid JSON: ") + e.what());
  }
  require(j.is_array(), ErrorCode::parse, "shapes file must be a JSON array");
  std::vector<MatmulShape> out;
  for (std::size_t idx = 0; idx < j.size(); ++idx) {
    const auto& e = j[idx];
    const std::string where = "shape #" + std::to_string(idx);
    require(e.is_object(), ErrorCode::parse, where + " is not an object");
    auto count = [&](const char* key, bool required) -> std::uint64_t {
      if (!e.contains(key)) {
        require(!required, ErrorCode::parse, where + " is missing '" + key + "'");
        return 1;
      }
      const auto& v = e.at(key);
      require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 1), ErrorCode::parse,
              where + ": '" + key + "' must be a positive integer");
      const auto x = v.get<std::uint64_t>();
      require(x >= 1, ErrorCode::parse, where + ": '" + key + "' must be >= 1");
      return x;
    };
    MatmulShape s;
    if (e.contains("name")) {
      require(e.at("name").is_string(), ErrorCode::parse, where + ": 'name' must be a string");
      s.name = e.at("name").get<std::string>();
    } else {
      s.name = where;
    }
    s.m = count("m", true);
    s.n = count("n", true);
    s.repeats = count("repeats", false);
    if (e.contains("structured")) {
      require(e.at("structured").is_boolean(), ErrorCode::parse, where + ": 'structured' must be a boolean");
      s.structured = e.at("structured").get<bool>();
    }
    out.push_back(std::move(s));
  }
  require(!out.empty(), ErrorCode::parse, "shapes file lists no shapes");
  return out;
}

namespace {

void csv_row(std::string& out, const std::string& name, const std::string& m, const std::string& n,
             const std::string& repeats, const std::string& structured, const CostReport& r) {
  out += name + ',' + m + ',' + n + ',' + repeats + ',' + structured + ',' + std::to_string(r.clocks_baseline) +
         ',' + std::to_string(r.clocks_vvma) + ',' + std::to_string(r.flops_baseline) + ',' +
         std::to_string(r.flops_vvma) + ',' + std::to_string(r.params_baseline) + ',' +
         std::to_string(r.params_vvma) + ',' + format_double(r.speedup) + '\n';
}

nlohmann::ordered_json report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["clocks_baseline"] = r.clocks_baseline;
  j["clocks_vvma"] = r.clocks_vvma;
  j["flops_baseline"] = r.flops_baseline;
  j["flops_vvma"] = r.flops_vvma;
  j["params_baseline"] = r.params_baseline;
  j["params_vvma"] = r.params_vvma;
  j["speedup"] = r.speedup;
  return j;
}

}  // namespace

std::string cost_csv(const std::vector<MatmulShape>& model, const ClockParams& cp) {
  std::string out =
      "name,m,n,repeats,structured,clocks_baseline,clocks_vvma,flops_baseline,flops_vvma,params_baseline,"
      "params_vvma,speedup\n";
  for (const auto& s : model) {
    // Names are free text; keep the CSV parseable.
    std::string name = s.name;
    for (char& ch : name)
      if (ch == ',' || ch == '\n' || ch == '"') ch = '_';
    csv_row(out, name, std::to_string(s.m), std::to_string(s.n), std::to_string(s.repeats),
            s.structured ? "true" : "false", cost(s, cp));
  }
  csv_row(out, "TOTAL", "", "", "", "", aggregate(model, cp));
  return out;
}

std::string cost_json(const std::vector<MatmulShape>& model, const ClockParams& cp) {
  nlohmann::ordered_json j;
  j["k"] = cp.k;
  j["t"] = cp.t;
  j["total"] = report_json(aggregate(model, cp));
  nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
  for (const auto& s : model) {
    nlohmann::ordered_json e;
    e["name"] = s.name;
    e["m"] = s.m;
    e["n"] = s.n;
    e["repeats"] = s.repeats;
    e["structured"] = s.structured;
    e["cost"] = report_json(cost(s, cp));
    shapes.push_back(std::move(e));
  }
  j["shapes"] = std::move(shapes);
  return j.dump(2);
}

}  // namespace vvma
