#include "rsode/config.hpp"

#include "rsode/error.hpp"

#include <array>
#include <string>
#include <utility>

namespace rsode {

namespace {

// Degree-one random polynomial coefficients shared by the first and third problems.
constexpr const char* kExample1 = R"json({
  "name": "example1",
  "problem": {
    "t0": 0,
    "A": {"kind": "explicit", "entries": [4, {"family": "uniform", "params": [0, 1]}]},
    "B": {"kind": "explicit", "entries": [
      {"family": "gamma", "params": [2, 2], "truncate": [0, 4]},
      {"family": "bernoulli", "params": [0.35]}
    ]},
    "Y0": {"family": "normal", "params": [2, 1]},
    "Y1": {"family": "poisson", "params": [2]}
  },
  "estimator": {"N": 6, "M": 20000, "role": "ViaY0", "seed": 2020},
  "grid": {"points": 1000},
  "estimate": {"t": 0.5, "N": 6},
  "convergence": {"L": 30, "cases": [
    {"t": 0.5, "orders": [1, 2, 3, 4, 5, 6]},
    {"t": 1.0, "orders": [6, 7, 8, 9, 10, 11]},
    {"t": 1.5, "orders": [11, 12, 13, 14, 15, 16]}
  ]},
  "sampling": {"N": 20, "times": [0.5, 1.0, 1.5]},
  "cv_compare": {"t": 1.5, "orders": [11, 12, 13, 14, 15, 16],
                 "control": {"which": "S0", "N0": 10, "pilot_M": 2500}},
  "advisor": {"t": 0.5, "epsilon": 0.01, "r": 2, "s": 1}
}
)json";

constexpr const char* kExample2 = R"json({
  "name": "example2",
  "problem": {
    "t0": 0,
    "A": {"kind": "iid", "family": {"family": "beta", "params": [11, 15]}, "sup_norm_bounds": [1]},
    "B": {"kind": "rule", "entries": [0], "rule": "1/n^2", "sup_norm_bounds": [1]},
    "Y0": {"family": "custom", "density": "sqrt(2)/(pi*(1+y^4))"},
    "Y1": {"family": "poisson", "params": [2]},
    "radius": 1
  },
  "estimator": {"N": 5, "M": 20000, "role": "ViaY0", "seed": 2020},
  "grid": {"points": 1000},
  "estimate": {"t": 0.75, "N": 5},
  "convergence": {"L": 30, "cases": [
    {"t": 0.25, "orders": [1, 2, 3, 4, 5]},
    {"t": 0.75, "orders": [1, 2, 3, 4, 5]},
    {"t": 0.99, "orders": [1, 2, 3, 4, 5]}
  ]},
  "sampling": {"N": 7, "times": [0.25, 0.5, 0.75, 0.99]},
  "advisor": {"t": 0.5, "epsilon": 0.01, "r": 1}
}
)json";

constexpr const char* kExample3 = R"json({
  "name": "example3",
  "problem": {
    "t0": 0,
    "A": {"kind": "explicit", "entries": [4, {"family": "uniform", "params": [0, 1]}]},
    "B": {"kind": "explicit", "entries": [
      {"family": "gamma", "params": [2, 2], "truncate": [0, 4]},
      {"family": "bernoulli", "params": [0.35]}
    ]},
    "Y0": {"family": "poisson", "params": [2]},
    "Y1": {"family": "normal", "params": [2, 1]}
  },
  "estimator": {"N": 12, "M": 20000, "role": "ViaY1", "seed": 2020},
  "grid": {"points": 1000},
  "estimate": {"t": 1.5, "N": 12},
  "convergence": {"L": 30, "cases": [
    {"t": 0.5, "orders": [2, 3, 4, 5, 6, 7]},
    {"t": 1.0, "orders": [7, 8, 9, 10, 11, 12]},
    {"t": 1.5, "orders": [11, 12, 13, 14, 15, 16]}
  ]},
  "sampling": {"N": 20, "times": [0.5, 1.0, 1.5]}
}
)json";

constexpr const char* kExample4 = R"json({
  "name": "example4",
  "problem": {
    "t0": 0,
    "A": {"kind": "iid", "family": {"family": "beta", "params": [11, 15]}, "sup_norm_bounds": [1]},
    "B": {"kind": "rule", "entries": [0], "rule": "1/n^2", "sup_norm_bounds": [1]},
    "Y0": {"family": "uniform", "params": [-1, 1]},
    "Y1": {"family": "exponential", "params": [2]},
    "radius": 1
  },
  "estimator": {"N": 5, "M": 20000, "role": "ViaY0", "seed": 2020},
  "grid": {"points": 1000},
  "estimate": {"t": 0.99, "N": 5},
  "convergence": {"L": 30, "cases": [
    {"t": 0.25, "orders": [1, 2, 3, 4, 5]},
    {"t": 0.5, "orders": [1, 2, 3, 4, 5]},
    {"t": 0.75, "orders": [1, 2, 3, 4, 5]},
    {"t": 0.99, "orders": [1, 2, 3, 4, 5]}
  ]},
  "sampling": {"N": 7, "times": [0.25, 0.5, 0.75, 0.99]}
}
)json";

// Deterministic coefficients: only the initial conditions are random.
constexpr const char* kExample5 = R"json({
  "name": "example5",
  "problem": {
    "t0": 0,
    "A": {"kind": "explicit", "entries": [4, 2]},
    "B": {"kind": "explicit", "entries": [0, -1]},
    "Y0": {"family": "bernoulli", "params": [0.4]},
    "Y1": {"family": "uniform", "params": [-1, 1]}
  },
  "estimator": {"N": 19, "M": 1000000, "role": "ViaY1", "seed": 2020},
  "grid": {"points": 1000},
  "estimate": {"t": 1.5, "N": 19},
  "convergence": {"L": 30, "cases": [
    {"t": 0.5, "orders": [2, 3, 4, 5, 6, 7]},
    {"t": 1.0, "orders": [7, 8, 9, 10, 11, 12]},
    {"t": 1.5, "orders": [15, 16, 17, 18, 19, 20]}
  ]}
}
)json";

constexpr std::array<std::pair<const char*, const char*>, 5> kPresets{{
    {"example1", kExample1},
    {"example2", kExample2},
    {"example3", kExample3},
    {"example4", kExample4},
    {"example5", kExample5},
}};

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : kPresets) out.emplace_back(name);
    return out;
}

std::string preset_text(std::string_view name) {
    for (const auto& [n, text] : kPresets)
        if (name == n) return text;
    std::string known;
    for (const auto& [n, text] : kPresets) known += (known.empty() ? "" : ", ") + std::string(n);
    throw SpecError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace rsode
