#pragma once

#include "rsode/analysis.hpp"
#include "rsode/density_estimator.hpp"
#include "rsode/series.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rsode {

/// Evaluation grid: explicit [lo, hi] or derived from pilot samples.
struct GridSpec {
    std::optional<double> lo;
    std::optional<double> hi;
    std::size_t points = 1000;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct EstimateSettings {
    double t = 0.0;
    std::optional<int> N;

    friend bool operator==(const EstimateSettings&, const EstimateSettings&) = default;
};

struct ConvergenceSettings {
    int L = 30;
    std::vector<ConvergenceCase> cases;

    friend bool operator==(const ConvergenceSettings&, const ConvergenceSettings&) = default;
};

struct SamplingSettings {
    int N = 20;
    std::vector<double> times;
    std::vector<std::size_t> prefixes = kDefaultPrefixes;

    friend bool operator==(const SamplingSettings&, const SamplingSettings&) = default;
};

struct CvCompareSettings {
    double t = 0.0;
    std::vector<int> orders;
    ControlVariateConfig cv;

    friend bool operator==(const CvCompareSettings&, const CvCompareSettings&) = default;
};

struct AdvisorSettings {
    double t = 0.0;
    double epsilon = 1e-2;
    std::optional<double> r;
    std::optional<double> s;

    friend bool operator==(const AdvisorSettings&, const AdvisorSettings&) = default;
};

/// Everything a CLI run needs: the problem, estimator defaults and the
/// per-command settings.
struct RunConfig {
    std::string name;
    ProblemSpec problem;
    EstimatorConfig estimator;
    GridSpec grid;
    double tail_tol = kDefaultTailTol;
    std::optional<EstimateSettings> estimate;
    std::optional<ConvergenceSettings> convergence;
    std::optional<SamplingSettings> sampling;
    std::optional<CvCompareSettings> cv_compare;
    std::optional<AdvisorSettings> advisor;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses a JSON config. Errors are SpecError messages of the form
/// "<source>:<line>: <json pointer>: <problem>".
[[nodiscard]] RunConfig parse_config(std::string_view text, const std::string& source = "config");
[[nodiscard]] RunConfig load_config(const std::string& path);
/// Canonical JSON text; parse_config(dump_config(c)) == c.
[[nodiscard]] std::string dump_config(const RunConfig& c);

[[nodiscard]] std::vector<std::string> preset_names();
/// JSON text of a bundled preset; throws SpecError for unknown names.
[[nodiscard]] std::string preset_text(std::string_view name);
[[nodiscard]] RunConfig preset(std::string_view name);

}  // namespace rsode
