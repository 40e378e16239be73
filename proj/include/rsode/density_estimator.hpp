#pragma once

#include "rsode/distribution.hpp"
#include "rsode/poly_moments.hpp"
#include "rsode/rng.hpp"
#include "rsode/series.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rsode {

/// Which initial condition's density enters the expectation.
enum class Role { ViaY0, ViaY1 };
enum class Method { Crude, ControlVariates };

[[nodiscard]] const char* role_name(Role r) noexcept;
[[nodiscard]] Role role_from_name(std::string_view name);
[[nodiscard]] const char* method_name(Method m) noexcept;
[[nodiscard]] Method method_from_name(std::string_view name);

struct ControlVariateConfig {
    Control which = Control::S0;
    int N0 = 10;
    std::size_t pilot_M = 2500;

    friend bool operator==(const ControlVariateConfig&, const ControlVariateConfig&) = default;
};

struct EstimatorConfig {
    int N = 10;
    std::size_t M = 20000;
    /// Unset means ViaY0 when Y0 is absolutely continuous, ViaY1 otherwise.
    std::optional<Role> role;
    Method method = Method::Crude;
    ControlVariateConfig cv;
    std::uint64_t seed = 2020;
    std::uint64_t stream_id = 0;
    unsigned threads = 1;
    double degenerate_threshold = 1e-8;
    double degenerate_fraction_warn = 1e-4;
    /// When false, every order N reuses the same input draws (common random
    /// numbers); when true, the stream is re-keyed by N.
    bool independent_streams = false;

    void validate() const;

    friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

/// Role actually used for `spec` under `cfg`; throws SpecError when the
/// chosen initial condition has no density.
[[nodiscard]] Role resolve_role(const ProblemSpec& spec, const EstimatorConfig& cfg);

struct EstimatorDiagnostics {
    double min_abs_denominator = 0.0;
    double denominator_min = 0.0;
    double denominator_max = 0.0;
    /// Sampled denominators take both signs, so some lie arbitrarily close to zero.
    bool sign_change = false;
    std::size_t degenerate_count = 0;
    double degenerate_fraction = 0.0;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

struct DensityEstimate {
    double t = 0.0;
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> std_errors;
    std::vector<double> sample_variance;
    EstimatorDiagnostics diagnostics;
    EstimatorConfig config;
    Role role = Role::ViaY0;
    /// Samples that entered the averages (M minus skipped ones).
    std::size_t used_samples = 0;

    // Control-variates extras (empty for crude runs).
    std::vector<double> crude_values;
    std::vector<double> crude_variance;
    std::vector<double> correlation;
    std::vector<double> control_coefficient;
    double control_mean = 0.0;
    double control_variance = 0.0;
    bool control_exact = true;
};

/// f_{Y0}((x - y1 s1)/s0)/|s0| (ViaY0, y_other = y1) or
/// f_{Y1}((x - y0 s0)/s1)/|s1| (ViaY1, y_other = y0).
[[nodiscard]] double density_kernel(double x, double s0, double s1, double y_other, Role role,
                                    const Distribution& f_init);

[[nodiscard]] DensityEstimate estimate_crude(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                             std::span<const double> grid);
[[nodiscard]] DensityEstimate estimate_control_variates(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                                        std::span<const double> grid);
/// Dispatches on cfg.method.
[[nodiscard]] DensityEstimate estimate(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                       std::span<const double> grid);

/// Estimates from the first P samples of one run, for each P in `prefixes`
/// (each <= cfg.M). Every entry equals, bitwise, a fresh run with M = P.
[[nodiscard]] std::vector<DensityEstimate> estimate_prefixes(const ProblemSpec& spec, const EstimatorConfig& cfg,
                                                             double t, std::span<const double> grid,
                                                             std::span<const std::size_t> prefixes);

/// Per-sample kernel values at `xs` and control values S^{N0}(t) for samples
/// [begin, end) of the main run; used for spot checks of estimator moments.
struct SampleDump {
    std::vector<double> control;
    std::vector<std::vector<double>> kernel;  // kernel[j][i]: sample i at xs[j]
};
[[nodiscard]] SampleDump dump_samples(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                      std::span<const double> xs, std::size_t begin, std::size_t end);

/// Evenly spaced points on [lo, hi].
[[nodiscard]] std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Grid spanning the empirical 1e-4..1-1e-4 quantiles of X^N(t), padded by
/// 20% of the span on each side.
[[nodiscard]] std::vector<double> auto_grid(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                            std::size_t points = 1000, std::size_t pilot = 20000);

/// (S0(t), S1(t)) of the untruncated solution for deterministic coefficients:
/// closed form for constant coefficients, converged series otherwise.
[[nodiscard]] std::pair<double, double> exact_fundamental_pair(const ProblemSpec& spec, double t);

/// Density of X(t) (or of X^N(t) when N is given) for deterministic
/// coefficients, by summation over atoms or quadrature over the law of the
/// non-role initial condition. Throws UnsupportedError for random coefficients.
[[nodiscard]] double exact_density(const ProblemSpec& spec, double t, double x, std::optional<Role> role = {},
                                   std::optional<int> N = {});

}  // namespace rsode
