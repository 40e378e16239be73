#pragma once

#include "rsode/analysis.hpp"
#include "rsode/density_estimator.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace rsode {

/// Formats a value with 9 significant digits ("nan"/"inf" for non-finite values).
[[nodiscard]] std::string format_number(double v);

// Long-format CSV writers. Every row carries its own (t, N) keys.
void write_estimate_csv(std::ostream& os, const DensityEstimate& e, bool header = true);
void write_consecutive_norms_csv(std::ostream& os, const ConvergenceStudy& s);
void write_reference_errors_csv(std::ostream& os, const ConvergenceStudy& s);
void write_pointwise_csv(std::ostream& os, const ConvergenceStudy& s);
void write_regression_csv(std::ostream& os, const std::vector<RegressionResult>& r);
void write_sampling_errors_csv(std::ostream& os, const SamplingStudy& s);
void write_sampling_slopes_csv(std::ostream& os, const SamplingStudy& s);

/// Crude and control-variates runs of the same orders at one time.
struct CvComparison {
    double t = 0.0;
    std::vector<int> orders;
    std::vector<DensityEstimate> crude;
    std::vector<DensityEstimate> cv;
    std::vector<double> crude_delta;  // ||f^{N+1} - f^N||_1, crude
    std::vector<double> cv_delta;     // same with control variates
};

[[nodiscard]] CvComparison compare_control_variates(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                                    std::vector<int> orders, std::size_t grid_points = 1000,
                                                    double tail_tol = kDefaultTailTol);
/// t,N,delta_eps_crude,delta_eps_cv,ratio
void write_cv_compare_csv(std::ostream& os, const CvComparison& c);
/// t,N,x,crude_value,cv_value,crude_variance,cv_variance,correlation,coefficient
void write_cv_pointwise_csv(std::ostream& os, const CvComparison& c);

/// Writes `content` to `dir/name`, creating `dir` when needed.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content);

}  // namespace rsode
