#include "rsode/report.hpp"

#include "rsode/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rsode {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_estimate_csv(std::ostream& os, const DensityEstimate& e, bool header) {
    if (header) os << "t,x,value,std_error,sample_variance,N,M,method,role,seed\n";
    const std::string tail = "," + std::to_string(e.config.N) + "," + std::to_string(e.config.M) + "," +
                             method_name(e.config.method) + "," + role_name(e.role) + "," +
                             std::to_string(e.config.seed) + "\n";
    for (std::size_t j = 0; j < e.grid.size(); ++j)
        os << format_number(e.t) << ',' << format_number(e.grid[j]) << ',' << format_number(e.values[j]) << ','
           << format_number(e.std_errors[j]) << ',' << format_number(e.sample_variance[j]) << tail;
}

void write_consecutive_norms_csv(std::ostream& os, const ConvergenceStudy& s) {
    os << "t,N,delta_eps\n";
    for (const auto& r : s.delta_eps) os << format_number(r.t) << ',' << r.N << ',' << format_number(r.value) << '\n';
}

void write_reference_errors_csv(std::ostream& os, const ConvergenceStudy& s) {
    os << "t,N,E\n";
    for (const auto& r : s.reference_error)
        os << format_number(r.t) << ',' << r.N << ',' << format_number(r.value) << '\n';
}

void write_pointwise_csv(std::ostream& os, const ConvergenceStudy& s) {
    os << "t,N,x,delta\n";
    for (const auto& r : s.pointwise)
        os << format_number(r.t) << ',' << r.N << ',' << format_number(r.x) << ',' << format_number(r.value) << '\n';
}

void write_regression_csv(std::ostream& os, const std::vector<RegressionResult>& rows) {
    os << "t,alpha,beta,n_points\n";
    for (const auto& r : rows)
        os << format_number(r.t) << ',' << format_number(r.alpha) << ',' << format_number(r.beta) << ',' << r.n_points
           << '\n';
}

void write_sampling_errors_csv(std::ostream& os, const SamplingStudy& s) {
    os << "t,P,MCE\n";
    for (const auto& r : s.rows) os << format_number(r.t) << ',' << r.P << ',' << format_number(r.mce) << '\n';
}

void write_sampling_slopes_csv(std::ostream& os, const SamplingStudy& s) {
    os << "t,N,slope,intercept,n_points\n";
    for (const auto& r : s.slopes)
        os << format_number(r.t) << ',' << s.N << ',' << format_number(r.slope) << ',' << format_number(r.intercept)
           << ',' << r.n_points << '\n';
}

CvComparison compare_control_variates(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                      std::vector<int> orders, std::size_t grid_points, double tail_tol) {
    if (orders.empty()) throw SpecError("cv comparison needs at least one order");
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    CvComparison c;
    c.t = t;
    c.orders = orders;
    EstimatorConfig crude = cfg;
    crude.method = Method::Crude;
    const std::vector<double> grid = shared_grid(spec, crude, t, orders, grid_points);
    for (int N : orders) {
        EstimatorConfig e = crude;
        e.N = N;
        c.crude.push_back(estimate(spec, e, t, grid));
        e.method = Method::ControlVariates;
        c.cv.push_back(estimate(spec, e, t, grid));
    }
    for (std::size_t i = 0; i + 1 < orders.size(); ++i) {
        if (orders[i + 1] != orders[i] + 1) continue;
        c.crude_delta.push_back(lp_distance(c.crude[i + 1], c.crude[i], 1.0, tail_tol));
        c.cv_delta.push_back(lp_distance(c.cv[i + 1], c.cv[i], 1.0, tail_tol));
    }
    return c;
}

void write_cv_compare_csv(std::ostream& os, const CvComparison& c) {
    os << "t,N,delta_eps_crude,delta_eps_cv,ratio\n";
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < c.orders.size(); ++i) {
        if (c.orders[i + 1] != c.orders[i] + 1) continue;
        os << format_number(c.t) << ',' << c.orders[i] << ',' << format_number(c.crude_delta[k]) << ','
           << format_number(c.cv_delta[k]) << ',' << format_number(c.crude_delta[k] / c.cv_delta[k]) << '\n';
        ++k;
    }
}

void write_cv_pointwise_csv(std::ostream& os, const CvComparison& c) {
    os << "t,N,x,crude_value,cv_value,crude_variance,cv_variance,correlation,coefficient\n";
    for (std::size_t i = 0; i < c.orders.size(); ++i) {
        const DensityEstimate& cr = c.crude[i];
        const DensityEstimate& cv = c.cv[i];
        const bool extras = cv.correlation.size() == cv.grid.size();
        for (std::size_t j = 0; j < cv.grid.size(); ++j)
            os << format_number(c.t) << ',' << c.orders[i] << ',' << format_number(cv.grid[j]) << ','
               << format_number(cr.values[j]) << ',' << format_number(cv.values[j]) << ','
               << format_number(cr.sample_variance[j]) << ',' << format_number(cv.sample_variance[j]) << ','
               << format_number(extras ? cv.correlation[j] : 0.0) << ','
               << format_number(extras ? cv.control_coefficient[j] : 0.0) << '\n';
    }
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw SpecError("failed writing '" + path.string() + "'");
}

}  // namespace rsode
