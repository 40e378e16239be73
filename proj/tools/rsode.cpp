// rsode: density estimation for random second-order linear ODEs.

#include "rsode/analysis.hpp"
#include "rsode/config.hpp"
#include "rsode/density_estimator.hpp"
#include "rsode/error.hpp"
#include "rsode/report.hpp"
#include "rsode/series.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kConfigError = 2, kNumericalError = 3, kInsufficientData = 4 };

struct Common {
    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out = "rsode_out";
    std::optional<std::size_t> M;
    std::optional<std::string> method;
    std::optional<std::string> control;
    std::optional<int> control_order;
    std::optional<std::size_t> pilot_M;
    std::optional<double> grid_lo;
    std::optional<double> grid_hi;
    std::optional<std::size_t> grid_points;
    std::optional<double> tail_tol;
    bool independent_streams = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON problem/run configuration");
    app->add_option("--preset", c.preset_name, "bundled configuration (example1..example5)");
    app->add_option("--seed", c.seed, "master seed");
    app->add_option("--threads", c.threads, "worker threads (results do not depend on it)");
    app->add_option("--out", c.out, "output directory")->capture_default_str();
    app->add_option("-M,--samples", c.M, "Monte Carlo sample size");
    app->add_option("--method", c.method, "crude or control_variates");
    app->add_option("--control-variate", c.control, "control variate S0 or S1 (implies control variates)");
    app->add_option("--control-order", c.control_order, "truncation order N0 of the control variate");
    app->add_option("--pilot-samples", c.pilot_M, "pilot sample size for the control coefficient");
    app->add_option("--grid-lo", c.grid_lo, "lower grid end");
    app->add_option("--grid-hi", c.grid_hi, "upper grid end");
    app->add_option("--grid-points", c.grid_points, "number of grid points");
    app->add_option("--tail-tol", c.tail_tol, "allowed missing mass on the grid");
    app->add_flag("--independent-streams", c.independent_streams, "fresh random inputs for every order N");
}

rsode::RunConfig resolve_config(const Common& c) {
    if (c.config_path.empty() == c.preset_name.empty())
        throw rsode::SpecError("give exactly one of --config or --preset");
    rsode::RunConfig cfg = c.config_path.empty() ? rsode::preset(c.preset_name) : rsode::load_config(c.config_path);
    auto& e = cfg.estimator;
    if (c.seed) e.seed = *c.seed;
    if (c.threads) e.threads = *c.threads;
    if (c.M) e.M = *c.M;
    if (c.method) e.method = rsode::method_from_name(*c.method);
    if (c.control) {
        e.cv.which = rsode::control_from_name(*c.control);
        e.method = rsode::Method::ControlVariates;
    }
    if (c.control_order) e.cv.N0 = *c.control_order;
    if (c.pilot_M) e.cv.pilot_M = *c.pilot_M;
    if (c.independent_streams) e.independent_streams = true;
    if (c.grid_lo) cfg.grid.lo = *c.grid_lo;
    if (c.grid_hi) cfg.grid.hi = *c.grid_hi;
    if (c.grid_points) cfg.grid.points = *c.grid_points;
    if (c.tail_tol) cfg.tail_tol = *c.tail_tol;
    if (cfg.grid.lo.has_value() != cfg.grid.hi.has_value())
        throw rsode::SpecError("give both --grid-lo and --grid-hi");
    if (cfg.grid.lo && !(*cfg.grid.lo < *cfg.grid.hi)) throw rsode::SpecError("grid needs lo < hi");
    if (cfg.grid.points < 2) throw rsode::SpecError("grid needs at least 2 points");
    return cfg;
}

std::vector<double> grid_for(const rsode::RunConfig& cfg, const rsode::EstimatorConfig& e, double t) {
    if (cfg.grid.lo) return rsode::linspace(*cfg.grid.lo, *cfg.grid.hi, cfg.grid.points);
    return rsode::auto_grid(cfg.problem, e, t, cfg.grid.points);
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

// Manifest goes out before any result file; it is rewritten with the elapsed
// time once the command finishes.
class Manifest {
public:
    Manifest(std::string command, const Common& c, const rsode::RunConfig& cfg) : out_(c.out) {
        data_["tool"] = "rsode";
        data_["version"] = kVersion;
        data_["command"] = std::move(command);
        data_["config_path"] = c.config_path.empty() ? "preset:" + c.preset_name : c.config_path;
        data_["seed"] = cfg.estimator.seed;
        data_["threads"] = cfg.estimator.threads;
        data_["output_dir"] = std::filesystem::absolute(out_).string();
        data_["started"] = timestamp();
        data_["config"] = nlohmann::json::parse(rsode::dump_config(cfg));
        start_ = std::chrono::steady_clock::now();
    }

    nlohmann::json& parameters() { return data_["parameters"]; }

    void write() { rsode::write_file(out_, "manifest.json", data_.dump(2) + "\n"); }

    void finish(const std::vector<std::string>& files) {
        data_["outputs"] = files;
        data_["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write();
    }

private:
    std::filesystem::path out_;
    nlohmann::json data_;
    std::chrono::steady_clock::time_point start_;
};

template <class F>
std::string to_text(F&& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

void report_warnings(const std::vector<std::string>& w) {
    for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

void report_estimate_warnings(const rsode::DensityEstimate& e) {
    for (const auto& s : e.diagnostics.warnings)
        std::cerr << "warning: t=" << e.t << " N=" << e.config.N << ": " << s << '\n';
}

int cmd_estimate(const Common& c, std::optional<double> t_opt, std::optional<int> N_opt) {
    rsode::RunConfig cfg = resolve_config(c);
    const double t = t_opt ? *t_opt : cfg.estimate ? cfg.estimate->t : throw rsode::SpecError("no time given (--t)");
    if (N_opt) {
        cfg.estimator.N = *N_opt;
    } else if (cfg.estimate && cfg.estimate->N) {
        cfg.estimator.N = *cfg.estimate->N;
    }
    cfg.estimator.validate();
    Manifest m("estimate", c, cfg);
    m.parameters() = {{"t", t}, {"N", cfg.estimator.N}, {"M", cfg.estimator.M},
                      {"method", rsode::method_name(cfg.estimator.method)}};
    m.write();
    report_warnings(cfg.problem.warnings(cfg.estimator.N));
    const auto grid = grid_for(cfg, cfg.estimator, t);
    const auto est = rsode::estimate(cfg.problem, cfg.estimator, t, grid);
    report_estimate_warnings(est);
    rsode::write_file(c.out, "estimate.csv", to_text([&](std::ostream& os) { rsode::write_estimate_csv(os, est); }));
    m.finish({"estimate.csv"});
    std::cout << "estimate: t=" << t << " N=" << cfg.estimator.N << " M=" << cfg.estimator.M
              << " grid mass=" << rsode::trapezoid(est.grid, est.values) << " -> " << c.out << "/estimate.csv\n";
    return kOk;
}

int cmd_convergence(const Common& c, const std::vector<double>& times, const std::vector<int>& orders,
                    std::optional<int> L_opt) {
    rsode::RunConfig cfg = resolve_config(c);
    std::vector<rsode::ConvergenceCase> cases;
    if (!times.empty()) {
        if (orders.empty()) throw rsode::SpecError("--t needs --orders");
        for (double t : times) cases.push_back({t, orders, {}});
    } else if (cfg.convergence) {
        cases = cfg.convergence->cases;
        if (!orders.empty())
            for (auto& cc : cases) cc.orders = orders;
    }
    if (cases.empty()) throw rsode::SpecError("no convergence cases (config 'convergence' or --t/--orders)");
    if (cfg.grid.lo)
        for (auto& cc : cases)
            if (cc.grid.empty()) cc.grid = rsode::linspace(*cfg.grid.lo, *cfg.grid.hi, cfg.grid.points);
    rsode::ConvergenceOptions opt;
    opt.L = L_opt ? *L_opt : cfg.convergence ? cfg.convergence->L : 30;
    opt.grid_points = cfg.grid.points;
    opt.tail_tol = cfg.tail_tol;
    cfg.estimator.validate();

    Manifest m("convergence", c, cfg);
    nlohmann::json jc = nlohmann::json::array();
    for (const auto& cc : cases) jc.push_back({{"t", cc.t}, {"orders", cc.orders}});
    m.parameters() = {{"cases", jc}, {"L", opt.L}, {"M", cfg.estimator.M}};
    m.write();
    int max_order = opt.L;
    for (const auto& cc : cases)
        for (int N : cc.orders) max_order = std::max(max_order, N);
    report_warnings(cfg.problem.warnings(max_order));

    const auto study = rsode::run_convergence(cfg.problem, cfg.estimator, cases, opt);
    for (const auto& row : study.cells)
        for (const auto& cell : row) report_estimate_warnings(cell.estimate);
    for (const auto& r : study.references)
        if (r) report_estimate_warnings(*r);

    std::vector<rsode::RegressionResult> regressions;
    if (opt.L > 0) {
        for (const auto& cc : study.cases) {
            std::vector<double> de;
            std::vector<double> e;
            for (const auto& d : study.delta_eps) {
                if (d.t != cc.t) continue;
                for (const auto& r : study.reference_error)
                    if (r.t == cc.t && r.N == d.N) {
                        de.push_back(d.value);
                        e.push_back(r.value);
                    }
            }
            try {
                auto r = rsode::regress_error_vs_difference(de, e);
                r.t = cc.t;
                regressions.push_back(r);
            } catch (const rsode::InsufficientDataError& err) {
                std::cerr << "warning: t=" << cc.t << ": no regression (" << err.what() << ")\n";
            }
        }
    }

    std::string estimates;
    {
        std::ostringstream os;
        bool header = true;
        for (const auto& row : study.cells)
            for (const auto& cell : row) {
                rsode::write_estimate_csv(os, cell.estimate, header);
                header = false;
            }
        for (const auto& r : study.references)
            if (r) rsode::write_estimate_csv(os, *r, header);
        estimates = os.str();
    }
    rsode::write_file(c.out, "estimates.csv", estimates);
    rsode::write_file(c.out, "consecutive_norms.csv",
                      to_text([&](std::ostream& os) { rsode::write_consecutive_norms_csv(os, study); }));
    rsode::write_file(c.out, "reference_errors.csv",
                      to_text([&](std::ostream& os) { rsode::write_reference_errors_csv(os, study); }));
    rsode::write_file(c.out, "pointwise_differences.csv",
                      to_text([&](std::ostream& os) { rsode::write_pointwise_csv(os, study); }));
    rsode::write_file(c.out, "regression.csv",
                      to_text([&](std::ostream& os) { rsode::write_regression_csv(os, regressions); }));
    m.finish({"estimates.csv", "consecutive_norms.csv", "reference_errors.csv", "pointwise_differences.csv",
              "regression.csv"});

    std::cout << "t,N,delta_eps\n";
    for (const auto& d : study.delta_eps) std::cout << d.t << ',' << d.N << ',' << rsode::format_number(d.value) << '\n';
    for (const auto& r : regressions)
        std::cout << "t=" << r.t << ": alpha=" << rsode::format_number(r.alpha) << " (" << r.n_points << " points)\n";
    return kOk;
}

int cmd_sampling(const Common& c, const std::vector<double>& times_opt, std::optional<int> N_opt,
                 const std::vector<std::size_t>& prefixes_opt) {
    rsode::RunConfig cfg = resolve_config(c);
    rsode::SamplingSettings s = cfg.sampling ? *cfg.sampling : rsode::SamplingSettings{};
    if (!times_opt.empty()) s.times = times_opt;
    if (N_opt) s.N = *N_opt;
    if (!prefixes_opt.empty()) s.prefixes = prefixes_opt;
    if (s.times.empty()) throw rsode::SpecError("no sampling times (config 'sampling' or --t)");
    cfg.estimator.N = s.N;
    cfg.estimator.validate();
    Manifest m("sampling", c, cfg);
    m.parameters() = {{"times", s.times}, {"N", s.N}, {"prefixes", s.prefixes}, {"M", cfg.estimator.M}};
    m.write();
    report_warnings(cfg.problem.warnings(s.N));
    const auto study = rsode::sampling_error_study(cfg.problem, cfg.estimator, s.times, s.prefixes, cfg.grid.points,
                                                   cfg.tail_tol);
    rsode::write_file(c.out, "sampling_errors.csv",
                      to_text([&](std::ostream& os) { rsode::write_sampling_errors_csv(os, study); }));
    rsode::write_file(c.out, "sampling_slopes.csv",
                      to_text([&](std::ostream& os) { rsode::write_sampling_slopes_csv(os, study); }));
    m.finish({"sampling_errors.csv", "sampling_slopes.csv"});
    for (const auto& r : study.slopes)
        std::cout << "t=" << r.t << ": log-log slope " << rsode::format_number(r.slope) << '\n';
    return kOk;
}

int cmd_cv_compare(const Common& c, std::optional<double> t_opt, const std::vector<int>& orders_opt) {
    rsode::RunConfig cfg = resolve_config(c);
    rsode::CvCompareSettings s = cfg.cv_compare ? *cfg.cv_compare : rsode::CvCompareSettings{};
    if (cfg.cv_compare) {
        // Command-line control options override the section.
        if (c.control) s.cv.which = cfg.estimator.cv.which;
        if (c.control_order) s.cv.N0 = cfg.estimator.cv.N0;
        if (c.pilot_M) s.cv.pilot_M = cfg.estimator.cv.pilot_M;
    } else {
        s.cv = cfg.estimator.cv;
    }
    if (t_opt) s.t = *t_opt;
    if (!orders_opt.empty()) s.orders = orders_opt;
    if (!t_opt && !cfg.cv_compare) throw rsode::SpecError("no time given (--t or config 'cv_compare')");
    if (s.orders.empty()) throw rsode::SpecError("no orders given (--orders or config 'cv_compare')");
    cfg.estimator.cv = s.cv;
    for (int N : s.orders) {
        rsode::EstimatorConfig e = cfg.estimator;
        e.N = N;
        e.method = rsode::Method::ControlVariates;
        e.validate();
    }
    Manifest m("cv-compare", c, cfg);
    m.parameters() = {{"t", s.t},
                      {"orders", s.orders},
                      {"control", rsode::control_name(s.cv.which)},
                      {"N0", s.cv.N0},
                      {"pilot_M", s.cv.pilot_M},
                      {"M", cfg.estimator.M}};
    m.write();
    const auto cmp =
        rsode::compare_control_variates(cfg.problem, cfg.estimator, s.t, s.orders, cfg.grid.points, cfg.tail_tol);
    for (const auto& e : cmp.cv) report_estimate_warnings(e);
    rsode::write_file(c.out, "cv_compare.csv", to_text([&](std::ostream& os) { rsode::write_cv_compare_csv(os, cmp); }));
    rsode::write_file(c.out, "cv_pointwise.csv",
                      to_text([&](std::ostream& os) { rsode::write_cv_pointwise_csv(os, cmp); }));
    m.finish({"cv_compare.csv", "cv_pointwise.csv"});
    std::cout << to_text([&](std::ostream& os) { rsode::write_cv_compare_csv(os, cmp); });
    return kOk;
}

int cmd_advise(const Common& c, std::optional<double> t_opt, std::optional<double> eps_opt,
               std::optional<double> r_opt, std::optional<double> s_opt) {
    rsode::RunConfig cfg = resolve_config(c);
    rsode::AdvisorSettings a = cfg.advisor ? *cfg.advisor : rsode::AdvisorSettings{};
    if (t_opt) a.t = *t_opt;
    if (eps_opt) a.epsilon = *eps_opt;
    if (r_opt) a.r = *r_opt;
    if (s_opt) a.s = *s_opt;
    if (!t_opt && !cfg.advisor) throw rsode::SpecError("no time given (--t or config 'advisor')");
    if (!a.r) a.r = cfg.problem.radius;
    if (!a.r || !std::isfinite(*a.r))
        throw rsode::SpecError("the advisor needs a finite radius r (--r, advisor.r or problem.radius)");
    const double rho = std::abs(a.t - cfg.problem.t0);
    const double s = a.s ? *a.s : rsode::default_advisor_s(rho, *a.r);
    const auto bA = rsode::advisor_bounds(cfg.problem.A);
    const auto bB = rsode::advisor_bounds(cfg.problem.B);
    const double y0 = cfg.problem.Y0.l2_norm();
    const double y1 = cfg.problem.Y1.l2_norm();
    Manifest m("advise", c, cfg);
    m.parameters() = {{"t", a.t}, {"epsilon", a.epsilon}, {"r", *a.r}, {"s", s}, {"rho", rho}};
    m.write();
    const int n = rsode::advise_truncation(bA, bB, y0, y1, *a.r, rho, s, a.epsilon);
    std::ostringstream os;
    os << "t,rho,r,s,epsilon,N\n"
       << rsode::format_number(a.t) << ',' << rsode::format_number(rho) << ',' << rsode::format_number(*a.r) << ','
       << rsode::format_number(s) << ',' << rsode::format_number(a.epsilon) << ',' << n << '\n';
    rsode::write_file(c.out, "advice.csv", os.str());
    m.finish({"advice.csv"});
    std::cout << "truncation order N >= " << n << " bounds the mean-square error at t=" << a.t << " by "
              << a.epsilon << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density estimation for random second-order linear ODEs by power series and Monte Carlo"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    std::optional<double> t;
    std::optional<int> N;
    std::vector<double> times;
    std::vector<int> orders;
    std::optional<int> L;
    std::vector<std::size_t> prefixes;
    std::optional<double> epsilon;
    std::optional<double> r;
    std::optional<double> s;
    std::string preset_arg;

    auto* est = app.add_subcommand("estimate", "estimate the density of X^N(t) on a grid");
    add_common(est, common);
    est->add_option("--t", t, "time");
    est->add_option("--N", N, "truncation order");

    auto* conv = app.add_subcommand("convergence", "consecutive differences, reference errors and regression");
    add_common(conv, common);
    conv->add_option("--t", times, "times (overrides the config cases)");
    conv->add_option("--orders", orders, "truncation orders");
    conv->add_option("--L", L, "reference order (0 disables reference errors)");

    auto* samp = app.add_subcommand("sampling", "Monte Carlo error over nested sample prefixes");
    add_common(samp, common);
    samp->add_option("--t", times, "times");
    samp->add_option("--N", N, "truncation order");
    samp->add_option("--prefixes", prefixes, "prefix sizes P");

    auto* cv = app.add_subcommand("cv-compare", "crude versus control-variates estimates");
    add_common(cv, common);
    cv->add_option("--t", t, "time");
    cv->add_option("--orders", orders, "truncation orders");

    auto* adv = app.add_subcommand("advise", "a priori truncation order for a target mean-square error");
    add_common(adv, common);
    adv->add_option("--t", t, "time");
    adv->add_option("--epsilon", epsilon, "target error");
    adv->add_option("--r", r, "radius with bounded coefficient series");
    adv->add_option("--s", s, "intermediate radius in (|t - t0|, r)");

    auto* pre = app.add_subcommand("preset", "print a bundled configuration (or list them)");
    pre->add_option("name", preset_arg, "preset name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*est) return cmd_estimate(common, t, N);
        if (*conv) return cmd_convergence(common, times, orders, L);
        if (*samp) return cmd_sampling(common, times, N, prefixes);
        if (*cv) return cmd_cv_compare(common, t, orders);
        if (*adv) return cmd_advise(common, t, epsilon, r, s);
        if (*pre) {
            if (preset_arg.empty()) {
                for (const auto& n : rsode::preset_names()) std::cout << n << '\n';
            } else {
                std::cout << rsode::preset_text(preset_arg);
            }
            return kOk;
        }
    } catch (const rsode::InsufficientDataError& e) {
        std::cerr << "error: insufficient data: " << e.what() << '\n';
        return kInsufficientData;
    } catch (const rsode::NumericalError& e) {
        std::cerr << "error: numerical: " << e.what() << '\n';
        return kNumericalError;
    } catch (const rsode::BudgetError& e) {
        std::cerr << "error: numerical: " << e.what() << '\n';
        return kNumericalError;
    } catch (const rsode::SpecError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const rsode::UnsupportedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalError;
    }
    return kOk;
}
