#include "rsode/config.hpp"

#include "rsode/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <sstream>

namespace rsode {

using nlohmann::json;

namespace {

// Error raised while reading a config value; carries the JSON pointer.
struct Located {
    std::string pointer;
    std::string message;
};

template <class F>
auto guarded(const std::string& ptr, F&& f) {
    try {
        return f();
    } catch (const Located&) {
        throw;
    } catch (const SpecError& e) {
        throw Located{ptr, e.what()};
    } catch (const UnsupportedError& e) {
        throw Located{ptr, e.what()};
    }
}

std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

// Line of every value in a syntactically valid JSON document, keyed by JSON pointer.
std::map<std::string, int> pointer_lines(std::string_view s) {
    struct Frame {
        bool object;
        std::string base;
        std::string key;
        std::size_t index = 0;
        bool expect_key = true;
    };
    std::map<std::string, int> lines;
    std::vector<Frame> stack;
    int line = 1;
    const auto current = [&]() -> std::string {
        if (stack.empty()) return "";
        const Frame& f = stack.back();
        return f.base + "/" + (f.object ? escape_token(f.key) : std::to_string(f.index));
    };
    const auto record = [&] { lines.emplace(current(), line); };
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        switch (c) {
            case '\n': ++line; break;
            case ' ': case '\t': case '\r': break;
            case '{':
            case '[': {
                record();
                const std::string base = current();
                stack.push_back({c == '{', base, {}, 0, true});
                break;
            }
            case '}':
            case ']':
                if (!stack.empty()) stack.pop_back();
                break;
            case ',':
                if (!stack.empty()) {
                    if (stack.back().object) {
                        stack.back().expect_key = true;
                    } else {
                        ++stack.back().index;
                    }
                }
                break;
            case ':':
                if (!stack.empty()) stack.back().expect_key = false;
                break;
            case '"': {
                std::string text;
                std::size_t j = i + 1;
                for (; j < s.size() && s[j] != '"'; ++j) {
                    if (s[j] == '\\' && j + 1 < s.size()) ++j;
                    text += s[j];
                }
                if (!stack.empty() && stack.back().object && stack.back().expect_key) {
                    stack.back().key = text;
                } else {
                    record();
                }
                i = j;
                break;
            }
            default: {
                record();
                while (i + 1 < s.size() && s[i + 1] != ',' && s[i + 1] != '}' && s[i + 1] != ']' &&
                       s[i + 1] != '\n' && s[i + 1] != ' ' && s[i + 1] != '\t' && s[i + 1] != '\r')
                    ++i;
                break;
            }
        }
    }
    return lines;
}

void check_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw Located{ptr, "expected an object"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw Located{ptr + "/" + escape_token(key), "unknown key '" + key + "'"};
    }
}

double read_number(const json& j, const std::string& ptr) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
    }
    throw Located{ptr, "expected a number"};
}

int read_int(const json& j, const std::string& ptr) {
    if (!j.is_number_integer()) throw Located{ptr, "expected an integer"};
    const auto v = j.get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw Located{ptr, "integer out of range"};
    return static_cast<int>(v);
}

std::size_t read_count(const json& j, const std::string& ptr) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw Located{ptr, "expected a nonnegative integer"};
    return j.get<std::size_t>();
}

std::uint64_t read_u64(const json& j, const std::string& ptr) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
    throw Located{ptr, "expected a nonnegative integer"};
}

bool read_bool(const json& j, const std::string& ptr) {
    if (!j.is_boolean()) throw Located{ptr, "expected true or false"};
    return j.get<bool>();
}

std::string read_string(const json& j, const std::string& ptr) {
    if (!j.is_string()) throw Located{ptr, "expected a string"};
    return j.get<std::string>();
}

template <class T, class F>
std::vector<T> read_array(const json& j, const std::string& ptr, F&& item) {
    if (!j.is_array()) throw Located{ptr, "expected an array"};
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], ptr + "/" + std::to_string(i)));
    return out;
}

Interval read_interval(const json& j, const std::string& ptr) {
    if (!j.is_array() || j.size() != 2) throw Located{ptr, "expected [lo, hi]"};
    return {read_number(j[0], ptr + "/0"), read_number(j[1], ptr + "/1")};
}

Distribution read_distribution(const json& j, const std::string& ptr) {
    if (j.is_number()) return Distribution::point_mass(j.get<double>());
    check_keys(j, ptr, {"family", "params", "truncate", "density", "support"});
    if (!j.contains("family")) throw Located{ptr, "distribution needs a 'family'"};
    const Family family = guarded(ptr + "/family", [&] { return family_from_name(read_string(j["family"], ptr + "/family")); });
    std::vector<double> params;
    if (j.contains("params"))
        params = read_array<double>(j["params"], ptr + "/params", read_number);
    std::optional<Interval> truncation;
    if (j.contains("truncate")) truncation = read_interval(j["truncate"], ptr + "/truncate");
    std::string density;
    if (j.contains("density")) density = read_string(j["density"], ptr + "/density");
    std::optional<Interval> support;
    if (j.contains("support")) support = read_interval(j["support"], ptr + "/support");
    return guarded(ptr, [&] { return Distribution::make(family, params, truncation, density, support); });
}

CoefficientModel read_coefficients(const json& j, const std::string& ptr) {
    CoefficientModel m;
    if (j.is_array()) {
        m.entries = read_array<Distribution>(j, ptr, read_distribution);
        return m;
    }
    check_keys(j, ptr, {"kind", "entries", "rule", "family", "degree_bound", "sup_norm_bounds"});
    if (j.contains("kind"))
        m.kind = guarded(ptr + "/kind", [&] { return kind_from_name(read_string(j["kind"], ptr + "/kind")); });
    if (j.contains("entries")) m.entries = read_array<Distribution>(j["entries"], ptr + "/entries", read_distribution);
    if (j.contains("rule"))
        m.rule = guarded(ptr + "/rule", [&] { return Expression(read_string(j["rule"], ptr + "/rule"), "n"); });
    if (j.contains("family")) m.family = read_distribution(j["family"], ptr + "/family");
    if (j.contains("degree_bound")) m.degree_bound = read_int(j["degree_bound"], ptr + "/degree_bound");
    if (j.contains("sup_norm_bounds"))
        m.sup_norm_bounds = read_array<double>(j["sup_norm_bounds"], ptr + "/sup_norm_bounds", read_number);
    guarded(ptr, [&] {
        m.validate();
        return 0;
    });
    return m;
}

ProblemSpec read_problem(const json& j, const std::string& ptr) {
    check_keys(j, ptr, {"t0", "A", "B", "Y0", "Y1", "radius"});
    ProblemSpec p;
    if (j.contains("t0")) p.t0 = read_number(j["t0"], ptr + "/t0");
    if (j.contains("A")) p.A = read_coefficients(j["A"], ptr + "/A");
    if (j.contains("B")) p.B = read_coefficients(j["B"], ptr + "/B");
    if (!j.contains("Y0")) throw Located{ptr, "problem needs Y0"};
    if (!j.contains("Y1")) throw Located{ptr, "problem needs Y1"};
    p.Y0 = read_distribution(j["Y0"], ptr + "/Y0");
    p.Y1 = read_distribution(j["Y1"], ptr + "/Y1");
    if (j.contains("radius") && !j["radius"].is_null()) p.radius = read_number(j["radius"], ptr + "/radius");
    guarded(ptr, [&] {
        p.validate();
        return 0;
    });
    return p;
}

ControlVariateConfig read_control(const json& j, const std::string& ptr, ControlVariateConfig cv) {
    check_keys(j, ptr, {"which", "N0", "pilot_M"});
    if (j.contains("which"))
        cv.which = guarded(ptr + "/which", [&] { return control_from_name(read_string(j["which"], ptr + "/which")); });
    if (j.contains("N0")) cv.N0 = read_int(j["N0"], ptr + "/N0");
    if (j.contains("pilot_M")) cv.pilot_M = read_count(j["pilot_M"], ptr + "/pilot_M");
    return cv;
}

EstimatorConfig read_estimator(const json& j, const std::string& ptr) {
    check_keys(j, ptr,
               {"N", "M", "role", "method", "control", "seed", "stream_id", "threads", "degenerate_threshold",
                "degenerate_fraction_warn", "independent_streams"});
    EstimatorConfig e;
    if (j.contains("N")) e.N = read_int(j["N"], ptr + "/N");
    if (j.contains("M")) e.M = read_count(j["M"], ptr + "/M");
    if (j.contains("role") && !j["role"].is_null())
        e.role = guarded(ptr + "/role", [&] { return role_from_name(read_string(j["role"], ptr + "/role")); });
    if (j.contains("method"))
        e.method = guarded(ptr + "/method", [&] { return method_from_name(read_string(j["method"], ptr + "/method")); });
    if (j.contains("control")) e.cv = read_control(j["control"], ptr + "/control", e.cv);
    if (j.contains("seed")) e.seed = read_u64(j["seed"], ptr + "/seed");
    if (j.contains("stream_id")) e.stream_id = read_u64(j["stream_id"], ptr + "/stream_id");
    if (j.contains("threads")) e.threads = static_cast<unsigned>(read_count(j["threads"], ptr + "/threads"));
    if (j.contains("degenerate_threshold"))
        e.degenerate_threshold = read_number(j["degenerate_threshold"], ptr + "/degenerate_threshold");
    if (j.contains("degenerate_fraction_warn"))
        e.degenerate_fraction_warn = read_number(j["degenerate_fraction_warn"], ptr + "/degenerate_fraction_warn");
    if (j.contains("independent_streams"))
        e.independent_streams = read_bool(j["independent_streams"], ptr + "/independent_streams");
    guarded(ptr, [&] {
        e.validate();
        return 0;
    });
    return e;
}

std::vector<int> read_orders(const json& j, const std::string& ptr) {
    auto orders = read_array<int>(j, ptr, read_int);
    if (orders.empty()) throw Located{ptr, "expected at least one order"};
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (orders[i] < 1) throw Located{ptr + "/" + std::to_string(i), "orders must be >= 1"};
    return orders;
}

RunConfig read_config(const json& j) {
    check_keys(j, "",
               {"name", "problem", "estimator", "grid", "tail_tol", "estimate", "convergence", "sampling", "cv_compare",
                "advisor"});
    RunConfig c;
    if (j.contains("name")) c.name = read_string(j["name"], "/name");
    if (!j.contains("problem")) throw Located{"", "config needs a 'problem' section"};
    c.problem = read_problem(j["problem"], "/problem");
    if (j.contains("estimator")) c.estimator = read_estimator(j["estimator"], "/estimator");
    if (j.contains("grid")) {
        const json& g = j["grid"];
        check_keys(g, "/grid", {"lo", "hi", "points"});
        if (g.contains("lo")) c.grid.lo = read_number(g["lo"], "/grid/lo");
        if (g.contains("hi")) c.grid.hi = read_number(g["hi"], "/grid/hi");
        if (g.contains("points")) c.grid.points = read_count(g["points"], "/grid/points");
        if (c.grid.points < 2) throw Located{"/grid/points", "grid needs at least 2 points"};
        if (c.grid.lo.has_value() != c.grid.hi.has_value())
            throw Located{"/grid", "give both lo and hi, or neither"};
        if (c.grid.lo && !(*c.grid.lo < *c.grid.hi)) throw Located{"/grid", "grid needs lo < hi"};
    }
    if (j.contains("tail_tol")) c.tail_tol = read_number(j["tail_tol"], "/tail_tol");
    if (j.contains("estimate")) {
        const json& e = j["estimate"];
        check_keys(e, "/estimate", {"t", "N"});
        EstimateSettings s;
        if (!e.contains("t")) throw Located{"/estimate", "estimate needs t"};
        s.t = read_number(e["t"], "/estimate/t");
        if (e.contains("N")) s.N = read_int(e["N"], "/estimate/N");
        c.estimate = s;
    }
    if (j.contains("convergence")) {
        const json& e = j["convergence"];
        check_keys(e, "/convergence", {"L", "cases"});
        ConvergenceSettings s;
        if (e.contains("L")) s.L = read_int(e["L"], "/convergence/L");
        if (e.contains("cases")) {
            s.cases = read_array<ConvergenceCase>(e["cases"], "/convergence/cases", [](const json& cj, const std::string& p) {
                check_keys(cj, p, {"t", "orders", "grid"});
                ConvergenceCase cc;
                if (!cj.contains("t") || !cj.contains("orders")) throw Located{p, "case needs t and orders"};
                cc.t = read_number(cj["t"], p + "/t");
                cc.orders = read_orders(cj["orders"], p + "/orders");
                if (cj.contains("grid")) cc.grid = read_array<double>(cj["grid"], p + "/grid", read_number);
                return cc;
            });
        }
        c.convergence = s;
    }
    if (j.contains("sampling")) {
        const json& e = j["sampling"];
        check_keys(e, "/sampling", {"N", "times", "prefixes"});
        SamplingSettings s;
        if (e.contains("N")) s.N = read_int(e["N"], "/sampling/N");
        if (e.contains("times")) s.times = read_array<double>(e["times"], "/sampling/times", read_number);
        if (e.contains("prefixes")) s.prefixes = read_array<std::size_t>(e["prefixes"], "/sampling/prefixes", read_count);
        c.sampling = s;
    }
    if (j.contains("cv_compare")) {
        const json& e = j["cv_compare"];
        check_keys(e, "/cv_compare", {"t", "orders", "control"});
        CvCompareSettings s;
        if (!e.contains("t")) throw Located{"/cv_compare", "cv_compare needs t"};
        s.t = read_number(e["t"], "/cv_compare/t");
        if (e.contains("orders")) s.orders = read_orders(e["orders"], "/cv_compare/orders");
        if (e.contains("control")) s.cv = read_control(e["control"], "/cv_compare/control", s.cv);
        c.cv_compare = s;
    }
    if (j.contains("advisor")) {
        const json& e = j["advisor"];
        check_keys(e, "/advisor", {"t", "epsilon", "r", "s"});
        AdvisorSettings s;
        if (!e.contains("t")) throw Located{"/advisor", "advisor needs t"};
        s.t = read_number(e["t"], "/advisor/t");
        if (e.contains("epsilon")) s.epsilon = read_number(e["epsilon"], "/advisor/epsilon");
        if (e.contains("r")) s.r = read_number(e["r"], "/advisor/r");
        if (e.contains("s")) s.s = read_number(e["s"], "/advisor/s");
        c.advisor = s;
    }
    return c;
}

json number_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json interval_json(const Interval& i) { return json::array({number_json(i.lo), number_json(i.hi)}); }

json distribution_json(const Distribution& d) {
    if (d.is_point_mass() && !d.truncation()) return d.params()[0];
    json j;
    j["family"] = std::string(family_name(d.family()));
    if (d.family() == Family::Custom) {
        j["density"] = d.custom_source();
        if (d.custom_support()) j["support"] = interval_json(*d.custom_support());
    } else {
        json p = json::array();
        for (double v : d.params()) p.push_back(number_json(v));
        j["params"] = p;
    }
    if (d.truncation()) j["truncate"] = interval_json(*d.truncation());
    return j;
}

json coefficients_json(const CoefficientModel& m) {
    json j;
    j["kind"] = kind_name(m.kind);
    json entries = json::array();
    for (const auto& d : m.entries) entries.push_back(distribution_json(d));
    j["entries"] = entries;
    if (m.rule) j["rule"] = m.rule->source();
    if (m.family) j["family"] = distribution_json(*m.family);
    if (m.degree_bound) j["degree_bound"] = *m.degree_bound;
    if (!m.sup_norm_bounds.empty()) {
        json b = json::array();
        for (double v : m.sup_norm_bounds) b.push_back(number_json(v));
        j["sup_norm_bounds"] = b;
    }
    return j;
}

json control_json(const ControlVariateConfig& cv) {
    return {{"which", control_name(cv.which)}, {"N0", cv.N0}, {"pilot_M", cv.pilot_M}};
}

json config_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    json p;
    p["t0"] = c.problem.t0;
    p["A"] = coefficients_json(c.problem.A);
    p["B"] = coefficients_json(c.problem.B);
    p["Y0"] = distribution_json(c.problem.Y0);
    p["Y1"] = distribution_json(c.problem.Y1);
    p["radius"] = c.problem.radius ? number_json(*c.problem.radius) : json(nullptr);
    j["problem"] = p;
    const EstimatorConfig& e = c.estimator;
    j["estimator"] = {{"N", e.N},
                      {"M", e.M},
                      {"role", e.role ? json(role_name(*e.role)) : json(nullptr)},
                      {"method", method_name(e.method)},
                      {"control", control_json(e.cv)},
                      {"seed", e.seed},
                      {"stream_id", e.stream_id},
                      {"threads", e.threads},
                      {"degenerate_threshold", e.degenerate_threshold},
                      {"degenerate_fraction_warn", e.degenerate_fraction_warn},
                      {"independent_streams", e.independent_streams}};
    json g{{"points", c.grid.points}};
    if (c.grid.lo) g["lo"] = *c.grid.lo;
    if (c.grid.hi) g["hi"] = *c.grid.hi;
    j["grid"] = g;
    j["tail_tol"] = c.tail_tol;
    if (c.estimate) {
        json s{{"t", c.estimate->t}};
        if (c.estimate->N) s["N"] = *c.estimate->N;
        j["estimate"] = s;
    }
    if (c.convergence) {
        json cases = json::array();
        for (const auto& cc : c.convergence->cases) {
            json x{{"t", cc.t}, {"orders", cc.orders}};
            if (!cc.grid.empty()) x["grid"] = cc.grid;
            cases.push_back(x);
        }
        j["convergence"] = {{"L", c.convergence->L}, {"cases", cases}};
    }
    if (c.sampling)
        j["sampling"] = {{"N", c.sampling->N}, {"times", c.sampling->times}, {"prefixes", c.sampling->prefixes}};
    if (c.cv_compare)
        j["cv_compare"] = {{"t", c.cv_compare->t}, {"orders", c.cv_compare->orders}, {"control", control_json(c.cv_compare->cv)}};
    if (c.advisor) {
        json s{{"t", c.advisor->t}, {"epsilon", c.advisor->epsilon}};
        if (c.advisor->r) s["r"] = number_json(*c.advisor->r);
        if (c.advisor->s) s["s"] = number_json(*c.advisor->s);
        j["advisor"] = s;
    }
    return j;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // Convert the byte offset into a line number.
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw SpecError(source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    try {
        return read_config(j);
    } catch (const Located& err) {
        const auto lines = pointer_lines(text);
        std::string ptr = err.pointer;
        int line = 1;
        for (;;) {
            const auto it = lines.find(ptr);
            if (it != lines.end()) {
                line = it->second;
                break;
            }
            const auto cut = ptr.rfind('/');
            if (cut == std::string::npos) break;
            ptr.resize(cut);
        }
        throw SpecError(source + ":" + std::to_string(line) + ": " + (err.pointer.empty() ? "/" : err.pointer) + ": " +
                        err.message);
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str(), path);
}

std::string dump_config(const RunConfig& c) { return config_json(c).dump(2) + "\n"; }

RunConfig preset(std::string_view name) { return parse_config(preset_text(name), "preset:" + std::string(name)); }

}  // namespace rsode
