#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <variant>

#include "narrowcap/asymptotics.hpp"
#include "narrowcap/error.hpp"
#include "narrowcap/geometry.hpp"
#include "narrowcap/greens.hpp"
#include "narrowcap/montecarlo.hpp"

namespace narrowcap::cli {

namespace {

constexpr int kSchemaVersion = 1;

/// Bad flag value: reported like a CLI11 parse error.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Values and formatting
// ---------------------------------------------------------------------------

using Cell = std::variant<double, std::int64_t, bool, std::string>;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cell_text(const Cell& c) {
    struct {
        std::string operator()(double v) const { return std::isfinite(v) ? fmt(v) : std::string(); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& v) const { return v; }
    } visit;
    return std::visit(visit, c);
}

nlohmann::json cell_json(const Cell& c) {
    struct {
        nlohmann::json operator()(double v) const { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
        nlohmann::json operator()(std::int64_t v) const { return v; }
        nlohmann::json operator()(bool v) const { return v; }
        nlohmann::json operator()(const std::string& v) const { return v; }
    } visit;
    return std::visit(visit, c);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

struct Report {
    std::string command;
    std::vector<std::pair<std::string, Cell>> params;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> replay;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::pair<std::string, Cell>> summary;
    std::vector<std::string> warnings;

    void param(const std::string& k, Cell v) { params.emplace_back(k, std::move(v)); }
    void sum(const std::string& k, Cell v) { summary.emplace_back(k, std::move(v)); }
    void flag(const std::string& name, const std::string& value) {
        replay.push_back("--" + name);
        replay.push_back(value);
    }
    void flag(const std::string& name, double v) { flag(name, fmt(v)); }
    void flag(const std::string& name) { replay.push_back("--" + name); }
};

std::string replay_line(const Report& r) {
    std::string s = "narrowcap " + r.command;
    for (const auto& a : r.replay) s += " " + a;
    return s;
}

void write_csv(const Report& r, std::ostream& os) {
    os << "# narrowcap " << r.command << "\n";
    os << "# schema=" << r.command << "/" << kSchemaVersion << "\n";
    for (const auto& [k, v] : r.params) os << "# " << k << "=" << cell_text(v) << "\n";
    os << "# seed=" << (r.seed ? std::to_string(*r.seed) : std::string("none")) << "\n";
    for (const auto& [k, v] : r.summary) os << "# " << k << "=" << cell_text(v) << "\n";
    for (const auto& w : r.warnings) os << "# warning=" << w << "\n";
    os << "# replay: " << replay_line(r) << "\n";
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(cell_text(row[i]));
        os << "\n";
    }
}

void write_json(const Report& r, std::ostream& os) {
    nlohmann::ordered_json j;
    j["command"] = r.command;
    j["schema_version"] = kSchemaVersion;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = cell_json(v);
    j["parameters"] = params;
    j["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json();
    j["columns"] = r.columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json o;
        for (std::size_t i = 0; i < row.size(); ++i) o[r.columns[i]] = cell_json(row[i]);
        rows.push_back(o);
    }
    j["rows"] = rows;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.summary) summary[k] = cell_json(v);
    j["summary"] = summary;
    j["warnings"] = r.warnings;
    j["replay"] = replay_line(r);
    // Default serialization of doubles already round-trips.
    os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Flag parsing
// ---------------------------------------------------------------------------

double parse_number(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError(what + ": '" + s + "' is not a number");
    }
    if (used != s.size()) throw UsageError(what + ": '" + s + "' is not a number");
    return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

Vec2 parse_pair(const std::string& s, const std::string& what) {
    const auto v = parse_list(s, what);
    if (v.size() != 2) throw UsageError(what + ": expected two comma-separated numbers, got '" + s + "'");
    return {v[0], v[1]};
}

struct Sweep {
    double start, stop;
    int count;
    double at(int i) const { return count == 1 ? start : start + (stop - start) * i / (count - 1); }
};

Sweep parse_sweep(const std::string& s, const std::string& what) {
    std::stringstream ss(s);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
        throw UsageError(what + ": expected start:stop:count, got '" + s + "'");
    const double n = parse_number(c, what);
    if (n < 1 || n != std::floor(n) || n > 1e6) throw UsageError(what + ": count must be a positive integer");
    return {parse_number(a, what), parse_number(b, what), static_cast<int>(n)};
}

std::pair<int, int> parse_grid(const std::string& s) {
    const auto x = s.find_first_of("xX");
    if (x == std::string::npos) throw UsageError("--grid: expected NxM, got '" + s + "'");
    const double n = parse_number(s.substr(0, x), "--grid"), m = parse_number(s.substr(x + 1), "--grid");
    if (n < 2 || m < 2 || n != std::floor(n) || m != std::floor(m) || n * m > 4e6)
        throw UsageError("--grid: N and M must be integers >= 2");
    return {static_cast<int>(n), static_cast<int>(m)};
}

Domain domain_flag(const std::string& s) {
    try {
        return parse_domain(s);
    } catch (const PreconditionError& e) {
        throw UsageError(std::string("--domain: ") + e.what());
    }
}

std::string pair_text(const Vec2& v) { return fmt(v.x1) + "," + fmt(v.x2); }

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct OutputArgs {
    std::string format = "csv";
    std::string output;
};

struct TrapArgs {
    std::string domain = "disk";
    std::string xi = "0,0";
    std::string ab = "1,1";
    double phi = 0.0;
    double eps = 0.0;
    double D = 1.0;
    double series_tol = 1e-14;
    int series_nmax = 256;
    double fd_step = 1e-4;
    bool phi_given = false;
};

struct WalkerArgs {
    std::int64_t walkers = 100000;
    double dt = 1e-5;
    std::uint64_t seed = 1;
    std::int64_t max_steps = 20000000;
    double max_dt = 1e-2;
    double wall_floor = 0.3;
    bool fixed_step = false;
    bool no_bridge = false;
    unsigned threads = 0;

    WalkerConfig config() const {
        WalkerConfig c;
        c.n_walkers = walkers;
        c.dt = dt;
        c.seed = seed;
        c.max_steps = max_steps;
        c.max_dt = std::max(max_dt, dt);
        c.wall_floor = wall_floor;
        c.adaptive = !fixed_step;
        c.bridge = !no_bridge;
        c.threads = threads;
        return c;
    }
};

void add_output(CLI::App* sub, OutputArgs& o) {
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--output,-o", o.output, "Write to this file instead of stdout");
    sub->add_option("--config", "Flat key=value file; flags on the command line win");
}

void add_domain(CLI::App* sub, TrapArgs& t) {
    sub->add_option("--domain", t.domain, "disk | rect:L,d | ellipse:A,B")->capture_default_str();
    sub->add_option("--series-tol", t.series_tol, "Image-series truncation tolerance")->capture_default_str();
    sub->add_option("--series-nmax", t.series_nmax, "Image-series term cap")->capture_default_str();
    sub->add_option("--fd-step", t.fd_step, "Finite-difference step relative to the domain diameter")
        ->capture_default_str();
}

void add_trap(CLI::App* sub, TrapArgs& t, bool with_center) {
    add_domain(sub, t);
    if (with_center) sub->add_option("--xi", t.xi, "Trap center x,y")->capture_default_str();
    sub->add_option("--ab", t.ab, "Trap semi-axes a,b with a >= b")->capture_default_str();
    if (with_center) sub->add_option("--phi", t.phi, "Trap angle (radians)")->capture_default_str();
    sub->add_option("--eps", t.eps, "Trap scale epsilon")->required();
    sub->add_option("--diffusivity,-D", t.D, "Diffusivity")->capture_default_str();
}

void add_walkers(CLI::App* sub, WalkerArgs& w) {
    sub->add_option("--walkers", w.walkers, "Number of walkers")->capture_default_str();
    sub->add_option("--dt", w.dt, "Time step near the trap")->capture_default_str();
    sub->add_option("--seed", w.seed, "Random seed")->capture_default_str();
    sub->add_option("--max-steps", w.max_steps, "Walkers are censored at time max-steps * dt")
        ->capture_default_str();
    sub->add_option("--max-dt", w.max_dt, "Largest time step far from the trap")->capture_default_str();
    sub->add_option("--wall-floor", w.wall_floor, "Step-size floor near curved walls, in curvature radii")
        ->capture_default_str();
    sub->add_flag("--fixed-step", w.fixed_step, "Use dt everywhere");
    sub->add_flag("--no-bridge", w.no_bridge, "Absorb only on discrete steps");
    sub->add_option("--threads", w.threads, "Worker threads (0: all, capped by NARROWCAP_THREADS)")
        ->capture_default_str();
}

SeriesControl series(const TrapArgs& t) {
    SeriesControl c;
    c.tol = t.series_tol;
    c.n_max = t.series_nmax;
    c.fd_step = t.fd_step;
    try {
        c.validate();
    } catch (const PreconditionError& e) {
        throw UsageError(e.what());
    }
    return c;
}

void echo_domain(Report& r, const TrapArgs& t, const Domain& d) {
    r.param("domain", d.describe());
    r.param("series_tol", t.series_tol);
    r.param("series_nmax", static_cast<std::int64_t>(t.series_nmax));
    r.param("fd_step", t.fd_step);
    r.flag("domain", d.describe());
    r.flag("series-tol", t.series_tol);
    r.flag("series-nmax", std::to_string(t.series_nmax));
    r.flag("fd-step", t.fd_step);
}

void echo_trap(Report& r, const TrapArgs& t, const Domain& d, const Vec2& xi, const Vec2& ab, bool with_center) {
    echo_domain(r, t, d);
    if (with_center) {
        r.param("xi", pair_text(xi));
        r.flag("xi", pair_text(xi));
    }
    r.param("a", ab.x1);
    r.param("b", ab.x2);
    r.flag("ab", pair_text(ab));
    if (with_center) {
        r.param("phi", t.phi);
        r.flag("phi", t.phi);
    }
    r.param("eps", t.eps);
    r.param("diffusivity", t.D);
    r.flag("eps", t.eps);
    r.flag("diffusivity", t.D);
}

void echo_walkers(Report& r, const WalkerArgs& w) {
    r.param("walkers", w.walkers);
    r.param("dt", w.dt);
    r.param("max_steps", w.max_steps);
    r.param("max_dt", w.max_dt);
    r.param("wall_floor", w.wall_floor);
    r.param("adaptive", !w.fixed_step);
    r.param("bridge", !w.no_bridge);
    r.seed = w.seed;
    r.flag("walkers", std::to_string(w.walkers));
    r.flag("dt", w.dt);
    r.flag("seed", std::to_string(w.seed));
    r.flag("max-steps", std::to_string(w.max_steps));
    r.flag("max-dt", w.max_dt);
    r.flag("wall-floor", w.wall_floor);
    if (w.fixed_step) r.flag("fixed-step");
    if (w.no_bridge) r.flag("no-bridge");
}

void echo_output(Report& r, const OutputArgs& o) {
    r.flag("format", o.format);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

Report cmd_tau(const TrapArgs& t, const OutputArgs& o) {
    const Domain domain = domain_flag(t.domain);
    const Vec2 xi = parse_pair(t.xi, "--xi");
    const Vec2 ab = parse_pair(t.ab, "--ab");
    Report r;
    r.command = "tau";
    echo_trap(r, t, domain, xi, ab, true);
    echo_output(r, o);

    const Trap trap(xi, ab.x1, ab.x2, t.eps, t.phi);
    ExpansionResult res;
    std::string method;
    if (domain.is_disk()) {
        res = disk_tau(xi, ab.x1, ab.x2, t.phi, t.eps, t.D);
        method = "closed-form";
    } else {
        check_trap_fits(domain, trap);
        const GreensFunction greens(domain, series(t));
        res = tau_general(greens, trap, t.D);
        method = greens.closed_form() ? "closed-form" : "image-series";
    }
    if (res.extrapolation) r.warnings.push_back("eps*max(a,b) is not below a quarter of the distance to the boundary");
    r.columns = {"tau0", "tau2", "tau", "nu", "S", "extrapolation", "method"};
    r.rows.push_back({res.tau0, res.tau2, res.tau, res.nu, res.S, res.extrapolation, method});
    return r;
}

struct MfptArgs {
    std::string x = "0,0";
    std::string sweep_r;
    double theta = 0.0;
    std::string phis;
};

Report cmd_mfpt(const TrapArgs& t, const MfptArgs& m, const OutputArgs& o) {
    const Domain domain = domain_flag(t.domain);
    const Vec2 ab = parse_pair(t.ab, "--ab");
    const Vec2 x = parse_pair(m.x, "--x");
    const bool sweep = !m.sweep_r.empty();
    const Vec2 xi0 = parse_pair(t.xi, "--xi");
    std::vector<double> phis = m.phis.empty() ? std::vector<double>{t.phi} : parse_list(m.phis, "--phis");

    Report r;
    r.command = "mfpt";
    echo_trap(r, t, domain, xi0, ab, true);
    r.param("x", pair_text(x));
    r.flag("x", pair_text(x));
    if (sweep) {
        const Sweep s = parse_sweep(m.sweep_r, "--sweep-r");
        r.param("sweep_r", m.sweep_r);
        r.param("theta", m.theta);
        r.flag("sweep-r", fmt(s.start) + ":" + fmt(s.stop) + ":" + std::to_string(s.count));
        r.flag("theta", m.theta);
    }
    if (!m.phis.empty()) {
        std::string joined;
        for (double p : phis) joined += (joined.empty() ? "" : ",") + fmt(p);
        r.param("phis", joined);
        r.flag("phis", joined);
    }
    echo_output(r, o);
    if (ab.x1 == ab.x2 && (t.phi_given || !m.phis.empty())) {
        r.warnings.push_back("circular trap: orientation has no effect");
    }

    std::vector<Vec2> centers;
    if (sweep) {
        const Sweep s = parse_sweep(m.sweep_r, "--sweep-r");
        for (int i = 0; i < s.count; ++i) centers.push_back({s.at(i) * std::cos(m.theta), s.at(i) * std::sin(m.theta)});
    } else {
        centers.push_back(xi0);
    }

    const GreensFunction greens(domain, series(t));
    const bool origin_disk = domain.is_disk() && x == Vec2{0.0, 0.0};
    r.columns = {"x1", "x2", "xi1", "xi2", "phi", "u0", "u2", "u", "u2_origin_closed_form", "extrapolation"};
    bool any_extrapolation = false;
    for (const Vec2& xi : centers) {
        for (double phi : phis) {
            const Trap trap(xi, ab.x1, ab.x2, t.eps, phi);
            check_trap_fits(domain, trap);
            if (trap.contains(x)) throw PreconditionError("evaluation point lies inside the trap");
            const PointMFPT u = u_point_general(greens, x, trap, t.D);
            const double closed = origin_disk ? u2_origin_disk(norm(xi), std::atan2(xi.x2, xi.x1), phi, ab.x1, ab.x2)
                                              : std::nan("");
            any_extrapolation = any_extrapolation || u.extrapolation;
            r.rows.push_back({x.x1, x.x2, xi.x1, xi.x2, trap.phi(), u.u0, u.u2, u.u, closed, u.extrapolation});
        }
    }
    if (any_extrapolation) r.warnings.push_back("some rows are outside the validity guard (extrapolation=true)");
    return r;
}

struct FieldArgs {
    std::string grid;
    double margin = 0.05;
    unsigned threads = 0;
};

Report cmd_field(const TrapArgs& t, const FieldArgs& f, const OutputArgs& o) {
    const Domain domain = domain_flag(t.domain);
    const Vec2 ab = parse_pair(t.ab, "--ab");
    const auto [n, m] = parse_grid(f.grid);
    if (!(f.margin >= 0.0 && f.margin < 0.5)) throw UsageError("--margin must lie in [0, 0.5)");

    Report r;
    r.command = "field";
    echo_trap(r, t, domain, {}, ab, false);
    r.param("grid", std::to_string(n) + "x" + std::to_string(m));
    r.param("margin", f.margin);
    r.flag("grid", std::to_string(n) + "x" + std::to_string(m));
    r.flag("margin", f.margin);
    echo_output(r, o);

    const auto [lo, hi] = domain.bounding_box();
    const Vec2 span = hi - lo;
    const Vec2 a = lo + f.margin * span, b = hi - f.margin * span;
    std::vector<Point2> grid;
    grid.reserve(static_cast<std::size_t>(n) * m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i)
            grid.push_back({a.x1 + (b.x1 - a.x1) * i / (n - 1), a.x2 + (b.x2 - a.x2) * j / (m - 1)});

    const GreensFunction greens(domain, series(t));
    const auto field = orientation_field(greens, grid, ab.x1, ab.x2, t.eps, t.D, f.threads);
    r.columns = {"xi1", "xi2", "p1", "p2", "phi_star", "tau2_star", "flag"};
    std::int64_t failed = 0;
    const double nan = std::nan("");
    for (const auto& s : field) {
        if (s.ok) {
            r.rows.push_back({s.xi.x1, s.xi.x2, s.p.x1, s.p.x2, s.phi_star, s.tau2_at_phi_star, s.flag});
        } else {
            ++failed;
            r.rows.push_back({s.xi.x1, s.xi.x2, nan, nan, nan, nan, s.flag});
        }
    }
    r.sum("points", static_cast<std::int64_t>(field.size()));
    r.sum("flagged_points", failed);
    return r;
}

void echo_estimate(Report& r, const FptEstimate& e) {
    r.sum("n_absorbed", e.n_absorbed);
    r.sum("n_censored", e.n_censored);
    r.sum("n_projected", e.n_projected);
    r.sum("steps_per_walker", static_cast<double>(e.total_steps) / static_cast<double>(e.n_walkers));
    r.sum("censoring_flag", e.censoring_flag);
    r.sum("step_flag", e.step_flag);
    r.sum("cap_flag", e.cap_flag);
    if (e.censoring_flag) r.warnings.push_back("more than 1% of walkers censored");
    if (e.step_flag) r.warnings.push_back("sqrt(2 D dt) is not below eps*b/4");
    if (e.cap_flag) r.warnings.push_back("max_steps*dt is below 50 times the estimated mean");
}

struct SimulateArgs {
    std::string mode = "global";
    std::string x = "0,0";
};

Report cmd_simulate(const TrapArgs& t, const SimulateArgs& s, const WalkerArgs& w, const OutputArgs& o) {
    const Domain domain = domain_flag(t.domain);
    const Vec2 xi = parse_pair(t.xi, "--xi");
    const Vec2 ab = parse_pair(t.ab, "--ab");
    const bool point = s.mode == "point";
    const Vec2 x = parse_pair(s.x, "--x");

    Report r;
    r.command = "simulate";
    echo_trap(r, t, domain, xi, ab, true);
    r.param("mode", s.mode);
    r.flag("mode", s.mode);
    if (point) {
        r.param("x", pair_text(x));
        r.flag("x", pair_text(x));
    }
    echo_walkers(r, w);
    echo_output(r, o);

    const Trap trap(xi, ab.x1, ab.x2, t.eps, t.phi);
    const WalkerConfig cfg = w.config();
    const FptEstimate e = point ? simulate_mfpt(x, domain, trap, t.D, cfg) : simulate_gmfpt(domain, trap, t.D, cfg);

    // Two-term prediction for comparison, when it can be evaluated.
    double predicted = std::nan("");
    try {
        const GreensFunction greens(domain, series(t));
        predicted = point ? u_point_general(greens, x, trap, t.D).u : tau_general(greens, trap, t.D).tau;
    } catch (const Error& err) {
        r.warnings.push_back(std::string("no asymptotic prediction: ") + err.what());
    }
    echo_estimate(r, e);
    r.columns = {"mean", "std_error", "n_absorbed", "n_censored", "asymptotic", "z_score"};
    r.rows.push_back({e.mean, e.std_error, e.n_absorbed, e.n_censored, predicted, (e.mean - predicted) / e.std_error});
    return r;
}

// --- validate ---------------------------------------------------------------

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

bool validate_radial(Report& r, double D) {
    const std::vector<double> eps = {0.1, 0.05, 0.02, 0.01, 0.005};
    const GreensFunction greens(Domain::unit_disk());
    r.columns = {"eps", "exact", "one_term", "two_term", "rel_error_one_term", "rel_error_two_term"};
    std::vector<double> e1, e2, a1, a2;
    for (double e : eps) {
        const ExpansionResult res = tau_general(greens, Trap({0.0, 0.0}, 1.0, 1.0, e, 0.0), D);
        const double exact = exact_radial_gmfpt(e, D);
        const double one = res.tau0 / D;
        a1.push_back(std::abs(one - exact));
        a2.push_back(std::abs(res.tau - exact));
        e1.push_back(a1.back() / exact);
        e2.push_back(a2.back() / exact);
        r.rows.push_back({e, exact, one, res.tau, e1.back(), e2.back()});
    }
    const double s1 = fit_slope(eps, e1), s2 = fit_slope(eps, e2);
    r.sum("slope_one_term", s1);
    r.sum("slope_two_term", s2);
    // The absolute errors carry an extra log(1/eps) factor; reported only.
    r.sum("slope_one_term_absolute", fit_slope(eps, a1));
    r.sum("slope_two_term_absolute", fit_slope(eps, a2));
    return s1 >= 1.8 && s1 <= 2.2 && s2 >= 3.5 && s2 <= 4.3;
}

bool validate_centered(Report& r, const Vec2& ab, double D) {
    const GreensFunction greens(Domain::unit_disk());
    r.columns = {"eps", "centered_formula", "general_pipeline", "rel_diff"};
    double worst = 0.0;
    for (double e : {0.1, 0.05, 0.02, 0.01}) {
        if (e * ab.x1 >= 1.0) continue;
        const double c = centered_ellipse_gmfpt(ab.x1, ab.x2, e, D);
        const double g = tau_general(greens, Trap({0.0, 0.0}, ab.x1, ab.x2, e, 0.0), D).tau;
        worst = std::max(worst, rel_diff(c, g));
        r.rows.push_back({e, c, g, rel_diff(c, g)});
    }
    r.sum("max_rel_diff", worst);
    return worst < 1e-12;
}

bool validate_offcenter(Report& r, const Vec2& xi, const Vec2& ab, double phi, double D) {
    const GreensFunction greens(Domain::unit_disk());
    r.columns = {"eps", "disk_closed_form", "general_pipeline", "rel_diff"};
    double worst = 0.0;
    for (double e : {0.05, 0.03, 0.02, 0.01}) {
        const Trap trap(xi, ab.x1, ab.x2, e, phi);
        const double c = disk_tau(xi, ab.x1, ab.x2, phi, e, D).tau;
        const double g = tau_general(greens, trap, D).tau;
        worst = std::max(worst, rel_diff(c, g));
        r.rows.push_back({e, c, g, rel_diff(c, g)});
    }
    r.sum("max_rel_diff", worst);
    return worst < 1e-12;
}

bool validate_slit(Report& r, double D) {
    const Domain domain = Domain::rectangle(1.0, 0.8);
    const GreensFunction greens(domain);
    const Point2 xi{0.3, 0.4};
    const double eps = 0.2, a = 1.0, delta = 1e-9;
    const SourceTerms src = greens.source_terms(xi);
    auto tau2 = [&](double b, double phi) { return tau_general(domain, Trap(xi, a, b, eps, phi), D, src).tau2; };

    r.columns = {"b", "tau2_phi_pi_2", "tau2_phi_pi_6", "jump_phi_pi_2", "jump_phi_pi_6"};
    double max_jump = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double b = a * i / 100.0;
        const double nb = i < 100 ? b + delta : b - delta;
        const double t1 = tau2(b, kPi / 2), t2 = tau2(b, kPi / 6);
        const double j1 = std::abs(tau2(nb, kPi / 2) - t1), j2 = std::abs(tau2(nb, kPi / 6) - t2);
        max_jump = std::max({max_jump, j1, j2});
        r.rows.push_back({b, t1, t2, j1, j2});
    }
    const double gap = std::abs(tau2(a, kPi / 2) - tau2(a, kPi / 6));
    const double slit = std::abs(slit_tau(domain, xi, a, kPi / 6, eps, D, src).tau -
                                 tau_general(domain, Trap(xi, a, 0.0, eps, kPi / 6), D, src).tau);
    r.sum("max_jump", max_jump);
    r.sum("circular_gap", gap);
    r.sum("slit_formula_diff", slit);
    return max_jump < 1e-7 && gap < 1e-12 && slit < 1e-14;
}

bool validate_mc(Report& r, bool point, double eps, double D, const WalkerArgs& w) {
    const Domain disk = Domain::unit_disk();
    const Trap trap({0.0, 0.0}, 1.0, 1.0, eps, 0.0);
    const WalkerConfig cfg = w.config();
    const Point2 start{1.0, 0.0};
    const FptEstimate e = point ? simulate_mfpt(start, disk, trap, D, cfg) : simulate_gmfpt(disk, trap, D, cfg);
    const double exact = point ? exact_radial_u(1.0, eps, D) : exact_radial_gmfpt(eps, D);
    echo_estimate(r, e);
    const double z = (e.mean - exact) / e.std_error;
    r.columns = {"mean", "std_error", "exact", "z_score"};
    r.rows.push_back({e.mean, e.std_error, exact, z});
    const bool censor_ok = e.n_censored * 1000 < e.n_walkers;
    r.sum("censoring_ok", censor_ok);
    return std::abs(z) <= 3.0 && censor_ok;
}

struct ValidateArgs {
    std::string scenario;
    double eps = 0.1;
    double D = 1.0;
};

Report cmd_validate(const ValidateArgs& v, const WalkerArgs& w, const OutputArgs& o, bool& passed) {
    Report r;
    r.command = "validate";
    r.param("scenario", v.scenario);
    r.param("diffusivity", v.D);
    r.flag("scenario", v.scenario);
    r.flag("diffusivity", v.D);
    const bool mc = v.scenario.rfind("mc-", 0) == 0;
    if (mc) {
        r.param("eps", v.eps);
        r.flag("eps", v.eps);
        echo_walkers(r, w);
    }
    echo_output(r, o);
    if (!(std::isfinite(v.D) && v.D > 0.0)) throw UsageError("--diffusivity must be positive");

    if (v.scenario == "radial-exact") {
        passed = validate_radial(r, v.D);
    } else if (v.scenario == "centered-ellipse") {
        passed = validate_centered(r, {2.0, 1.0}, v.D);
    } else if (v.scenario == "offcenter-disk") {
        passed = validate_offcenter(r, {0.3, 0.4}, {3.0, 1.0}, kPi / 6, v.D);
    } else if (v.scenario == "slit-sweep") {
        passed = validate_slit(r, v.D);
    } else if (v.scenario == "mc-point") {
        passed = validate_mc(r, true, v.eps, v.D, w);
    } else {
        passed = validate_mc(r, false, v.eps, v.D, w);
    }
    r.sum("passed", passed);
    return r;
}

void emit(const Report& r, const OutputArgs& o, std::ostream& out, std::ostream& err) {
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    if (o.output.empty()) {
        o.format == "json" ? write_json(r, out) : write_csv(r, out);
        return;
    }
    std::ofstream f(o.output);
    if (!f) throw UsageError("cannot open output file '" + o.output + "'");
    o.format == "json" ? write_json(r, f) : write_csv(r, f);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw std::runtime_error("--config needs a file name");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty()) return rest;

    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    auto given = [&](const std::string& key) {
        return std::any_of(rest.begin(), rest.end(), [&](const std::string& a) {
            return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
        });
    };

    std::vector<std::string> extra;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        while (!key.empty() && key[0] == '-') key.erase(0, 1);
        if (key.empty()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
        if (!given(key)) extra.push_back("--" + key + "=" + value);
    }

    // Flags from the file go right after the subcommand name.
    std::vector<std::string> out;
    std::size_t cmd = 0;
    while (cmd < rest.size() && rest[cmd].rfind("-", 0) == 0) ++cmd;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        out.push_back(rest[i]);
        if (i == cmd) out.insert(out.end(), extra.begin(), extra.end());
    }
    if (cmd >= rest.size()) out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

int run(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean first passage times to a small elliptical trap: asymptotics and Brownian dynamics",
                 "narrowcap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "narrowcap 1.0.0");

    OutputArgs o;
    TrapArgs t;
    WalkerArgs w;
    MfptArgs m;
    FieldArgs f;
    SimulateArgs s;
    ValidateArgs v;

    auto* tau = app.add_subcommand("tau", "Two-term global MFPT for a trap at xi");
    add_trap(tau, t, true);
    add_output(tau, o);

    auto* mfpt = app.add_subcommand("mfpt", "Two-term MFPT from a point x");
    add_trap(mfpt, t, true);
    mfpt->add_option("--x", m.x, "Evaluation point x,y")->capture_default_str();
    mfpt->add_option("--sweep-r", m.sweep_r, "Place the trap at r(cos theta, sin theta) for r in start:stop:count");
    mfpt->add_option("--theta", m.theta, "Polar angle of the swept trap center")->capture_default_str();
    mfpt->add_option("--phis", m.phis, "Comma-separated trap angles (overrides --phi)");
    add_output(mfpt, o);

    auto* field = app.add_subcommand("field", "Optimal-orientation field on a grid of trap centers");
    add_trap(field, t, false);
    field->add_option("--grid", f.grid, "Grid size NxM over the bounding box")->required();
    field->add_option("--margin", f.margin, "Fraction of the bounding box trimmed from each side")
        ->capture_default_str();
    field->add_option("--threads", f.threads, "Worker threads (0: all, capped by NARROWCAP_THREADS)")
        ->capture_default_str();
    add_output(field, o);

    auto* simulate = app.add_subcommand("simulate", "Brownian-dynamics estimate of the MFPT or GMFPT");
    add_trap(simulate, t, true);
    simulate->add_option("--mode", s.mode, "point (from --x) or global (uniform starts)")
        ->check(CLI::IsMember({"point", "global"}))
        ->capture_default_str();
    simulate->add_option("--x", s.x, "Start point for --mode point")->capture_default_str();
    add_walkers(simulate, w);
    add_output(simulate, o);

    auto* validate = app.add_subcommand("validate", "Run a built-in check; exit 3 if it fails");
    validate
        ->add_option("--scenario", v.scenario, "Scenario name")
        ->check(CLI::IsMember(
            {"radial-exact", "centered-ellipse", "offcenter-disk", "slit-sweep", "mc-point", "mc-gmfpt"}))
        ->required();
    validate->add_option("--eps", v.eps, "Trap radius for the Monte Carlo scenarios")->capture_default_str();
    validate->add_option("--diffusivity,-D", v.D, "Diffusivity")->capture_default_str();
    add_walkers(validate, w);
    add_output(validate, o);

    try {
        std::vector<std::string> args = expand_config(raw);
        std::reverse(args.begin(), args.end());
        app.parse(args);
        for (auto* sub : app.get_subcommands()) {
            const auto* opt = sub->get_option_no_throw("--phi");
            t.phi_given = opt && opt->count() > 0;
        }
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.size() == 1 ? subs.front()->help() : app.help());
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        bool passed = true;
        Report r;
        if (tau->parsed()) {
            r = cmd_tau(t, o);
        } else if (mfpt->parsed()) {
            r = cmd_mfpt(t, m, o);
        } else if (field->parsed()) {
            r = cmd_field(t, f, o);
        } else if (simulate->parsed()) {
            r = cmd_simulate(t, s, w, o);
        } else {
            r = cmd_validate(v, w, o, passed);
        }
        emit(r, o, out, err);
        if (!passed) {
            err << "error: validation scenario '" << v.scenario << "' failed its tolerance\n";
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const PreconditionError& e) {
        err << "error: precondition failed: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace narrowcap::cli
