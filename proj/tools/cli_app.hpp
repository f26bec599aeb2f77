#pragma once

// Command dispatch for the fracrbf executable. run_cli is kept separate from
// main() so the test suite can drive every command in-process.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracrbf/closedform.hpp"
#include "fracrbf/errors.hpp"
#include "fracrbf/fracops.hpp"
#include "fracrbf/rbf.hpp"
#include "fracrbf/solvers.hpp"

namespace fracrbf::cli {

using json = nlohmann::json;

// Shortest decimal string that reads back to the same double.
inline std::string fmt(double v) {
    if (v == 0.0) return "0"; // also folds -0
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

struct RunConfig {
    std::string command;
    std::optional<std::string> op, family, grid, config, out;
    std::optional<double> alpha, a, b, param, scale, center, x, rel_tol, quad_tol, max_rel_err;
    std::optional<int> max_terms;
};

struct Grid {
    double start = 0.0, stop = 0.0;
    int count = 1;

    std::vector<double> points() const {
        if (count == 1) return {start};
        return equidistant_nodes(start, stop, count);
    }
};

inline Grid parse_grid(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    Grid g;
    try {
        if (parts.size() != 3) throw std::invalid_argument("");
        std::size_t used = 0;
        g.start = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument("");
        g.stop = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("");
        g.count = std::stoi(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
        throw ConfigError("--grid: expected start:stop:count, got '" + s + "'");
    }
    if (g.count < 1) throw ConfigError("--grid: count must be at least 1");
    return g;
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config: cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config: invalid JSON in '" + path + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("config: unknown key '" + k + "'");
}

inline double get_number(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config: missing field '" + key + "'");
    if (!j[key].is_number()) throw ConfigError("config: field '" + key + "' must be a number");
    return j[key].get<double>();
}

inline int get_int(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config: missing field '" + key + "'");
    if (!j[key].is_number_integer()) throw ConfigError("config: field '" + key + "' must be an integer");
    return j[key].get<int>();
}

inline std::string get_string(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config: missing field '" + key + "'");
    if (!j[key].is_string()) throw ConfigError("config: field '" + key + "' must be a string");
    return j[key].get<std::string>();
}

template <class T>
inline void fill(std::optional<T>& slot, const json& j, const std::string& key) {
    if (slot || !j.contains(key)) return; // command-line flags win
    if constexpr (std::is_same_v<T, std::string>) slot = get_string(j, key);
    else if constexpr (std::is_same_v<T, int>) slot = get_int(j, key);
    else slot = get_number(j, key);
}

// Merges an evaluation config file into the flags.
inline void merge_eval_config(RunConfig& rc) {
    if (!rc.config) return;
    const json j = load_json(*rc.config);
    reject_unknown(j, {"op", "alpha", "a", "b", "family", "param", "scale", "center", "x", "grid", "rel_tol",
                       "max_terms", "quad_tol", "max_rel_err"});
    fill(rc.op, j, "op");
    fill(rc.alpha, j, "alpha");
    fill(rc.a, j, "a");
    fill(rc.b, j, "b");
    fill(rc.family, j, "family");
    fill(rc.param, j, "param");
    fill(rc.scale, j, "scale");
    fill(rc.center, j, "center");
    fill(rc.x, j, "x");
    fill(rc.grid, j, "grid");
    fill(rc.rel_tol, j, "rel_tol");
    fill(rc.max_terms, j, "max_terms");
    fill(rc.quad_tol, j, "quad_tol");
    fill(rc.max_rel_err, j, "max_rel_err");
}

inline SeriesControl series_control(const RunConfig& rc) {
    SeriesControl c;
    if (rc.rel_tol) {
        if (!(*rc.rel_tol > 0.0)) throw ConfigError("--rel-tol must be positive");
        c.rel_tol = *rc.rel_tol;
    }
    if (rc.max_terms) {
        if (*rc.max_terms < 1) throw ConfigError("--max-terms must be positive");
        c.max_terms = *rc.max_terms;
    }
    return c;
}

inline RBFFamily family_from(const std::string& name, std::optional<double> param, const std::string& field) {
    const Family f = parse_family(name);
    const bool needs = f != Family::Gaussian;
    if (needs && !param) throw ConfigError(field + ": family '" + name + "' needs a parameter");
    try {
        return RBFFamily(f, param.value_or(0.0));
    } catch (const DomainError& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

struct EvalSetup {
    OperatorSpec spec;
    RBFKernel kernel;
    SeriesControl ctrl;
    std::vector<double> xs;
    bool grid = false;
};

inline EvalSetup eval_setup(RunConfig& rc) {
    merge_eval_config(rc);
    EvalSetup s;
    if (!rc.op) throw ConfigError("--op is required");
    if (!rc.alpha) throw ConfigError("--alpha is required");
    if (!rc.family) throw ConfigError("--family is required");
    const OpKind kind = parse_kind(*rc.op);
    const double alpha = *rc.alpha;
    if (!(alpha > 0.0)) throw ConfigError("--alpha: order must be positive");
    if (std::abs(alpha - std::nearbyint(alpha)) < 1e-9) throw ConfigError("--alpha: order must be non-integer");
    if (alpha >= 4.0) throw ConfigError("--alpha: order must be below 4");
    if ((is_left(kind) || kind == OpKind::Riesz) && !rc.a) throw ConfigError("--a is required for this operator");
    if ((is_right(kind) || kind == OpKind::Riesz) && !rc.b) throw ConfigError("--b is required for this operator");
    if (kind == OpKind::Riesz && !(*rc.a < *rc.b)) throw ConfigError("--a must be below --b");
    s.spec = OperatorSpec(kind, alpha, rc.a.value_or(0.0), rc.b.value_or(0.0));
    const RBFFamily fam = family_from(*rc.family, rc.param, "--param");
    const double c = rc.scale.value_or(1.0);
    if (!(c > 0.0)) throw ConfigError("--scale must be positive");
    s.kernel = RBFKernel(fam, c, rc.center.value_or(0.0));
    s.ctrl = series_control(rc);
    if (rc.x && rc.grid) throw ConfigError("--x and --grid are mutually exclusive");
    if (rc.x) s.xs = {*rc.x};
    else if (rc.grid) {
        s.xs = parse_grid(*rc.grid).points();
        s.grid = true;
    } else {
        throw ConfigError("one of --x or --grid is required");
    }
    return s;
}

inline QuadratureControl quadrature_control(const RunConfig& rc) {
    QuadratureControl q;
    if (rc.quad_tol) {
        if (!(*rc.quad_tol > 0.0)) throw ConfigError("--quad-tol must be positive");
        q.abs_tol = *rc.quad_tol;
    }
    return q;
}

// |closed - oracle| relative to max(|oracle|, 1)
inline double relative_error(double closed, double oracle) {
    return std::abs(closed - oracle) / std::max(std::abs(oracle), 1.0);
}

class Output {
public:
    Output(const std::optional<std::string>& path, std::ostream& fallback) : os_(&fallback) {
        if (path) {
            file_.open(*path);
            if (!file_) throw ConfigError("--out: cannot open '" + *path + "' for writing");
            os_ = &file_;
        }
    }
    std::ostream& operator*() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

// ---------------------------------------------------------------------------
// Commands

inline int cmd_eval(RunConfig& rc, std::ostream& out, std::ostream&) {
    const EvalSetup s = eval_setup(rc);
    if (s.grid) {
        Output o(rc.out, out);
        *o << "x,value\n";
        for (double x : s.xs) *o << fmt(x) << ',' << fmt(kernel_operator_eval(s.spec, s.kernel, x, s.ctrl).value) << '\n';
        return 0;
    }
    const ClosedFormResult r = kernel_operator_eval(s.spec, s.kernel, s.xs[0], s.ctrl);
    Output o(rc.out, out);
    *o << "value=" << fmt(r.value) << "\nterms_used=" << r.terms_used << "\nimag_residual=" << fmt(r.imag_residual)
       << '\n';
    return 0;
}

inline double oracle_value(const EvalSetup& s, double x, const QuadratureControl& q) {
    const bool at_base = is_integral(s.spec.kind) &&
                         x == (is_left(s.spec.kind) ? s.spec.base_left : s.spec.base_right);
    return at_base ? 0.0 : oracle_apply(s.spec, kernel_profile(s.kernel, s.ctrl), x, q);
}

inline int cmd_oracle_check(RunConfig& rc, std::ostream& out, std::ostream&) {
    const EvalSetup s = eval_setup(rc);
    if (s.grid) throw ConfigError("oracle-check takes --x; use sweep for grids");
    const double bound = rc.max_rel_err.value_or(1e-7);
    const QuadratureControl q = quadrature_control(rc);
    const double x = s.xs[0];
    const double cf = kernel_operator_eval(s.spec, s.kernel, x, s.ctrl).value;
    const double or_ = oracle_value(s, x, q);
    const double rel = relative_error(cf, or_);
    Output o(rc.out, out);
    *o << "closed=" << fmt(cf) << "\noracle=" << fmt(or_) << "\nabs_err=" << fmt(std::abs(cf - or_))
       << "\nrel_err=" << fmt(rel) << "\nbound=" << fmt(bound) << '\n';
    return rel <= bound ? 0 : 1;
}

inline int cmd_sweep(RunConfig& rc, std::ostream& out, std::ostream&) {
    const EvalSetup s = eval_setup(rc);
    const double bound = rc.max_rel_err.value_or(1e-7);
    const QuadratureControl q = quadrature_control(rc);
    Output o(rc.out, out);
    *o << "x,value,oracle,rel_err\n";
    bool ok = true;
    for (double x : s.xs) {
        const double cf = kernel_operator_eval(s.spec, s.kernel, x, s.ctrl).value;
        const double or_ = oracle_value(s, x, q);
        const double rel = relative_error(cf, or_);
        ok = ok && rel <= bound;
        *o << fmt(x) << ',' << fmt(cf) << ',' << fmt(or_) << ',' << fmt(rel) << '\n';
    }
    return ok ? 0 : 1;
}

inline FracODEProblem ode_problem_from(const json& j) {
    reject_unknown(j, {"alpha", "forcing", "T", "n", "family", "param", "scale"});
    FracODEProblem p;
    p.alpha = get_number(j, "alpha");
    p.forcing = forcing_function(parse_forcing(get_string(j, "forcing")));
    p.horizon = get_number(j, "T");
    p.node_count = get_int(j, "n");
    std::optional<double> param;
    if (j.contains("param")) param = get_number(j, "param");
    p.family = family_from(get_string(j, "family"), param, "param");
    p.scale = get_number(j, "scale");
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return p;
}

inline MOLProblem pde_problem_from(const json& j) {
    reject_unknown(j, {"alpha", "K", "L", "T", "n", "u0", "family", "param", "scale", "out_times"});
    MOLProblem p;
    p.alpha = get_number(j, "alpha");
    p.dispersion = get_number(j, "K");
    p.length = get_number(j, "L");
    p.horizon = get_number(j, "T");
    p.node_count = get_int(j, "n");
    p.u0 = initial_function(parse_initial_profile(get_string(j, "u0")), p.length);
    std::optional<double> param;
    if (j.contains("param")) param = get_number(j, "param");
    p.family = family_from(get_string(j, "family"), param, "param");
    p.scale = get_number(j, "scale");
    if (j.contains("out_times")) {
        if (!j["out_times"].is_array()) throw ConfigError("config: field 'out_times' must be an array");
        for (const auto& t : j["out_times"]) {
            if (!t.is_number()) throw ConfigError("config: 'out_times' entries must be numbers");
            p.out_times.push_back(t.get<double>());
        }
    }
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return p;
}

inline int cmd_solve_ode(RunConfig& rc, std::ostream& out, std::ostream& err) {
    if (!rc.config) throw ConfigError("--config is required for solve-ode");
    const FracODEProblem p = ode_problem_from(load_json(*rc.config));
    const SeriesControl ctrl = series_control(rc);
    CollocationSystem sys = build_collocation_system(p, ctrl);
    solve_collocation(sys);
    if (sys.condition_warning)
        err << "warning: collocation matrix condition estimate " << fmt(sys.condition_estimate) << '\n';
    Output o(rc.out, out);
    *o << "t,u\n";
    for (double t : sys.nodes) *o << fmt(t) << ',' << fmt(ode_solution_eval(p, sys.nodes, sys.coefficients, t, ctrl)) << '\n';
    return 0;
}

// Ratio of the sin(4x) coefficients of u(., t) and u0 (trapezoid rule on the nodes).
inline double mode_growth(const std::vector<double>& x, const std::vector<double>& u, const std::vector<double>& u0) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double h = x[i] - x[i - 1];
        num += 0.5 * h * (u[i] * std::sin(4 * x[i]) + u[i - 1] * std::sin(4 * x[i - 1]));
        den += 0.5 * h * (u0[i] * std::sin(4 * x[i]) + u0[i - 1] * std::sin(4 * x[i - 1]));
    }
    return num / den;
}

inline int cmd_solve_pde(RunConfig& rc, std::ostream& out, std::ostream& err) {
    if (!rc.config) throw ConfigError("--config is required for solve-pde");
    const json j = load_json(*rc.config);
    const MOLProblem p = pde_problem_from(j);
    const SeriesControl ctrl = series_control(rc);
    MOLSystem sys = build_lagrange_basis(p, ctrl);
    if (sys.condition_warning)
        err << "warning: interpolation matrix condition estimate " << fmt(sys.condition_estimate) << '\n';
    sys.riesz = assemble_riesz_matrix(sys, p, ctrl);
    const Trajectory tr = mol_integrate(sys, p);
    Output o(rc.out, out);
    *o << "x,t,u\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        for (std::size_t i = 0; i < tr.x.size(); ++i)
            *o << fmt(tr.x[i]) << ',' << fmt(tr.times[k]) << ',' << fmt(tr.u[k][i]) << '\n';
    if (j["u0"] == "sin4x") {
        std::vector<double> u0(tr.x.size(), 0.0);
        for (std::size_t i = 1; i + 1 < tr.x.size(); ++i) u0[i] = p.u0(tr.x[i]);
        err << "mode4_growth=" << fmt(mode_growth(tr.x, tr.u.back(), u0)) << '\n';
    }
    return 0;
}

inline void add_flags(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--op", rc.op, "operator: rl-int-left, rl-int-right, rl-der-left, rl-der-right, caputo-left, "
                                   "caputo-right, riesz");
    sub->add_option("--alpha", rc.alpha, "operator order (non-integer, below 4)");
    sub->add_option("--a", rc.a, "left base point");
    sub->add_option("--b", rc.b, "right base point");
    sub->add_option("--family", rc.family, "gaussian, multiquadric, powers, matern, thinplate");
    sub->add_option("--param", rc.param, "family parameter (beta, nu or n)");
    sub->add_option("--scale", rc.scale, "kernel scale c");
    sub->add_option("--center", rc.center, "kernel center y");
    sub->add_option("--x", rc.x, "evaluation point");
    sub->add_option("--grid", rc.grid, "evaluation grid start:stop:count");
    sub->add_option("--config", rc.config, "JSON configuration file");
    sub->add_option("--out", rc.out, "output file (default stdout)");
    sub->add_option("--rel-tol", rc.rel_tol, "series truncation tolerance");
    sub->add_option("--max-terms", rc.max_terms, "series term cap");
    sub->add_option("--quad-tol", rc.quad_tol, "quadrature absolute tolerance");
}

// argv-style arguments without the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fractional integrals and derivatives of radial basis functions"};
    app.require_subcommand(1);
    RunConfig rc;
    const std::map<std::string, std::string> commands = {
        {"eval", "evaluate a closed-form operator value"},
        {"oracle-check", "compare a closed form with the quadrature oracle"},
        {"solve-ode", "collocation solution of the fractional ODE"},
        {"solve-pde", "method-of-lines solution of the Riesz diffusion problem"},
        {"sweep", "closed form and oracle over a grid"}};
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), rc);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorClass::Config);
    }
    for (const auto& [name, help] : commands)
        if (app.got_subcommand(name)) rc.command = name;

    try {
        if (rc.command == "eval") return cmd_eval(rc, out, err);
        if (rc.command == "oracle-check") return cmd_oracle_check(rc, out, err);
        if (rc.command == "sweep") return cmd_sweep(rc, out, err);
        if (rc.command == "solve-ode") return cmd_solve_ode(rc, out, err);
        if (rc.command == "solve-pde") return cmd_solve_pde(rc, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.error_class());
    }
    return 1;
}

} // namespace fracrbf::cli
