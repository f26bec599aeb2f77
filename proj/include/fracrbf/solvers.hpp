#pragma once

// Fractional ODE collocation, method of lines for the Riesz space-fractional
// diffusion equation on a Lagrange basis, and a Grunwald-Letnikov reference.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracrbf/closedform.hpp"
#include "fracrbf/errors.hpp"
#include "fracrbf/fracops.hpp"
#include "fracrbf/rbf.hpp"

namespace fracrbf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kConditionWarning = 1e12;

inline std::vector<double> equidistant_nodes(double lo, double hi, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = (i == n - 1) ? hi : lo + (hi - lo) * i / (n - 1);
    return t;
}

// ---------------------------------------------------------------------------
// Dense linear algebra

struct DenseSolution {
    Vector x;
    double condition_estimate = 1.0; // 1 / rcond, infinity norm
    double residual = 0.0;           // ||A x - b||_inf
    bool condition_warning = false;
};

struct DenseFactor {
    Eigen::PartialPivLU<Matrix> lu;
    double condition_estimate = 1.0;

    explicit DenseFactor(const Matrix& a) {
        if (a.rows() != a.cols()) throw SingularMatrix("matrix must be square");
        if (!a.allFinite()) throw SingularMatrix("matrix has non-finite entries");
        lu.compute(a);
        const auto d = lu.matrixLU().diagonal();
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (d[i] == 0.0) throw SingularMatrix("zero pivot in LU factorization");
        const double rc = lu.rcond();
        condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    }

    bool ill_conditioned() const { return condition_estimate > kConditionWarning; }
};

inline DenseSolution solve_dense(const Matrix& a, const Vector& b) {
    if (b.size() != a.rows()) throw SingularMatrix("right-hand side length does not match the matrix");
    DenseFactor f(a);
    DenseSolution s;
    s.x = f.lu.solve(b);
    // one step of iterative refinement
    s.x += f.lu.solve(b - a * s.x);
    if (!s.x.allFinite()) throw SingularMatrix("solution is not finite");
    s.condition_estimate = f.condition_estimate;
    s.condition_warning = f.ill_conditioned();
    s.residual = (a * s.x - b).lpNorm<Eigen::Infinity>();
    return s;
}

// ---------------------------------------------------------------------------
// Fractional ODE  D^alpha u + u = f,  u(0) = u'(0) = 0

enum class Forcing { One, TExp, ExpSin };

inline Forcing parse_forcing(const std::string& s) {
    if (s == "one") return Forcing::One;
    if (s == "texp") return Forcing::TExp;
    if (s == "expsin") return Forcing::ExpSin;
    throw ConfigError("forcing: unknown name '" + s + "'");
}

inline std::function<double(double)> forcing_function(Forcing f) {
    switch (f) {
    case Forcing::One: return [](double) { return 1.0; };
    case Forcing::TExp: return [](double t) { return t * std::exp(-t); };
    case Forcing::ExpSin: return [](double t) { return std::exp(-t) * std::sin(0.2 * t); };
    }
    return {};
}

struct FracODEProblem {
    double alpha = 1.5;
    std::function<double(double)> forcing = [](double) { return 1.0; };
    double horizon = 50.0;
    int node_count = 201;
    RBFFamily family{Family::Powers, 3.0};
    double scale = 1e-4;

    void validate() const {
        if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in (1, 2)");
        if (!(horizon > 0.0)) throw DomainError("T must be positive");
        if (node_count < 4) throw DomainError("n must be at least 4");
        if (!(scale > 0.0)) throw DomainError("scale must be positive");
        if (!forcing) throw ConfigError("forcing is not set");
        family.validate();
    }

    std::vector<double> nodes() const { return equidistant_nodes(0.0, horizon, node_count); }
    RBFKernel kernel(double center) const { return RBFKernel(family, scale, center); }
};

struct CollocationSystem {
    std::vector<double> nodes;
    Matrix matrix;
    Vector rhs;
    Vector coefficients;
    double condition_estimate = 0.0;
    bool condition_warning = false;
    double residual = 0.0;
};

// d/dt phi(|t - y|/c)
inline double kernel_slope(const RBFKernel& k, double t, const SeriesControl& ctrl = {}) {
    const double r = (t - k.center) / k.scale;
    if (r == 0.0) return 0.0;
    const double s = r > 0.0 ? 1.0 : -1.0;
    return s * profile_derivative(k.family, 1, std::abs(r), ctrl) / k.scale;
}

inline CollocationSystem build_collocation_system(const FracODEProblem& p, const SeriesControl& ctrl = {}) {
    p.validate();
    CollocationSystem sys;
    sys.nodes = p.nodes();
    const int n = p.node_count;
    const std::vector<double>& t = sys.nodes;
    sys.matrix.resize(n, n);
    sys.rhs = Vector::Zero(n);
    const OperatorSpec op(OpKind::CaputoLeft, p.alpha, 0.0, 0.0);
    for (int j = 0; j < n; ++j) {
        const RBFKernel k = p.kernel(t[j]);
        for (int i = 1; i < n - 1; ++i)
            sys.matrix(i - 1, j) = kernel_operator_eval(op, k, t[i], ctrl).value + kernel_eval(k, t[i], ctrl);
        sys.matrix(n - 2, j) = kernel_eval(k, t[0], ctrl);
        sys.matrix(n - 1, j) = kernel_slope(k, t[0], ctrl);
    }
    for (int i = 1; i < n - 1; ++i) sys.rhs[i - 1] = p.forcing(t[i]);
    return sys;
}

inline void solve_collocation(CollocationSystem& sys) {
    DenseSolution s = solve_dense(sys.matrix, sys.rhs);
    sys.coefficients = std::move(s.x);
    sys.condition_estimate = s.condition_estimate;
    sys.condition_warning = s.condition_warning;
    sys.residual = s.residual;
}

inline double ode_solution_eval(const FracODEProblem& p, const std::vector<double>& nodes, const Vector& lambda,
                                double t, const SeriesControl& ctrl = {}) {
    double u = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
        if (lambda[j] != 0.0) u += lambda[j] * kernel_eval(p.kernel(nodes[j]), t, ctrl);
    return u;
}

inline double ode_solution_slope(const FracODEProblem& p, const std::vector<double>& nodes, const Vector& lambda,
                                 double t, const SeriesControl& ctrl = {}) {
    double u = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
        if (lambda[j] != 0.0) u += lambda[j] * kernel_slope(p.kernel(nodes[j]), t, ctrl);
    return u;
}

// ---------------------------------------------------------------------------
// Method of lines:  u_t = K * Riesz_x u on (0, L), u = 0 at both ends.
// Positive K is diffusive with the Riesz operator -c_alpha (D_left + D_right).

enum class InitialProfile { PolyHump, Sin4x };

inline InitialProfile parse_initial_profile(const std::string& s) {
    if (s == "poly-hump") return InitialProfile::PolyHump;
    if (s == "sin4x") return InitialProfile::Sin4x;
    throw ConfigError("u0: unknown profile '" + s + "'");
}

inline std::function<double(double)> initial_function(InitialProfile u0, double length) {
    switch (u0) {
    case InitialProfile::PolyHump: return [length](double x) { return x * x * (length - x); };
    case InitialProfile::Sin4x: return [](double x) { return std::sin(4.0 * x); };
    }
    return {};
}

struct RKControl {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    int max_steps = 200000;
    double min_step_fraction = 1e-12; // of the horizon
};

struct MOLProblem {
    double alpha = 1.8;
    double dispersion = 0.25;
    double length = std::numbers::pi;
    double horizon = 0.4;
    int node_count = 101;
    std::function<double(double)> u0 = [](double x) { return x * x * (std::numbers::pi - x); };
    RBFFamily family{Family::Gaussian, 0.0};
    double scale = 1.0;
    std::vector<double> out_times; // empty means {horizon}
    RKControl time_step;

    void validate() const {
        if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in (1, 2)");
        if (!(length > 0.0)) throw DomainError("L must be positive");
        if (!(horizon > 0.0)) throw DomainError("T must be positive");
        if (node_count < 3) throw DomainError("n must be at least 3");
        if (!(scale > 0.0)) throw DomainError("scale must be positive");
        if (!u0) throw ConfigError("u0 is not set");
        for (double t : out_times)
            if (!(t >= 0.0 && t <= horizon)) throw DomainError("out_times must lie in [0, T]");
        family.validate();
    }

    std::vector<double> nodes() const { return equidistant_nodes(0.0, length, node_count); }
    RBFKernel kernel(double center) const { return RBFKernel(family, scale, center); }
    std::vector<double> output_times() const {
        std::vector<double> t = out_times.empty() ? std::vector<double>{horizon} : out_times;
        std::sort(t.begin(), t.end());
        return t;
    }
};

struct MOLSystem {
    std::vector<double> nodes;
    Matrix interpolation; // A_ij = phi(|x_i - x_j|/c)
    Eigen::PartialPivLU<Matrix> factor;
    double condition_estimate = 0.0;
    bool condition_warning = false;
    Matrix riesz;   // interior rows and columns
    Vector initial; // u0 at interior nodes

    // Row vector r A^{-1} for a functional r applied to the kernels.
    Vector lagrange_apply(const Vector& kernel_row) const { return factor.transpose().solve(kernel_row); }
};

inline MOLSystem build_lagrange_basis(const MOLProblem& p, const SeriesControl& ctrl = {}) {
    p.validate();
    MOLSystem sys;
    sys.nodes = p.nodes();
    const int n = p.node_count;
    sys.interpolation.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sys.interpolation(i, j) = kernel_eval(p.kernel(sys.nodes[j]), sys.nodes[i], ctrl);
    DenseFactor f(sys.interpolation);
    sys.factor = std::move(f.lu);
    sys.condition_estimate = f.condition_estimate;
    sys.condition_warning = f.ill_conditioned();
    sys.initial.resize(n - 2);
    for (int i = 1; i < n - 1; ++i) sys.initial[i - 1] = p.u0(sys.nodes[i]);
    return sys;
}

// Values L_1(x), ..., L_n(x).
inline Vector lagrange_values(const MOLSystem& sys, const MOLProblem& p, double x, const SeriesControl& ctrl = {}) {
    Vector row(p.node_count);
    for (int j = 0; j < p.node_count; ++j) row[j] = kernel_eval(p.kernel(sys.nodes[j]), x, ctrl);
    return sys.lagrange_apply(row);
}

// Riesz derivatives of the interior Lagrange functions at the interior nodes, with
// kernel entries supplied by `entry(kernel, x)`.
template <class Entry>
inline Matrix riesz_matrix_from(const MOLSystem& sys, const MOLProblem& p, Entry&& entry) {
    const int n = p.node_count;
    Matrix out(n - 2, n - 2);
    Vector row(n);
    for (int i = 1; i < n - 1; ++i) {
        for (int k = 0; k < n; ++k) row[k] = entry(p.kernel(sys.nodes[k]), sys.nodes[i]);
        const Vector l = sys.lagrange_apply(row);
        out.row(i - 1) = l.segment(1, n - 2).transpose();
    }
    return out;
}

inline Matrix assemble_riesz_matrix(const MOLSystem& sys, const MOLProblem& p, const SeriesControl& ctrl = {}) {
    return riesz_matrix_from(sys, p, [&](const RBFKernel& k, double x) {
        return riesz_kernel_eval(p.alpha, 0.0, p.length, k, x, ctrl).value;
    });
}

// Same matrix with every kernel entry computed by quadrature.
inline Matrix assemble_riesz_matrix_oracle(const MOLSystem& sys, const MOLProblem& p, QuadratureControl q = {}) {
    const OperatorSpec op(OpKind::Riesz, p.alpha, 0.0, p.length);
    return riesz_matrix_from(sys, p, [&](const RBFKernel& k, double x) { return oracle_apply(op, kernel_profile(k), x, q); });
}

struct Trajectory {
    std::vector<double> x;                 // full node set including the boundary
    std::vector<double> times;
    std::vector<std::vector<double>> u;    // u[time][node], boundary values are zero
    int steps = 0;
};

// Dormand-Prince 5(4) with step-size control, stopping exactly at each output time.
inline std::vector<Vector> integrate_dopri(const std::function<void(const Vector&, Vector&)>& rhs, const Vector& y0,
                                           double horizon, const std::vector<double>& outputs, const RKControl& ctl,
                                           int& steps) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2, (void)c3, (void)c4, (void)c5; // autonomous right-hand side

    const Eigen::Index dim = y0.size();
    Vector y = y0, k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ynew(dim), err(dim);
    std::vector<Vector> out;
    double t = 0.0;
    const double h_min = ctl.min_step_fraction * horizon;
    rhs(y, k1);
    double h = std::min(horizon, 1e-3 * horizon);
    {
        const double yn = y.cwiseAbs().maxCoeff(), fn = k1.cwiseAbs().maxCoeff();
        if (fn > 0.0) h = std::min(h, 0.01 * std::max(yn, ctl.abs_tol) / fn);
        h = std::max(h, h_min);
    }
    steps = 0;
    for (double target : outputs) {
        while (t < target) {
            if (steps >= ctl.max_steps)
                throw StepSizeUnderflow("time integration exceeded " + std::to_string(ctl.max_steps) +
                                        " steps; the semi-discrete system is too stiff or unstable: reduce n or compare with the FD oracle");
            const bool last = t + h >= target;
            const double hs = last ? target - t : h;
            rhs(y + hs * a21 * k1, k2);
            rhs(y + hs * (a31 * k1 + a32 * k2), k3);
            rhs(y + hs * (a41 * k1 + a42 * k2 + a43 * k3), k4);
            rhs(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
            rhs(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
            ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs(ynew, k7);
            err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = 0.0;
            for (Eigen::Index i = 0; i < dim; ++i) {
                const double sc = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                en += (err[i] / sc) * (err[i] / sc);
            }
            en = dim ? std::sqrt(en / dim) : 0.0;
            if (!std::isfinite(en)) en = 1e10;
            ++steps;
            if (en <= 1.0) {
                t = last ? target : t + hs;
                y = ynew;
                k1 = k7;
                if (!y.allFinite()) throw StepSizeUnderflow("time integration produced non-finite values");
            }
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            h = (en <= 1.0 && last) ? h : hs * fac;
            if (h < h_min) {
                std::ostringstream msg;
                msg << "step size fell below " << h_min << " at t = " << t
                    << "; the semi-discrete system is too stiff or unstable: reduce n or compare with the FD oracle";
                throw StepSizeUnderflow(msg.str());
            }
        }
        out.push_back(y);
    }
    return out;
}

inline Trajectory mol_integrate_matrix(const Matrix& riesz, const MOLSystem& sys, const MOLProblem& p) {
    Trajectory tr;
    tr.x = sys.nodes;
    tr.times = p.output_times();
    const Matrix op = p.dispersion * riesz;
    auto rhs = [&](const Vector& y, Vector& dy) { dy.noalias() = op * y; };
    const std::vector<Vector> states = integrate_dopri(rhs, sys.initial, p.horizon, tr.times, p.time_step, tr.steps);
    for (const Vector& s : states) {
        std::vector<double> row(p.node_count, 0.0);
        for (int i = 1; i < p.node_count - 1; ++i) row[i] = s[i - 1];
        tr.u.push_back(std::move(row));
    }
    return tr;
}

inline Trajectory mol_integrate(const MOLSystem& sys, const MOLProblem& p) {
    if (sys.riesz.rows() != p.node_count - 2) throw ConfigError("mol_integrate: Riesz matrix not assembled");
    return mol_integrate_matrix(sys.riesz, sys, p);
}

// ---------------------------------------------------------------------------
// Shifted Grunwald-Letnikov scheme with Crank-Nicolson time stepping.

struct FDControl {
    int grid_n = 100;       // initial number of spatial intervals
    int time_steps = 25;    // initial number of time steps
    int max_refinements = 5;
    double tol = 1e-3;      // max change between successive grids at the comparison nodes
};

struct FDResult {
    Trajectory trajectory; // sampled at the comparison nodes
    int grid_n = 0;
    int time_steps = 0;
    double last_change = 0.0;
};

inline double interpolate_linear(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return (1.0 - w) * ys[j - 1] + w * ys[j];
}

// Profiles at p.output_times() on the grid x_k = k L / grid_n.
inline Trajectory gl_fd_solve(const MOLProblem& p, int grid_n, int time_steps) {
    p.validate();
    if (grid_n < 2 || time_steps < 1) throw DomainError("gl_fd_solve: grid_n >= 2 and time_steps >= 1 required");
    const double alpha = p.alpha, h = p.length / grid_n, dt = p.horizon / time_steps;
    const int m = grid_n - 1;
    std::vector<double> g(grid_n + 2);
    g[0] = 1.0;
    for (int k = 1; k < grid_n + 2; ++k) g[k] = g[k - 1] * (1.0 - (alpha + 1.0) / k);
    Matrix R = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const int kl = i - j + 1, kr = j - i + 1;
            if (kl >= 0) R(i, j) += g[kl];
            if (kr >= 0) R(i, j) += g[kr];
        }
    R *= -riesz_coefficient(alpha) * std::pow(h, -alpha) * p.dispersion;
    const Matrix I = Matrix::Identity(m, m);
    const Eigen::LDLT<Matrix> implicit(I - 0.5 * dt * R); // R is symmetric
    const Matrix explicit_part = I + 0.5 * dt * R;

    Trajectory tr;
    tr.x = equidistant_nodes(0.0, p.length, grid_n + 1);
    tr.times = p.output_times();
    Vector u(m);
    for (int i = 0; i < m; ++i) u[i] = p.u0(tr.x[i + 1]);
    int done = 0;
    auto emit = [&] {
        std::vector<double> row(grid_n + 1, 0.0);
        for (int i = 0; i < m; ++i) row[i + 1] = u[i];
        tr.u.push_back(std::move(row));
    };
    for (int s = 0; s <= time_steps; ++s) {
        const double t = s * dt;
        // outputs are taken at the nearest time level
        while (done < static_cast<int>(tr.times.size()) && tr.times[done] <= t + 0.5 * dt) {
            emit();
            ++done;
        }
        if (s < time_steps) u = implicit.solve(explicit_part * u);
    }
    tr.steps = time_steps;
    return tr;
}

// Refines space and time together until the profiles, sampled at the MOL nodes,
// change by at most tol.
inline FDResult gl_fd_oracle(const MOLProblem& p, const FDControl& c = {}) {
    if (!(p.alpha > 1.0 && p.alpha < 2.0)) throw DomainError("gl_fd_oracle: alpha must lie in (1, 2)");
    const std::vector<double> xs = p.nodes();
    auto sample = [&](const Trajectory& fine) {
        Trajectory s;
        s.x = xs;
        s.times = fine.times;
        s.steps = fine.steps;
        for (const auto& row : fine.u) {
            std::vector<double> r(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) r[i] = interpolate_linear(fine.x, row, xs[i]);
            s.u.push_back(std::move(r));
        }
        return s;
    };
    int gn = c.grid_n, ts = c.time_steps;
    Trajectory prev = sample(gl_fd_solve(p, gn, ts));
    double change = std::numeric_limits<double>::infinity();
    for (int r = 0; r < c.max_refinements; ++r) {
        gn *= 2;
        ts *= 2;
        Trajectory next = sample(gl_fd_solve(p, gn, ts));
        change = 0.0;
        for (std::size_t k = 0; k < next.u.size(); ++k)
            for (std::size_t i = 0; i < xs.size(); ++i) change = std::max(change, std::abs(next.u[k][i] - prev.u[k][i]));
        prev = std::move(next);
        if (change <= c.tol) return {prev, gn, ts, change};
    }
    throw NonConvergence("gl_fd_oracle: successive grids still differ by " + std::to_string(change));
}

} // namespace fracrbf
