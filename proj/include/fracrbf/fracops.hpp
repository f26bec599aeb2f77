#pragma once

// Operator specifications, power rules, the RL/Caputo boundary relation and a
// quadrature oracle for the defining integrals.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fracrbf/errors.hpp"
#include "fracrbf/specfun.hpp"

namespace fracrbf {

enum class OpKind {
    RLIntegralLeft,
    RLIntegralRight,
    RLDerivativeLeft,
    RLDerivativeRight,
    CaputoLeft,
    CaputoRight,
    Riesz
};

inline bool is_left(OpKind k) {
    return k == OpKind::RLIntegralLeft || k == OpKind::RLDerivativeLeft || k == OpKind::CaputoLeft;
}
inline bool is_right(OpKind k) {
    return k == OpKind::RLIntegralRight || k == OpKind::RLDerivativeRight || k == OpKind::CaputoRight;
}
inline bool is_integral(OpKind k) { return k == OpKind::RLIntegralLeft || k == OpKind::RLIntegralRight; }
inline bool is_rl_derivative(OpKind k) {
    return k == OpKind::RLDerivativeLeft || k == OpKind::RLDerivativeRight;
}
inline bool is_caputo(OpKind k) { return k == OpKind::CaputoLeft || k == OpKind::CaputoRight; }

inline OpKind mirror(OpKind k) {
    switch (k) {
    case OpKind::RLIntegralLeft: return OpKind::RLIntegralRight;
    case OpKind::RLIntegralRight: return OpKind::RLIntegralLeft;
    case OpKind::RLDerivativeLeft: return OpKind::RLDerivativeRight;
    case OpKind::RLDerivativeRight: return OpKind::RLDerivativeLeft;
    case OpKind::CaputoLeft: return OpKind::CaputoRight;
    case OpKind::CaputoRight: return OpKind::CaputoLeft;
    default: return k;
    }
}

inline const char* kind_name(OpKind k) {
    switch (k) {
    case OpKind::RLIntegralLeft: return "rl-int-left";
    case OpKind::RLIntegralRight: return "rl-int-right";
    case OpKind::RLDerivativeLeft: return "rl-der-left";
    case OpKind::RLDerivativeRight: return "rl-der-right";
    case OpKind::CaputoLeft: return "caputo-left";
    case OpKind::CaputoRight: return "caputo-right";
    case OpKind::Riesz: return "riesz";
    }
    return "?";
}

inline OpKind parse_kind(const std::string& s) {
    for (OpKind k : {OpKind::RLIntegralLeft, OpKind::RLIntegralRight, OpKind::RLDerivativeLeft, OpKind::RLDerivativeRight,
                     OpKind::CaputoLeft, OpKind::CaputoRight, OpKind::Riesz})
        if (s == kind_name(k)) return k;
    throw ConfigError("unknown operator '" + s + "'");
}

struct OperatorSpec {
    OpKind kind = OpKind::RLIntegralLeft;
    double order = 0.5;
    double base_left = 0.0;
    double base_right = 0.0;

    OperatorSpec() = default;
    OperatorSpec(OpKind k, double alpha, double a = 0.0, double b = 0.0)
        : kind(k), order(alpha), base_left(a), base_right(b) {
        validate();
    }

    void validate() const {
        if (!(order > 0.0)) throw DomainError("order must be positive");
        if (std::abs(order - std::nearbyint(order)) < 1e-9) throw DomainError("order must be non-integer");
        if (order >= 4.0) throw DomainError("order must be below 4");
        if (kind == OpKind::Riesz && !(base_left < base_right))
            throw DomainError("Riesz operator needs base_left < base_right");
    }

    int m() const { return static_cast<int>(std::ceil(order)); }
    // signed order: +alpha for integrals, -alpha for derivatives
    double signed_order() const { return is_integral(kind) ? order : -order; }
};

inline int ceil_order(const OperatorSpec& spec) { return spec.m(); }

inline double riesz_coefficient(double alpha) {
    if (std::abs(alpha - 1.0) < 1e-9) throw DomainError("riesz_coefficient: undefined at alpha = 1");
    return 1.0 / (2.0 * std::cos(std::numbers::pi * alpha / 2.0));
}

inline double power_rule_integral(double alpha, double beta, double a, double x) {
    if (!(beta > -1.0)) throw DomainError("power_rule_integral: beta must exceed -1");
    if (!(x > a)) throw DomainError("power_rule_integral: x must exceed a");
    return gamma_ratio(beta + 1.0, alpha + beta + 1.0) * std::pow(x - a, alpha + beta);
}

inline double power_rule_rl_derivative(double alpha, double beta, double a, double x) {
    if (!(beta > alpha - 1.0)) throw DomainError("power_rule_rl_derivative: beta must exceed alpha-1");
    if (!(x > a)) throw DomainError("power_rule_rl_derivative: x must exceed a");
    return gamma_ratio(beta + 1.0, beta - alpha + 1.0) * std::pow(x - a, beta - alpha);
}

inline double power_rule_caputo(double alpha, double beta, double a, double x) {
    if (!(beta > alpha - 1.0)) throw DomainError("power_rule_caputo: beta must exceed alpha-1");
    if (!(x > a)) throw DomainError("power_rule_caputo: x must exceed a");
    const int m = static_cast<int>(std::ceil(alpha));
    if (is_integer(beta) && beta < m) return 0.0;
    return gamma_ratio(beta + 1.0, beta - alpha + 1.0) * std::pow(x - a, beta - alpha);
}

// Caputo value from the RL value and f^(k)(a), k = 0..m-1.
inline double caputo_from_rl(double rl_value, const std::vector<double>& derivs_at_a, double alpha, double a,
                             double x) {
    const int m = static_cast<int>(std::ceil(alpha));
    if (static_cast<int>(derivs_at_a.size()) != m)
        throw ArityError("caputo_from_rl: expected " + std::to_string(m) + " derivative values");
    if (!(x > a)) throw DomainError("caputo_from_rl: x must exceed a");
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += derivs_at_a[k] * rgamma(k + 1.0 - alpha) * std::pow(x - a, k - alpha);
    return rl_value - s;
}

// Right-sided counterpart: f^(k)(b) enter with (-1)^k.
inline double caputo_from_rl_right(double rl_value, const std::vector<double>& derivs_at_b, double alpha, double b,
                                   double x) {
    const int m = static_cast<int>(std::ceil(alpha));
    if (static_cast<int>(derivs_at_b.size()) != m)
        throw ArityError("caputo_from_rl_right: expected " + std::to_string(m) + " derivative values");
    if (!(x < b)) throw DomainError("caputo_from_rl_right: x must be below b");
    double s = 0.0;
    for (int k = 0; k < m; ++k)
        s += (k % 2 ? -1.0 : 1.0) * derivs_at_b[k] * rgamma(k + 1.0 - alpha) * std::pow(b - x, k - alpha);
    return rl_value - s;
}

// ---------------------------------------------------------------------------
// Quadrature oracle

struct QuadratureControl {
    double abs_tol = 1e-10;
    int max_subdivisions = 2000;
    double singularity_exponent = 0.0; // filled in by oracle_apply from the operator kind
};

// A profile is evaluated through its offset s = t - anchor so that points close
// to the anchor (a kink or log singularity) keep full relative precision.
// deriv(k, s) returns the k-th derivative; deriv(0, s) is the value.
struct Profile {
    std::function<double(int, double)> deriv;
    int max_order = 0; // highest derivative deriv() can supply
    double anchor = 0.0;
    bool anchored = false; // split the integration range at the anchor

    double operator()(int k, double s) const { return deriv(k, s); }
};

inline Profile make_profile(std::function<double(double)> value) {
    Profile p;
    p.deriv = [value](int k, double s) {
        if (k != 0) throw MissingDerivative("profile has no derivative callback");
        return value(s);
    };
    return p;
}

namespace detail {

// Integrand receives exact distances to the ends of the top-level interval.
using EndpointFn = std::function<double(double dlo, double dhi)>;

struct TanhSinh {
    const EndpointFn& f;
    double lo0, hi0;
    double tol;
    int& subdivisions;
    int max_subdivisions;

    static constexpr int max_level = 7;
    static constexpr double t_max = 6.5;

    // integrate over [lo0 + off_lo, hi0 - off_hi]
    double run(double off_lo, double off_hi, double piece_tol, int depth) {
        const double len = (hi0 - lo0) - off_lo - off_hi;
        if (!(len > 0.0)) return 0.0;
        const double half = 0.5 * len;
        constexpr double pi2 = std::numbers::pi / 2.0;
        auto node = [&](double t, double& absum) {
            const double u = pi2 * std::sinh(t);
            const double ch = std::cosh(u);
            const double w = pi2 * std::cosh(t) / (ch * ch);
            if (!(w > 0.0) || !std::isfinite(w)) return 0.0;
            const double dl = half * 2.0 / (1.0 + std::exp(-2.0 * u));
            const double dh = half * 2.0 / (1.0 + std::exp(2.0 * u));
            if (dl <= 0.0 || dh <= 0.0) return 0.0;
            const double v = f(off_lo + dl, off_hi + dh);
            const double term = half * w * v;
            if (!std::isfinite(term)) {
                if (half * w < 1e-200) return 0.0;
                throw QuadratureError("oracle: non-finite integrand inside the interval");
            }
            absum += std::abs(term);
            return term;
        };
        double h = 1.0;
        double absum = 0.0;
        double sum = node(0.0, absum);
        for (double t = h; t <= t_max; t += h) sum += node(t, absum) + node(-t, absum);
        double est = sum * h;
        double diff = 0.0;
        for (int level = 1; level <= max_level; ++level) {
            h *= 0.5;
            for (double t = h; t <= t_max; t += 2.0 * h) sum += node(t, absum) + node(-t, absum);
            const double next = sum * h;
            diff = std::abs(next - est);
            est = next;
            const double floor = 64.0 * std::numeric_limits<double>::epsilon() * absum * h;
            if (level >= 3 && diff <= std::max(piece_tol, floor)) return est;
        }
        if (++subdivisions > max_subdivisions)
            throw QuadratureError("oracle: subdivision cap reached");
        if (depth > 60) throw QuadratureError("oracle: interval bisection depth exceeded");
        const double mid = 0.5 * len;
        return run(off_lo, off_hi + mid, 0.5 * piece_tol, depth + 1) +
               run(off_lo + mid, off_hi, 0.5 * piece_tol, depth + 1);
    }
};

inline double integrate(const EndpointFn& f, double lo, double hi, double tol, int& subdivisions,
                        int max_subdivisions) {
    if (!(hi > lo)) return 0.0;
    TanhSinh ts{f, lo, hi, tol, subdivisions, max_subdivisions};
    return ts.run(0.0, 0.0, tol, 0);
}

// int over [lo, hi] of |e - t|^gamma g(t), e = hi when singular_at_hi, else lo.
// g receives the offset from the profile anchor.
inline double weighted_integral(const std::function<double(double)>& g, double lo, double hi, double gamma,
                                bool singular_at_hi, double anchor, bool anchored, const QuadratureControl& q,
                                int& subdivisions) {
    // breakpoints, all as offsets from the anchor
    std::vector<double> cuts{lo - anchor};
    if (anchored && lo < anchor && anchor < hi) cuts.push_back(0.0);
    cuts.push_back(hi - anchor);
    const double e = (singular_at_hi ? hi : lo) - anchor;
    // split the piece touching e so the transformed part stays away from other features
    if (singular_at_hi) {
        const double l = cuts[cuts.size() - 2], h = cuts.back();
        cuts.insert(cuts.end() - 1, l + 0.5 * (h - l));
    } else {
        const double l = cuts[0], h = cuts[1];
        cuts.insert(cuts.begin() + 1, l + 0.5 * (h - l));
    }
    const double tol = q.abs_tol / static_cast<double>(cuts.size() - 1);
    const double gp1 = gamma + 1.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double l = cuts[i], h = cuts[i + 1];
        const bool at_anchor_lo = anchored && l == 0.0;
        const bool at_anchor_hi = anchored && h == 0.0;
        const bool touches_e = singular_at_hi ? (i + 2 == cuts.size()) : (i == 0);
        if (touches_e) {
            // s = r^(gamma+1)/(gamma+1), r = distance to e; the weight disappears
            const double len = h - l;
            const double S = std::pow(len, gp1) / gp1;
            const double p = 1.0 / gp1;
            EndpointFn f = [&](double dlo, double) {
                const double r = std::pow(gp1 * dlo, p);
                const double off = singular_at_hi ? e - r : e + r;
                const bool e_is_anchor = anchored && e == 0.0;
                return g(e_is_anchor ? (singular_at_hi ? -r : r) : off);
            };
            total += integrate(f, 0.0, S, tol, subdivisions, q.max_subdivisions);
        } else {
            EndpointFn f = [&](double dlo, double dhi) {
                double off;
                if (at_anchor_lo) off = dlo;
                else if (at_anchor_hi) off = -dhi;
                else off = (dlo <= dhi) ? l + dlo : h - dhi;
                const double dist = singular_at_hi ? (e - off) : (off - e);
                return std::pow(dist, gamma) * g(off);
            };
            total += integrate(f, l, h, tol, subdivisions, q.max_subdivisions);
        }
    }
    return total;
}

inline double oracle_one_sided(const OperatorSpec& spec, const Profile& f, double x, QuadratureControl q) {
    const double alpha = spec.order;
    const int m = spec.m();
    const bool left = is_left(spec.kind);
    const double a = spec.base_left, b = spec.base_right;
    if (left && !(x > a)) throw DomainError("oracle: x must exceed base_left");
    if (!left && !(x < b)) throw DomainError("oracle: x must be below base_right");
    const double lo = left ? a : x, hi = left ? x : b;
    int subdivisions = 0;
    if (is_integral(spec.kind)) {
        q.singularity_exponent = alpha - 1.0;
        auto g = [&](double s) { return f(0, s); };
        return rgamma(alpha) * weighted_integral(g, lo, hi, alpha - 1.0, left, f.anchor, f.anchored, q, subdivisions);
    }
    if (!f.deriv || f.max_order < m) throw MissingDerivative("oracle: derivative kinds need the m-th derivative");
    q.singularity_exponent = m - alpha - 1.0;
    auto g = [&](double s) { return f(m, s); };
    double caputo =
        rgamma(m - alpha) * weighted_integral(g, lo, hi, m - alpha - 1.0, left, f.anchor, f.anchored, q, subdivisions);
    if (!left && (m % 2)) caputo = -caputo;
    if (is_caputo(spec.kind)) return caputo;
    std::vector<double> d(m);
    const double base = left ? a : b;
    for (int k = 0; k < m; ++k) d[k] = f(k, base - f.anchor);
    // RL = Caputo + boundary sum
    return left ? caputo - caputo_from_rl(0.0, d, alpha, a, x) : caputo - caputo_from_rl_right(0.0, d, alpha, b, x);
}

} // namespace detail

// Numerical value of the operator on the profile at x.
inline double oracle_apply(const OperatorSpec& spec, const Profile& f, double x, QuadratureControl q = {}) {
    spec.validate();
    if (!(q.abs_tol > 0.0)) throw DomainError("oracle: abs_tol must be positive");
    if (spec.kind == OpKind::Riesz) {
        OperatorSpec l(OpKind::RLDerivativeLeft, spec.order, spec.base_left, spec.base_right);
        OperatorSpec r(OpKind::RLDerivativeRight, spec.order, spec.base_left, spec.base_right);
        return -riesz_coefficient(spec.order) * (detail::oracle_one_sided(l, f, x, q) + detail::oracle_one_sided(r, f, x, q));
    }
    return detail::oracle_one_sided(spec, f, x, q);
}

} // namespace fracrbf
