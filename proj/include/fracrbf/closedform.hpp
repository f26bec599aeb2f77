#pragma once

// Closed-form fractional operators of the profile families, the center/sign
// reduction for shifted kernels, kernel scaling and Riesz assembly.
//
// Conventions: s denotes the signed order, +alpha for RL integrals and -alpha
// for RL derivatives (the RL derivative of a profile that is analytic at the
// base is the integral formula continued to negative order). mu = m - alpha is
// the integral order inside a Caputo derivative.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fracrbf/errors.hpp"
#include "fracrbf/fracops.hpp"
#include "fracrbf/rbf.hpp"
#include "fracrbf/specfun.hpp"

namespace fracrbf {

struct ClosedFormResult {
    double value = 0.0;
    int terms_used = 0;
    bool truncation_ok = true;
    double imag_residual = 0.0;
};

inline void require_accepted(const ClosedFormResult& r) {
    if (!r.truncation_ok) throw ConvergenceError("closed form: series truncated before reaching rel_tol");
    if (r.imag_residual > 1e-8 * (1.0 + std::abs(r.value)))
        throw ImagResidualTooLarge("closed form: imaginary residual " + std::to_string(r.imag_residual));
}

namespace detail {

constexpr double kPi = std::numbers::pi;

struct Tally {
    int terms = 0;
    bool ok = true;
    void add(const SeriesValue& s) {
        terms += s.terms;
        ok = ok && s.converged;
    }
    ClosedFormResult result(double v) const { return {v, terms, ok, 0.0}; }
};

// Partial sum with the three-consecutive-small-terms stopping rule.
struct Summer {
    double sum = 0.0;
    int small = 0;
    int terms = 0;
    bool push(double t, double rel_tol) {
        sum += t;
        ++terms;
        if (std::abs(t) <= rel_tol * std::abs(sum)) return ++small >= 3;
        small = 0;
        return false;
    }
};

inline double signed_pow_int(double d, int k) { return (d < 0.0 && (k % 2)) ? -1.0 : 1.0; }

// j! * sum_{k=0..J} base^(J-k) d^k / ((J-k)! Gamma(sig+k+1)), J = j - mshift, times g where
// log|g| and sign(g) are given. Evaluated downward from the k = J term so that tiny
// bases do not underflow the leading term.
inline double monomial_core(int j, int mshift, double sig, double base, double d, double log_g, int sign_g,
                            double* abs_sum = nullptr) {
    const int J = j - mshift;
    if (J < 0) return 0.0;
    const double top_arg = sig + J + 1.0;
    if (is_nonpositive_integer(top_arg)) throw DomainError("monomial operator: Gamma pole");
    const double lg = log_g + std::lgamma(j + 1.0) + J * std::log(std::abs(d)) - std::lgamma(top_arg);
    double t = sign_g * gamma_sign(top_arg) * signed_pow_int(d, J) * std::exp(lg);
    double sum = t, mag = std::abs(t);
    for (int k = J; k >= 1; --k) {
        t *= base * (sig + k) / ((J - k + 1.0) * d);
        sum += t;
        mag += std::abs(t);
    }
    if (abs_sum) *abs_sum += mag;
    return sum;
}

// Bracket of the power formula: value = dist^sig * core.
inline double poly_core(int n, int mshift, double sig, double base, double d) {
    return monomial_core(n, mshift, sig, base, d, 0.0, 1);
}

// Taylor coefficients g_n of the even analytic profiles in powers t^(2n), in log form.
struct EvenCoeffs {
    bool multiquadric = false;
    double half_beta = 0.0;
    double log_g = 0.0;
    int sign = 1;
    int n = 0;
    bool zero = false;
    void next() {
        if (multiquadric) {
            const double f = half_beta - n;
            if (f == 0.0) zero = true;
            else {
                log_g += std::log(std::abs(f));
                if (f < 0.0) sign = -sign;
            }
            log_g -= std::log(2.0 * (n + 1));
        } else {
            log_g -= std::log(2.0 * (n + 1));
            sign = -sign;
        }
        ++n;
    }
};

inline EvenCoeffs even_coeffs(Family fam, double beta) {
    EvenCoeffs c;
    c.multiquadric = fam == Family::Multiquadric;
    c.half_beta = 0.5 * beta;
    return c;
}

// Rounding in a sum whose terms reach magnitude mag is about eps * mag; results that
// lose more than this many digits relative to max(1, |sum|) are reported as not accepted.
constexpr double kCancellationLimit = 1e-7;

inline bool cancellation_ok(double sum, double mag) {
    return 16.0 * std::numeric_limits<double>::epsilon() * mag <= kCancellationLimit * std::max(1.0, std::abs(sum));
}

// Gaussian bracket summed in Taylor order about the base:
// sum_{k>=mshift} phi^(k)(base) d^(k-mshift) / Gamma(sig+k-mshift+1), phi^(k) = (-1)^k He_k e^(-t^2/2).
// He_k is carried normalised by sqrt(k!), which keeps every term bounded by about e^(d^2/2).
inline ClosedFormResult gaussian_taylor_series(int mshift, double sig, double base, double d,
                                               const SeriesControl& ctrl) {
    const double env = std::exp(-0.5 * base * base);
    const double ld = std::log(std::abs(d));
    const double peak = d * d + 8.0;
    double h_prev = 0.0, h = 1.0; // He_k / sqrt(k!)
    Summer s;
    double mag = 0.0;
    for (int k = 0; k < ctrl.max_terms; ++k) {
        if (k >= mshift) {
            const int j = k - mshift;
            const double arg = sig + j + 1.0;
            double t = 0.0;
            if (!is_nonpositive_integer(arg) && h != 0.0) {
                const double lg = 0.5 * std::lgamma(k + 1.0) + (j > 0 ? j * ld : 0.0) - std::lgamma(arg);
                t = (k % 2 ? -1.0 : 1.0) * signed_pow_int(d, j) * gamma_sign(arg) * h * env * std::exp(lg);
            }
            mag += std::abs(t);
            const bool done = s.push(t, ctrl.rel_tol);
            if (done && k > peak) return {s.sum, s.terms, cancellation_ok(s.sum, mag), 0.0};
        }
        const double h_next = (base * h - std::sqrt(static_cast<double>(k)) * h_prev) / std::sqrt(k + 1.0);
        h_prev = h;
        h = h_next;
    }
    return {s.sum, s.terms, false, 0.0};
}

// sum_n g_n * [operator core on t^(2n)]
inline ClosedFormResult even_double_series(Family fam, double beta, int mshift, double sig, double base, double d,
                                           const SeriesControl& ctrl) {
    EvenCoeffs g = even_coeffs(fam, beta);
    Summer s;
    double mag = 0.0;
    for (int n = 0; n < ctrl.max_terms; ++n, g.next()) {
        if (g.zero) return {s.sum, s.terms, cancellation_ok(s.sum, mag), 0.0};
        const double inner = monomial_core(2 * n, mshift, sig, base, d, g.log_g, g.sign, &mag);
        if (!std::isfinite(inner)) break;
        if (2 * n < mshift) {
            ++s.terms;
            continue;
        }
        if (s.push(inner, ctrl.rel_tol)) {
            if (!cancellation_ok(s.sum, mag) && fam == Family::Gaussian && d != 0.0)
                return gaussian_taylor_series(mshift, sig, base, d, ctrl);
            return {s.sum, s.terms, cancellation_ok(s.sum, mag), 0.0};
        }
    }
    return {s.sum, s.terms, false, 0.0};
}

// a = 0 even-profile forms: t_{n0} * pFq(n0+1/2, 1, [e+n0]; n0+(1+sig)/2, n0+1+sig/2; -x^2/2),
// sig the signed order applied to t^(2n); n0 skips the powers a Caputo derivative annihilates.
inline ClosedFormResult even_at_zero(Family fam, double beta, double sig, int n0, double x, const SeriesControl& ctrl) {
    EvenCoeffs g = even_coeffs(fam, beta);
    for (int n = 0; n < n0; ++n) g.next();
    if (g.zero) return {0.0, 1, true, 0.0};
    const double lead_arg = 2.0 * n0 + 1.0 + sig;
    const double lead = g.sign * std::exp(g.log_g + std::lgamma(2.0 * n0 + 1.0)) * rgamma(lead_arg) *
                        std::pow(x, 2.0 * n0 + sig);
    std::vector<double> up{n0 + 0.5, 1.0};
    if (fam == Family::Multiquadric) up.push_back(n0 - 0.5 * beta);
    const SeriesValue f = hyp_pfq_series(up, {n0 + 0.5 * (1.0 + sig), n0 + 1.0 + 0.5 * sig}, -0.5 * x * x, ctrl);
    return {lead * f.value, f.terms, f.converged, 0.0};
}

// sum_k (q)_k Psi(q+k) z^k / ((d+k) k!)
inline SeriesValue psi_series(double q, double d, double z, const SeriesControl& ctrl) {
    Summer s;
    double r = 1.0;
    for (int k = 0; k < ctrl.max_terms; ++k) {
        const double t = r * digamma(q + k) / (d + k);
        if (s.push(t, ctrl.rel_tol)) return {s.sum, s.terms, true};
        r *= (q + k) * z / (k + 1.0);
        if (r == 0.0) return {s.sum, s.terms, true};
    }
    return {s.sum, s.terms, false};
}

// m! sum_{r=1..m} (-1)^(r-1) / (r (m-r)! Gamma(2n-m+r+1))
inline double leibniz_constant(int n, int m) {
    double c = 0.0;
    for (int r = 1; r <= m; ++r)
        c += (r % 2 ? 1.0 : -1.0) / (r * detail::factorial(m - r)) * rgamma(2.0 * n - m + r + 1.0);
    return detail::factorial(m) * c;
}

// Thin-plate bracket at base e > 0, point x > 0: value = dist^sig * core, dist = |x - e|,
// z = (e - x)/e for the left orientation and (e - x)/e with e = b on the right.
inline ClosedFormResult thinplate_core_int(int n, double s, double e, double x, const SeriesControl& ctrl) {
    const double z = (e - x) / e;
    const double pre = std::pow(x, 2.0 * n + s) * std::pow(e, -s) * rgamma(1.0 + s);
    const SeriesValue f = hyp_pfq_series({s, s + 2.0 * n + 1.0}, {s + 1.0}, z, ctrl);
    const SeriesValue p = psi_series(s + 2.0 * n + 1.0, s, z, ctrl);
    Tally t;
    t.add(f);
    t.add(p);
    return t.result(pre * (f.value * (std::log(x) - digamma(s + 2.0 * n + 1.0)) + s * p.value));
}

inline ClosedFormResult thinplate_core_caputo(int n, int m, double alpha, double e, double x,
                                              const SeriesControl& ctrl) {
    const double mu = m - alpha;
    const double z = (e - x) / e;
    const double q = 2.0 * n - alpha + 1.0;
    const double pre = std::tgamma(2.0 * n + 1.0) * std::pow(x, 2.0 * n - alpha) * std::pow(e, -mu) * rgamma(1.0 + mu);
    const double rg = rgamma(2.0 * n - m + 1.0);
    const SeriesValue f = hyp_pfq_series({mu, q}, {mu + 1.0}, z, ctrl);
    const SeriesValue p = psi_series(q, mu, z, ctrl);
    Tally t;
    t.add(f);
    t.add(p);
    const double bracket =
        f.value * ((std::log(x) - digamma(q)) * rg + leibniz_constant(n, m)) + mu * rg * p.value;
    return t.result(pre * bracket);
}

// Matern series: x^nu K_nu(x) = P [ sum A_k x^(2k) - sum B_k x^(2nu+2k) ]
struct MaternSeries {
    double nu;
    double P() const { return kPi / (2.0 * std::sin(kPi * nu)); }
    double A(int k) const {
        return std::pow(2.0, nu) * std::exp(-k * std::log(4.0) - std::lgamma(k + 1.0)) * rgamma(k + 1.0 - nu);
    }
    double B(int k) const {
        return std::pow(2.0, -nu) * std::exp(-k * std::log(4.0) - std::lgamma(k + 1.0)) * rgamma(k + 1.0 + nu);
    }
};

// sum_{k>=k0} A_k Gamma(2k+1)/Gamma(2k+1+s) x^(2k+s)
inline SeriesValue matern_T1(const MaternSeries& ms, double s, int k0, double x, const SeriesControl& ctrl) {
    const double nu = ms.nu;
    const double lead = ms.A(k0) * std::tgamma(2.0 * k0 + 1.0) * rgamma(2.0 * k0 + 1.0 + s) * std::pow(x, 2.0 * k0 + s);
    SeriesValue f = hyp_pfq_series({k0 + 0.5, 1.0}, {k0 + 1.0 - nu, k0 + 0.5 * (1.0 + s), k0 + 1.0 + 0.5 * s},
                                   0.25 * x * x, ctrl);
    f.value *= lead;
    return f;
}

// sum_k B_k Gamma(2nu+2k+1)/Gamma(2nu+2k+1+s) x^(2nu+2k+s)
inline SeriesValue matern_T2(const MaternSeries& ms, double s, double x, const SeriesControl& ctrl) {
    const double nu = ms.nu;
    const double lead = std::pow(2.0, nu) * std::tgamma(nu + 0.5) / std::sqrt(kPi) * rgamma(s + 2.0 * nu + 1.0) *
                        std::pow(x, s + 2.0 * nu);
    SeriesValue f = hyp_pfq_series({nu + 0.5}, {nu + 0.5 * (s + 1.0), nu + 1.0 + 0.5 * s}, 0.25 * x * x, ctrl);
    f.value *= lead;
    return f;
}

// Portion of the order-s operator contributed by [0, a]:
// 1/Gamma(s) x^(s-1) sum_k c_k a^(p_k+1) 2F1(p_k+1, 1-s; p_k+2; a/x)/(p_k+1), p_k = p0 + 2k.
template <class Coef>
inline SeriesValue matern_cut(Coef coef, double p0, int k0, double s, double a, double x, const SeriesControl& ctrl) {
    Summer sm;
    int terms = 0;
    bool ok = true;
    const double z = a / x;
    for (int k = k0; k < k0 + ctrl.max_terms; ++k) {
        const double p = p0 + 2.0 * k;
        const double c = coef(k);
        const SeriesValue f = hyp_pfq_series({p + 1.0, 1.0 - s}, {p + 2.0}, z, ctrl);
        terms += f.terms;
        ok = ok && f.converged;
        const double t = c * std::pow(a, p + 1.0) * f.value / (p + 1.0);
        if (sm.push(t, ctrl.rel_tol)) return {rgamma(s) * std::pow(x, s - 1.0) * sm.sum, terms + sm.terms, ok};
    }
    return {rgamma(s) * std::pow(x, s - 1.0) * sm.sum, terms, false};
}

// Right-sided order-s operator of sum_k c_k t^(p_k) at 0 < x < b:
// sum_k c_k (b-x)^s b^(p_k) / Gamma(1+s) 2F1(1, -p_k; 1+s; (b-x)/b)
template <class Coef>
inline SeriesValue matern_right(Coef coef, double p0, int k0, double s, double b, double x, const SeriesControl& ctrl) {
    Summer sm;
    int terms = 0;
    bool ok = true;
    const double w = (b - x) / b;
    for (int k = k0; k < k0 + ctrl.max_terms; ++k) {
        const double p = p0 + 2.0 * k;
        const SeriesValue f = hyp_pfq_series({1.0, -p}, {1.0 + s}, w, ctrl);
        terms += f.terms;
        ok = ok && f.converged;
        const double t = coef(k) * std::pow(b, p) * f.value;
        if (sm.push(t, ctrl.rel_tol)) return {std::pow(b - x, s) * rgamma(1.0 + s) * sm.sum, terms + sm.terms, ok};
    }
    return {std::pow(b - x, s) * rgamma(1.0 + s) * sm.sum, terms, false};
}

inline void check_side(const OperatorSpec& spec, double x) {
    if (is_left(spec.kind) && !(x > spec.base_left)) throw DomainError("closed form: x must exceed base_left");
    if (is_right(spec.kind) && !(x < spec.base_right)) throw DomainError("closed form: x must be below base_right");
    if (spec.kind == OpKind::Riesz && !(x > spec.base_left && x < spec.base_right))
        throw DomainError("closed form: x must lie inside (base_left, base_right)");
}

template <class F>
inline ClosedFormResult riesz_combine(const OperatorSpec& spec, double x, F&& one_sided) {
    const OperatorSpec l(OpKind::RLDerivativeLeft, spec.order, spec.base_left, spec.base_right);
    const OperatorSpec r(OpKind::RLDerivativeRight, spec.order, spec.base_left, spec.base_right);
    const ClosedFormResult L = one_sided(l, x), R = one_sided(r, x);
    const double c = -riesz_coefficient(spec.order);
    return {c * (L.value + R.value), L.terms_used + R.terms_used, L.truncation_ok && R.truncation_ok,
            std::abs(c) * (L.imag_residual + R.imag_residual)};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Family closed forms. Each acts on the unscaled profile as a function of t:
// powers t^beta, gaussian exp(-t^2/2), multiquadric (1+t^2/2)^(beta/2),
// thin-plate t^(2n) ln t, matern t^nu K_nu(t).

inline ClosedFormResult powers_closed(const OperatorSpec& spec, double beta, double x, const SeriesControl& ctrl = {}) {
    spec.validate();
    detail::check_side(spec, x);
    if (spec.kind == OpKind::Riesz)
        return detail::riesz_combine(spec, x, [&](const OperatorSpec& s, double xx) { return powers_closed(s, beta, xx, ctrl); });
    const double alpha = spec.order;
    const int m = spec.m();
    const bool left = is_left(spec.kind);
    const double base = left ? spec.base_left : spec.base_right;
    if (left && base == 0.0) {
        if (!(x > 0.0)) throw DomainError("powers: x must be positive");
        switch (spec.kind) {
        case OpKind::RLIntegralLeft: return {power_rule_integral(alpha, beta, 0.0, x), 1, true, 0.0};
        case OpKind::RLDerivativeLeft: return {power_rule_rl_derivative(alpha, beta, 0.0, x), 1, true, 0.0};
        default: return {power_rule_caputo(alpha, beta, 0.0, x), 1, true, 0.0};
        }
    }
    if (!(is_integer(beta) && beta >= 0.0))
        throw NonIntegerExponentWithShiftedBase("powers: shifted base needs a non-negative integer exponent");
    const int n = static_cast<int>(beta);
    const double dist = left ? x - base : base - x;
    double v;
    if (is_caputo(spec.kind)) {
        v = std::pow(dist, m - alpha) * detail::poly_core(n, m, m - alpha, base, x - base);
        if (!left && (m % 2)) v = -v;
    } else {
        const double s = spec.signed_order();
        v = std::pow(dist, s) * detail::poly_core(n, 0, s, base, x - base);
    }
    return {v, n + 1, true, 0.0};
}

namespace detail {

inline ClosedFormResult even_closed(Family fam, double beta, const OperatorSpec& spec, double x,
                                    const SeriesControl& ctrl) {
    const double alpha = spec.order;
    const int m = spec.m();
    const bool left = is_left(spec.kind);
    const double base = left ? spec.base_left : spec.base_right;
    if (base == 0.0) {
        // right-sided at b = 0 is the left-sided form at -x for an even profile; for Caputo
        // the (-1)^m of the definition cancels against f^(m)(-t) = (-1)^m f^(m)(t)
        const double xx = left ? x : -x;
        if (is_caputo(spec.kind)) return even_at_zero(fam, beta, -alpha, (m + 1) / 2, xx, ctrl);
        return even_at_zero(fam, beta, spec.signed_order(), 0, xx, ctrl);
    }
    const double dist = left ? x - base : base - x;
    if (is_caputo(spec.kind)) {
        ClosedFormResult r = even_double_series(fam, beta, m, m - alpha, base, x - base, ctrl);
        r.value *= std::pow(dist, m - alpha);
        if (!left && (m % 2)) r.value = -r.value;
        return r;
    }
    const double s = spec.signed_order();
    ClosedFormResult r = even_double_series(fam, beta, 0, s, base, x - base, ctrl);
    r.value *= std::pow(dist, s);
    return r;
}

} // namespace detail

inline ClosedFormResult gaussian_closed(const OperatorSpec& spec, double x, const SeriesControl& ctrl = {}) {
    spec.validate();
    detail::check_side(spec, x);
    if (spec.kind == OpKind::Riesz)
        return detail::riesz_combine(spec, x, [&](const OperatorSpec& s, double xx) { return gaussian_closed(s, xx, ctrl); });
    return detail::even_closed(Family::Gaussian, 0.0, spec, x, ctrl);
}

inline ClosedFormResult multiquadric_closed(const OperatorSpec& spec, double beta, double x,
                                            const SeriesControl& ctrl = {}) {
    spec.validate();
    detail::check_side(spec, x);
    if (spec.kind == OpKind::Riesz)
        return detail::riesz_combine(spec, x,
                                     [&](const OperatorSpec& s, double xx) { return multiquadric_closed(s, beta, xx, ctrl); });
    return detail::even_closed(Family::Multiquadric, beta, spec, x, ctrl);
}

inline ClosedFormResult thinplate_closed(const OperatorSpec& spec, int n, double x, const SeriesControl& ctrl = {}) {
    spec.validate();
    detail::check_side(spec, x);
    if (n < 1) throw DomainError("thinplate: n must be a positive integer");
    if (spec.kind == OpKind::Riesz)
        return detail::riesz_combine(spec, x, [&](const OperatorSpec& s, double xx) { return thinplate_closed(s, n, xx, ctrl); });
    if (!(x > 0.0)) throw DomainError("thinplate: x must be positive");
    const double alpha = spec.order;
    const int m = spec.m();
    const bool left = is_left(spec.kind);
    const double base = left ? spec.base_left : spec.base_right;
    if (left && base < 0.0) throw DomainError("thinplate: base must be non-negative");
    if (left && base == 0.0) {
        if (is_caputo(spec.kind)) {
            if (2 * n < m) throw DomainError("thinplate: Caputo at a = 0 needs 2n >= m");
            const double q = 2.0 * n - alpha + 1.0;
            const double v = std::tgamma(2.0 * n + 1.0) * rgamma(q) * std::pow(x, 2.0 * n - alpha) *
                             (std::log(x) + digamma(2.0 * n - m + 1.0) - digamma(q) +
                              std::tgamma(2.0 * n - m + 1.0) * detail::leibniz_constant(n, m));
            return {v, 1, true, 0.0};
        }
        const double s = spec.signed_order();
        const double v = std::tgamma(2.0 * n + 1.0) * rgamma(2.0 * n + 1.0 + s) * std::pow(x, s + 2.0 * n) *
                         (std::log(x) + digamma(2.0 * n + 1.0) - digamma(2.0 * n + 1.0 + s));
        return {v, 1, true, 0.0};
    }
    const double dist = left ? x - base : base - x;
    ClosedFormResult r;
    if (is_caputo(spec.kind)) {
        r = detail::thinplate_core_caputo(n, m, alpha, base, x, ctrl);
        r.value *= std::pow(dist, m - alpha);
        if (!left && (m % 2)) r.value = -r.value;
    } else {
        const double s = spec.signed_order();
        r = detail::thinplate_core_int(n, s, base, x, ctrl);
        r.value *= std::pow(dist, s);
    }
    return r;
}

inline ClosedFormResult matern_closed(const OperatorSpec& spec, double nu, double x, const SeriesControl& ctrl = {}) {
    spec.validate();
    detail::check_side(spec, x);
    RBFFamily fam(Family::Matern, nu);
    if (spec.kind == OpKind::Riesz)
        return detail::riesz_combine(spec, x, [&](const OperatorSpec& s, double xx) { return matern_closed(s, nu, xx, ctrl); });
    if (!(x > 0.0)) throw DomainError("matern: x must be positive");
    const double alpha = spec.order;
    const int m = spec.m();
    const int k0 = (m + 1) / 2; // first even power 2k >= m
    const detail::MaternSeries ms{nu};
    const double P = ms.P();
    detail::Tally t;
    auto A = [&](int k) { return ms.A(k); };
    auto B = [&](int k) { return ms.B(k); };
    auto Ac = [&](int k) { return ms.A(k) * detail::falling(2.0 * k, m); };
    auto Bc = [&](int k) { return ms.B(k) * detail::falling(2.0 * nu + 2.0 * k, m); };
    const bool left = is_left(spec.kind);
    if (!left) {
        const double b = spec.base_right;
        if (is_caputo(spec.kind)) {
            const double mu = m - alpha;
            const SeriesValue r1 = detail::matern_right(Ac, -m, k0, mu, b, x, ctrl);
            const SeriesValue r2 = detail::matern_right(Bc, 2.0 * nu - m, 0, mu, b, x, ctrl);
            t.add(r1);
            t.add(r2);
            return t.result((m % 2 ? -P : P) * (r1.value - r2.value));
        }
        const double s = spec.signed_order();
        const SeriesValue r1 = detail::matern_right(A, 0.0, 0, s, b, x, ctrl);
        const SeriesValue r2 = detail::matern_right(B, 2.0 * nu, 0, s, b, x, ctrl);
        t.add(r1);
        t.add(r2);
        return t.result(P * (r1.value - r2.value));
    }
    const double a = spec.base_left;
    if (a < 0.0) throw DomainError("matern: base must be non-negative");
    if (is_caputo(spec.kind)) {
        const double mu = m - alpha;
        if (!(2.0 * nu > m - 1.0)) {
            if (a == 0.0) throw DomainError("matern: Caputo at a = 0 needs 2 nu > m - 1");
            // boundary relation with the derivatives of the profile at a
            OperatorSpec rl(OpKind::RLDerivativeLeft, alpha, a);
            ClosedFormResult r = matern_closed(rl, nu, x, ctrl);
            std::vector<double> d(m);
            for (int k = 0; k < m; ++k) d[k] = profile_derivative(fam, k, a, ctrl);
            r.value = caputo_from_rl(r.value, d, alpha, a, x);
            return r;
        }
        const SeriesValue t1 = detail::matern_T1(ms, -alpha, k0, x, ctrl);
        const SeriesValue t2 = detail::matern_T2(ms, -alpha, x, ctrl);
        t.add(t1);
        t.add(t2);
        double v = t1.value - t2.value;
        if (a > 0.0) {
            const SeriesValue t3 = detail::matern_cut(Ac, -m, k0, mu, a, x, ctrl);
            const SeriesValue t4 = detail::matern_cut(Bc, 2.0 * nu - m, 0, mu, a, x, ctrl);
            t.add(t3);
            t.add(t4);
            v += -t3.value + t4.value;
        }
        return t.result(P * v);
    }
    const double s = spec.signed_order();
    const SeriesValue t1 = detail::matern_T1(ms, s, 0, x, ctrl);
    const SeriesValue t2 = detail::matern_T2(ms, s, x, ctrl);
    t.add(t1);
    t.add(t2);
    double v = t1.value - t2.value;
    if (a > 0.0) {
        const SeriesValue t3 = detail::matern_cut(A, 0.0, 0, s, a, x, ctrl);
        const SeriesValue t4 = detail::matern_cut(B, 2.0 * nu, 0, s, a, x, ctrl);
        t.add(t3);
        t.add(t4);
        v += -t3.value + t4.value;
    }
    return t.result(P * v);
}

// Dispatch on a family tag; the profile is the one-sided t > 0 form for the singular families.
inline ClosedFormResult family_closed(const RBFFamily& fam, const OperatorSpec& spec, double x,
                                      const SeriesControl& ctrl = {}) {
    switch (fam.tag) {
    case Family::Gaussian: return gaussian_closed(spec, x, ctrl);
    case Family::Multiquadric: return multiquadric_closed(spec, fam.param, x, ctrl);
    case Family::Powers: return powers_closed(spec, fam.param, x, ctrl);
    case Family::ThinPlate: return thinplate_closed(spec, fam.n(), x, ctrl);
    case Family::Matern: return matern_closed(spec, fam.param, x, ctrl);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Center reduction

enum class Phase { One, PlusPiAlpha, MinusPiAlpha };

inline std::complex<double> phase_value(Phase p, double alpha) {
    switch (p) {
    case Phase::One: return {1.0, 0.0};
    case Phase::PlusPiAlpha: return std::polar(1.0, detail::kPi * alpha);
    case Phase::MinusPiAlpha: return std::polar(1.0, -detail::kPi * alpha);
    }
    return {1.0, 0.0};
}

struct ShiftReduction {
    double reduced_base = 0.0;     // xi (a - y) or xi (b - y)
    Phase phase = Phase::One;      // xi^(+-alpha) or (-xi)^(+-alpha)
    double profile_argument = 0.0; // |x - y|
    int xi = 1;
};

inline ShiftReduction shift_reduce(const OperatorSpec& spec, const RBFKernel& ker, double x) {
    spec.validate();
    if (spec.kind == OpKind::Riesz) throw DomainError("shift_reduce: apply to the one-sided parts of a Riesz operator");
    const double y = ker.center;
    if (x == y) throw DegenerateCenter("shift_reduce: x coincides with the kernel center");
    detail::check_side(spec, x);
    ShiftReduction r;
    r.xi = x > y ? 1 : -1;
    r.profile_argument = std::abs(x - y);
    const bool left = is_left(spec.kind);
    r.reduced_base = r.xi * ((left ? spec.base_left : spec.base_right) - y);
    // the phase base is xi for left kinds and -xi for right kinds
    const int phase_base = left ? r.xi : -r.xi;
    if (phase_base == 1) r.phase = Phase::One;
    else r.phase = is_integral(spec.kind) ? Phase::PlusPiAlpha : Phase::MinusPiAlpha;
    return r;
}

namespace detail {

inline bool even_analytic(const RBFFamily& f) {
    if (f.tag == Family::Gaussian || f.tag == Family::Multiquadric) return true;
    return f.tag == Family::Powers && is_integer(f.param) && static_cast<long long>(f.param) % 2 == 0;
}

// Left operator on the profile restricted to the reflected side, evaluated at X < A
// (the reversed orientation produced by the reduction). The distance power is taken
// on the branch exp(-i pi sig) |X - A|^sig so that the phase combination is real.
inline std::complex<double> reversed_left(const RBFFamily& fam, const OperatorSpec& spec, double A, double X,
                                          const SeriesControl& ctrl, ClosedFormResult& info) {
    const double alpha = spec.order;
    const int m = spec.m();
    const double sig = is_caputo(spec.kind) ? m - alpha : spec.signed_order();
    const std::complex<double> pre = std::polar(std::pow(A - X, sig), -kPi * sig);
    double core = 0.0;
    if (fam.tag == Family::Powers) {
        if (!is_integer(fam.param))
            throw NonIntegerExponentWithShiftedBase("powers: reflected side needs an integer exponent");
        const int n = static_cast<int>(fam.param);
        core = poly_core(n, is_caputo(spec.kind) ? m : 0, sig, A, X - A);
        info.terms_used += n + 1;
    } else if (fam.tag == Family::ThinPlate) {
        const ClosedFormResult r = is_caputo(spec.kind) ? thinplate_core_caputo(fam.n(), m, alpha, A, X, ctrl)
                                                        : thinplate_core_int(fam.n(), sig, A, X, ctrl);
        core = r.value;
        info.terms_used += r.terms_used;
        info.truncation_ok = info.truncation_ok && r.truncation_ok;
    } else {
        throw DomainError("reversed orientation has no series for this family");
    }
    return pre * core;
}

inline ClosedFormResult left_kernel_unit(const RBFFamily& fam, const OperatorSpec& spec, double A, double X,
                                         const SeriesControl& ctrl);

// Kernel centered at 0 with unit scale; right-sided kinds are reflected to left-sided ones.
inline ClosedFormResult unit_kernel(const RBFFamily& fam, const OperatorSpec& spec, double x,
                                    const SeriesControl& ctrl) {
    if (even_analytic(fam)) return family_closed(fam, spec, x, ctrl);
    if (is_left(spec.kind)) return left_kernel_unit(fam, spec, spec.base_left, x, ctrl);
    const double b = spec.base_right;
    if (x >= 0.0 && !(x == 0.0 && fam.tag != Family::Powers)) return family_closed(fam, spec, x, ctrl);
    // phi(|t|) is even: the right operator from b at x equals the left operator from -b at -x
    OperatorSpec l(mirror(spec.kind), spec.order, -b);
    return left_kernel_unit(fam, l, -b, -x, ctrl);
}

inline ClosedFormResult left_kernel_unit(const RBFFamily& fam, const OperatorSpec& spec, double A, double X,
                                         const SeriesControl& ctrl) {
    const int m = spec.m();
    if (A >= 0.0) {
        OperatorSpec s(spec.kind, spec.order, A);
        return family_closed(fam, s, X, ctrl);
    }
    if (X > 0.0) {
        // center strictly inside (A, X)
        if (fam.tag != Family::Powers) throw DomainError("kernel center inside the integration span");
        if (!is_integer(fam.param))
            throw NonIntegerExponentWithShiftedBase("powers: split across the center needs an integer exponent");
        const int n = static_cast<int>(fam.param);
        if (is_caputo(spec.kind) && n < m) throw DomainError("powers: kernel not C^m across the center");
        // |t|^n = -t^n + 2 t^n H(t) for odd n
        OperatorSpec whole(spec.kind, spec.order, A), half(spec.kind, spec.order, 0.0);
        const ClosedFormResult w = powers_closed(whole, n, X, ctrl);
        const ClosedFormResult h = powers_closed(half, n, X, ctrl);
        return {-w.value + 2.0 * h.value, w.terms_used + h.terms_used, true, 0.0};
    }
    if (X == 0.0) {
        if (fam.tag != Family::Powers) throw DomainError("kernel evaluated at its center from the reflected side");
        OperatorSpec r(mirror(spec.kind), spec.order, 0.0, -A);
        return family_closed(fam, r, 0.0, ctrl);
    }
    // the interval lies on the negative side of the center: reduce with xi = -1
    RBFKernel unit(fam, 1.0, 0.0);
    OperatorSpec orig(spec.kind, spec.order, A);
    const ShiftReduction red = shift_reduce(orig, unit, X);
    if (fam.tag == Family::Matern) {
        // x^nu K_nu has no reversed series inside the unit disk; use the reflected right form
        OperatorSpec r(mirror(spec.kind), spec.order, 0.0, red.reduced_base);
        return family_closed(fam, r, red.profile_argument, ctrl);
    }
    ClosedFormResult info;
    const std::complex<double> v = phase_value(red.phase, spec.order) *
                                   reversed_left(fam, orig, red.reduced_base, red.profile_argument, ctrl, info);
    info.value = v.real();
    info.imag_residual = std::abs(v.imag());
    return info;
}

} // namespace detail

inline ClosedFormResult riesz_kernel_eval(double alpha, double a, double b, const RBFKernel& ker, double x,
                                          const SeriesControl& ctrl = {});

// Operator applied to t -> phi(|t - y|/c), evaluated at x.
inline ClosedFormResult kernel_operator_eval(const OperatorSpec& spec, const RBFKernel& ker, double x,
                                             const SeriesControl& ctrl = {}) {
    spec.validate();
    if (spec.kind == OpKind::Riesz)
        return riesz_kernel_eval(spec.order, spec.base_left, spec.base_right, ker, x, ctrl);
    // integral kinds vanish at their own base (bounded profiles)
    if (is_integral(spec.kind) && x == (is_left(spec.kind) ? spec.base_left : spec.base_right)) return {};
    detail::check_side(spec, x);
    const double c = ker.scale, y = ker.center;
    const OperatorSpec unit(spec.kind, spec.order, (spec.base_left - y) / c, (spec.base_right - y) / c);
    ClosedFormResult r = detail::unit_kernel(ker.family, unit, (x - y) / c, ctrl);
    const double f = std::pow(c, is_integral(spec.kind) ? spec.order : -spec.order);
    r.value *= f;
    r.imag_residual *= f;
    require_accepted(r);
    return r;
}

inline ClosedFormResult riesz_kernel_eval(double alpha, double a, double b, const RBFKernel& ker, double x,
                                          const SeriesControl& ctrl) {
    if (!(a < x && x < b)) throw DomainError("riesz_kernel_eval: x must lie inside (a, b)");
    const ClosedFormResult L = kernel_operator_eval(OperatorSpec(OpKind::RLDerivativeLeft, alpha, a, b), ker, x, ctrl);
    const ClosedFormResult R = kernel_operator_eval(OperatorSpec(OpKind::RLDerivativeRight, alpha, a, b), ker, x, ctrl);
    const double c = -riesz_coefficient(alpha);
    return {c * (L.value + R.value), L.terms_used + R.terms_used, true, std::abs(c) * (L.imag_residual + R.imag_residual)};
}

// Quadrature-oracle view of a scaled, centered kernel, anchored at its center.
inline Profile kernel_profile(const RBFKernel& ker, const SeriesControl& ctrl = {}) {
    Profile f;
    f.max_order = 4;
    f.anchor = ker.center;
    f.anchored = true;
    const RBFFamily fam = ker.family;
    const double c = ker.scale;
    f.deriv = [fam, c, ctrl](int k, double s) { return profile_derivative(fam, k, s / c, ctrl) / std::pow(c, k); };
    return f;
}

} // namespace fracrbf
