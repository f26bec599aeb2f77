#pragma once

// Real special functions: Gamma family, digamma, Pochhammer, pFq,
// incomplete Beta, modified Bessel I and K.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fracrbf/errors.hpp"

namespace fracrbf {

struct SeriesControl {
    double rel_tol = 0x1p-52;
    int max_terms = 2000;

    SeriesControl doubled() const { return {rel_tol, 2 * max_terms}; }
};

struct SeriesValue {
    double value = 0.0;
    int terms = 0;
    bool converged = true;
};

inline bool is_nonpositive_integer(double x) {
    return x <= 0.0 && x == std::nearbyint(x);
}

inline bool is_integer(double x) { return x == std::nearbyint(x); }

inline double gamma_fn(double x) {
    if (is_nonpositive_integer(x)) throw PoleError("gamma_fn: pole at " + std::to_string(x));
    return std::tgamma(x);
}

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
    return std::lgamma(x);
}

// Sign of Gamma(x) away from the poles.
inline int gamma_sign(double x) {
    if (x > 0.0) return 1;
    return (static_cast<long long>(std::floor(x)) % 2 == 0) ? 1 : -1;
}

// 1/Gamma(x), exactly zero at the poles.
inline double rgamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    if (x < 171.0 && x > -170.0) {
        double g = std::tgamma(x);
        if (std::isfinite(g) && g != 0.0) return 1.0 / g;
    }
    return gamma_sign(x) * std::exp(-std::lgamma(x));
}

// Gamma(p)/Gamma(q) via log-Gamma with tracked signs; zero when q is a pole.
inline double gamma_ratio(double p, double q) {
    if (is_nonpositive_integer(p)) throw PoleError("gamma_ratio: numerator pole");
    if (is_nonpositive_integer(q)) return 0.0;
    return gamma_sign(p) * gamma_sign(q) * std::exp(std::lgamma(p) - std::lgamma(q));
}

inline double pochhammer(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x + i;
    return r;
}

inline double digamma(double x, const SeriesControl& = {}) {
    if (is_nonpositive_integer(x)) throw PoleError("digamma: pole at " + std::to_string(x));
    constexpr double pi = std::numbers::pi;
    if (x < 0.0) return digamma(1.0 - x) - pi / std::tan(pi * x);
    double acc = 0.0;
    while (x < 12.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    // Bernoulli tail through x^-12
    const double tail =
        r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132 - r * 691.0 / 32760)))));
    return acc + std::log(x) - 0.5 / x - tail;
}

namespace detail {

inline void check_lower(const std::vector<double>& upper, const std::vector<double>& lower) {
    // a non-positive integer upper parameter terminates the series before a lower pole is reached
    double stop = std::numeric_limits<double>::infinity();
    for (double a : upper)
        if (is_nonpositive_integer(a)) stop = std::min(stop, -a);
    for (double b : lower)
        if (is_nonpositive_integer(b) && -b < stop)
            throw ParameterError("hyp_pfq: lower parameter " + std::to_string(b) + " is a pole");
}

} // namespace detail

// Partial sums of pFq stop after three consecutive terms below rel_tol * |sum|.
inline SeriesValue hyp_pfq_series(const std::vector<double>& upper, const std::vector<double>& lower, double x,
                                  const SeriesControl& ctrl = {}) {
    detail::check_lower(upper, lower);
    SeriesValue out{1.0, 1, true};
    if (x == 0.0) return out;
    double term = 1.0;
    int small = 0;
    for (int k = 0; k < ctrl.max_terms; ++k) {
        double num = x / (k + 1);
        for (double a : upper) num *= a + k;
        if (num == 0.0) return out;
        for (double b : lower) num /= b + k;
        term *= num;
        out.value += term;
        out.terms = k + 2;
        if (term == 0.0) return out;
        if (std::abs(term) <= ctrl.rel_tol * std::abs(out.value)) {
            if (++small >= 3) return out;
        } else {
            small = 0;
        }
        if (!std::isfinite(out.value)) break;
    }
    out.converged = false;
    return out;
}

inline double hyp_pfq(const std::vector<double>& upper, const std::vector<double>& lower, double x,
                      const SeriesControl& ctrl = {}) {
    SeriesValue s = hyp_pfq_series(upper, lower, x, ctrl);
    if (!s.converged) throw ConvergenceError("hyp_pfq: tail not below rel_tol within max_terms");
    return s.value;
}

// b(alpha, beta; x) = int_0^x t^(alpha-1) (1-t)^(beta-1) dt
inline double lower_incomplete_beta(double alpha, double beta, double x, const SeriesControl& ctrl = {}) {
    if (!(alpha > 0.0)) throw DomainError("lower_incomplete_beta: alpha must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("lower_incomplete_beta: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x > 0.5 && beta > 0.0 && !is_nonpositive_integer(1.0 - beta)) {
        const double complete = std::exp(std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta));
        return complete - lower_incomplete_beta(beta, alpha, 1.0 - x, ctrl);
    }
    return std::pow(x, alpha) / alpha * hyp_pfq({alpha, 1.0 - beta}, {alpha + 1.0}, x, ctrl);
}

inline double bessel_i(double nu, double x, const SeriesControl& ctrl = {}) {
    if (!(x > 0.0)) throw DomainError("bessel_i: x must be positive");
    if (nu < 0.0 && is_integer(nu)) nu = -nu;
    const double q = 0.25 * x * x;
    double term = std::pow(0.5 * x, nu) * rgamma(nu + 1.0);
    double sum = term;
    int small = 0;
    for (int k = 0; k < ctrl.max_terms; ++k) {
        term *= q / ((k + 1.0) * (nu + k + 1.0));
        sum += term;
        if (std::abs(term) <= ctrl.rel_tol * std::abs(sum)) {
            if (++small >= 3) return sum;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("bessel_i: series did not converge");
}

inline double bessel_k(double nu, double x, const SeriesControl& ctrl = {}) {
    if (std::abs(nu - std::nearbyint(nu)) < 1e-6) throw DomainError("bessel_k: integer order not supported");
    if (!(x > 0.0)) throw DomainError("bessel_k: x must be positive");
    constexpr double pi = std::numbers::pi;
    const double im = bessel_i(-nu, x, ctrl), ip = bessel_i(nu, x, ctrl);
    const double k = pi / (2.0 * std::sin(pi * nu)) * (im - ip);
    // the difference loses about log10(I/K) digits
    if (std::abs(im - ip) < 1e-8 * std::max(std::abs(im), std::abs(ip)))
        throw ConvergenceError("bessel_k: cancellation in the ascending series, x too large");
    return k;
}

} // namespace fracrbf
