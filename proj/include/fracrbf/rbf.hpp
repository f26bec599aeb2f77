#pragma once

// The five profile families, their integer-order derivatives, and scaled kernels.

#include <cmath>
#include <numbers>
#include <string>

#include "fracrbf/errors.hpp"
#include "fracrbf/specfun.hpp"

namespace fracrbf {

enum class Family { Gaussian, Multiquadric, Powers, Matern, ThinPlate };

inline const char* family_name(Family f) {
    switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Multiquadric: return "multiquadric";
    case Family::Powers: return "powers";
    case Family::Matern: return "matern";
    case Family::ThinPlate: return "thinplate";
    }
    return "?";
}

inline Family parse_family(const std::string& s) {
    if (s == "gaussian") return Family::Gaussian;
    if (s == "multiquadric") return Family::Multiquadric;
    if (s == "powers") return Family::Powers;
    if (s == "matern") return Family::Matern;
    if (s == "thinplate") return Family::ThinPlate;
    throw ConfigError("unknown family '" + s + "'");
}

struct RBFFamily {
    Family tag = Family::Gaussian;
    double param = 0.0; // beta, nu or n

    RBFFamily() = default;
    RBFFamily(Family t, double p = 0.0) : tag(t), param(p) { validate(); }

    void validate() const {
        switch (tag) {
        case Family::Matern:
            if (!(param > 0.0) || std::abs(param - std::nearbyint(param)) < 1e-6)
                throw DomainError("matern: nu must be positive and non-integer");
            break;
        case Family::ThinPlate:
            if (!(param >= 1.0) || !is_integer(param)) throw DomainError("thinplate: n must be a positive integer");
            break;
        case Family::Powers:
            if (!(param > 0.0)) throw DomainError("powers: beta must be positive");
            break;
        default: break;
        }
    }

    int n() const { return static_cast<int>(param); }
};

struct RBFKernel {
    RBFFamily family;
    double scale = 1.0;  // c
    double center = 0.0; // y

    RBFKernel() = default;
    RBFKernel(RBFFamily f, double c, double y) : family(f), scale(c), center(y) {
        if (!(scale > 0.0)) throw DomainError("kernel scale must be positive");
    }
};

namespace detail {

inline double falling(double b, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= b - i;
    return r;
}

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

// probabilists' Hermite polynomial He_k
inline double hermite_he(int k, double x) {
    double h0 = 1.0, h1 = x;
    if (k == 0) return h0;
    for (int j = 1; j < k; ++j) {
        const double h2 = x * h1 - j * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// x^mu K_mu(x) for x > 0
inline double matern_m(double mu, double x, const SeriesControl& ctrl) {
    return std::pow(x, mu) * bessel_k(mu, x, ctrl);
}

// k-th derivative of x^nu K_nu(x) at x = 0 through its power series; finite when 2nu > k
inline double matern_at_zero(double nu, int k) {
    if (!(2.0 * nu > k)) throw DomainError("matern derivative singular at the center");
    if (k % 2) return 0.0;
    const int j = k / 2;
    const double P = std::numbers::pi / (2.0 * std::sin(std::numbers::pi * nu));
    return P * std::pow(2.0, nu) / (std::pow(4.0, j) * factorial(j)) * rgamma(j + 1.0 - nu) * factorial(k);
}

} // namespace detail

inline double profile_derivative(const RBFFamily& fam, int order, double x, const SeriesControl& ctrl = {});

inline double profile_eval(const RBFFamily& fam, double x, const SeriesControl& ctrl = {}) {
    return profile_derivative(fam, 0, x, ctrl);
}

inline double profile_derivative(const RBFFamily& fam, int k, double x, const SeriesControl& ctrl) {
    if (k < 0 || k > 4) throw UnsupportedOrder("profile_derivative: order must be in 0..4");
    using detail::factorial;
    using detail::falling;
    switch (fam.tag) {
    case Family::Gaussian:
        return (k % 2 ? -1.0 : 1.0) * detail::hermite_he(k, x) * std::exp(-0.5 * x * x);
    case Family::Multiquadric: {
        const double p = 0.5 * fam.param;
        const double u = 1.0 + 0.5 * x * x;
        double s = 0.0;
        for (int j = 0; 2 * j <= k; ++j)
            s += factorial(k) / (factorial(j) * factorial(k - 2 * j) * std::pow(2.0, j)) * falling(p, k - j) *
                 std::pow(u, p - k + j) * std::pow(x, k - 2 * j);
        return s;
    }
    case Family::Powers: {
        const double b = fam.param;
        const bool even_int = is_integer(b) && static_cast<long long>(b) % 2 == 0;
        if (even_int) return falling(b, k) * (k <= b ? std::pow(x, b - k) : 0.0);
        if (x == 0.0) {
            if (b - k > 0.0) return 0.0;
            throw DomainError("powers derivative singular at the center");
        }
        const double sgn = (x < 0.0 && k % 2) ? -1.0 : 1.0;
        return sgn * falling(b, k) * std::pow(std::abs(x), b - k);
    }
    case Family::ThinPlate: {
        const int n2 = 2 * fam.n();
        if (x == 0.0) {
            if (n2 - k > 0) return 0.0;
            throw DomainError("thinplate derivative singular at the center");
        }
        double c = 0.0;
        for (int r = 1; r <= k; ++r)
            c += factorial(k) / (factorial(r) * factorial(k - r)) * falling(n2, k - r) * (r % 2 ? 1.0 : -1.0) *
                 factorial(r - 1);
        return std::pow(x, n2 - k) * (falling(n2, k) * std::log(std::abs(x)) + c);
    }
    case Family::Matern: {
        const double nu = fam.param;
        const double ax = std::abs(x);
        if (x == 0.0 || (ax < 1e-15 && 2.0 * nu > k)) return detail::matern_at_zero(nu, k);
        double s = 0.0;
        for (int j = 0; 2 * j <= k; ++j)
            s += ((k - j) % 2 ? -1.0 : 1.0) * factorial(k) / (factorial(j) * factorial(k - 2 * j) * std::pow(2.0, j)) *
                 std::pow(ax, k - 2 * j) * detail::matern_m(nu - k + j, ax, ctrl);
        return (x < 0.0 && k % 2) ? -s : s;
    }
    }
    return 0.0;
}

inline double kernel_eval(const RBFKernel& ker, double x, const SeriesControl& ctrl = {}) {
    return profile_eval(ker.family, (x - ker.center) / ker.scale, ctrl);
}

} // namespace fracrbf
