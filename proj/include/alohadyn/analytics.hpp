#ifndef ALOHADYN_ANALYTICS_HPP
#define ALOHADYN_ANALYTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alohadyn/records.hpp"
#include "alohadyn/stats.hpp"

namespace alohadyn {

namespace detail {

inline void check_density(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be finite and > 0");
}

inline void check_prob(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("p must lie strictly in (0,1)");
}

inline void check_guard(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be finite and >= 0");
}

inline void check_range(double eta) {
    if (!(eta > 0.0) || std::isnan(eta))
        throw std::invalid_argument("eta must be > 0 (may be infinite)");
}

inline double simpson_rule(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson(F&& f, double a, double fa, double b, double fb, double m, double fm,
                        double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_rule(a, fa, m, fm, flm);
    const double right = simpson_rule(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(F&& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = simpson_rule(a, fa, b, fb, fm);
    return adaptive_simpson(f, a, fa, b, fb, m, fm, whole, tol, 64);
}

} // namespace detail

/**
 * Mean out-degree of a transmitter: ((1-p)/p) beta^-2 (1 - exp(-lambda p pi
 * beta^2 eta^2)). Infinite eta gives the interference-limited value
 * ((1-p)/p) beta^-2; beta = 0 gives the noise-limited value
 * lambda (1-p) pi eta^2.
 */
inline double expected_out_degree(double lambda, double p, double beta, double eta) {
    detail::check_density(lambda);
    detail::check_prob(p);
    detail::check_guard(beta);
    detail::check_range(eta);
    const double pi = std::numbers::pi;
    if (beta == 0.0) return lambda * (1.0 - p) * pi * eta * eta;
    const double b2 = beta * beta;
    if (std::isinf(eta)) return (1.0 - p) / p / b2;
    return (1.0 - p) / p / b2 * (-std::expm1(-lambda * p * pi * b2 * eta * eta));
}

/// Mean in-degree of a receiver: beta^-2 (1 - exp(-pi beta^2 lambda p eta^2)).
inline double expected_in_degree(double lambda, double p, double beta, double eta) {
    detail::check_density(lambda);
    detail::check_prob(p);
    detail::check_guard(beta);
    detail::check_range(eta);
    const double pi = std::numbers::pi;
    if (beta == 0.0) return lambda * p * pi * eta * eta;
    const double b2 = beta * beta;
    if (std::isinf(eta)) return 1.0 / b2;
    return (-std::expm1(-pi * b2 * lambda * p * eta * eta)) / b2;
}

/// Lower bound on the probability that a transmitter has out-degree zero.
inline double isolation_probability_lb(double lambda, double p, double beta, double eta) {
    detail::check_density(lambda);
    detail::check_prob(p);
    detail::check_guard(beta);
    detail::check_range(eta);
    const double pi = std::numbers::pi;
    double exponent;
    if (beta == 0.0) {
        exponent = lambda * (1.0 - p) * pi * eta * eta;
    } else if (std::isinf(eta)) {
        exponent = (1.0 - p) / (p * beta * beta);
    } else {
        const double b2 = beta * beta;
        exponent = (1.0 - p) / (p * b2) * (-std::expm1(-pi * b2 * lambda * p * eta * eta));
    }
    return std::exp(-exponent);
}

/**
 * nu(beta): area of B(z, beta|z|) \ B(o, |z|) divided by pi |z|^2, the
 * normalized guard-disk area outside the nearest-neighbor disk. Piecewise:
 * a circular-lens expression below 2, beta^2 - 1 at and above 2 (the two
 * branches agree at 2).
 */
inline double nu(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("nu: beta must be finite and > 0");
    const double b2 = beta * beta;
    if (beta >= 2.0) return b2 - 1.0;
    const double lens = b2 * std::acos(beta / 2.0) + std::acos(1.0 - b2 / 2.0) -
                        (beta / 2.0) * std::sqrt(4.0 - b2);
    return b2 - lens / std::numbers::pi;
}

/**
 * Independent numeric oracle for nu(beta): integrates the area of
 * B((1,0), beta) \ B((0,0), 1) by adaptive quadrature of exact vertical
 * slab extents, split at the slab breakpoints. Absolute error well below
 * 1e-8 over beta in (0, 5].
 */
inline double nu_numeric(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("nu_numeric: beta must be finite and > 0");
    // chord half-lengths of the two disks at abscissa x
    auto h = [beta](double x) {
        const double s = beta * beta - (x - 1.0) * (x - 1.0);
        return s > 0.0 ? std::sqrt(s) : 0.0;
    };
    auto g = [](double x) {
        const double s = 1.0 - x * x;
        return s > 0.0 ? std::sqrt(s) : 0.0;
    };
    auto slab = [&](double x) {
        const double hh = h(x);
        if (std::fabs(x) < 1.0) return 2.0 * hh - 2.0 * std::min(hh, g(x));
        return 2.0 * hh;
    };
    const double lo = 1.0 - beta;
    const double hi = 1.0 + beta;
    // breakpoints: disk edges, unit-circle crossings, and where the chords tie
    std::vector<double> cuts = {lo, -1.0, 1.0 - beta * beta / 2.0, 1.0, hi};
    std::sort(cuts.begin(), cuts.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(lo, cuts[i]);
        const double b = std::min(hi, cuts[i + 1]);
        if (b > a) area += detail::integrate(slab, a, b, 1e-11);
    }
    return area / std::numbers::pi;
}

/// ALOHA probability above which the mean nearest-neighbor connect time is
/// infinite.
inline double nn_time_cutoff(double beta) { return 1.0 / (1.0 + nu(beta)); }

/**
 * Mean number of slots until the origin connects to its nearest neighbor in
 * the interference-limited regime: (p(1-p) - p^2 nu(beta))^-1 for
 * p < 1/(1+nu(beta)), divergent otherwise. Density-free.
 */
inline std::optional<double> expected_nn_time(double p, double beta) {
    detail::check_prob(p);
    const double v = nu(beta);
    if (!(p < 1.0 / (1.0 + v))) return std::nullopt;
    return 1.0 / (p * (1.0 - p) - p * p * v);
}

/**
 * Lower bound on the mean opportunistic connect time (interference-limited).
 * For 1 < beta < 2: (beta-1)^2 [2 + p + (beta-1)^2] / (p (1-p^2)).
 * For beta >= 2: (p - p^2 (beta-1)^2)^-1 when p < (beta-1)^-2, divergent
 * otherwise. Guard factors <= 1 are outside the bound's domain.
 */
inline std::optional<double> opportunistic_time_lb(double p, double beta) {
    detail::check_prob(p);
    if (!(beta > 1.0) || !std::isfinite(beta))
        throw std::invalid_argument("opportunistic_time_lb: requires finite beta > 1");
    const double g = (beta - 1.0) * (beta - 1.0);
    if (beta < 2.0) return g * (2.0 + p + g) / (p * (1.0 - p * p));
    if (!(p < 1.0 / g)) return std::nullopt;
    return 1.0 / (p - p * p * g);
}

/// Least-squares line through per-distance mean delays.
struct TimeConstantFit {
    struct PointSummary {
        double distance = 0.0;
        double mean_delay = 0.0;
        double std_error = 0.0;
        std::uint32_t n_uncensored = 0;
        std::uint32_t n_censored = 0;
    };
    double mu_hat = 0.0;   ///< slope, slots per unit distance
    double mu_se = 0.0;
    double c_hat = 0.0;    ///< intercept, slots
    double c_se = 0.0;
    double r_squared = 0.0;
    std::vector<PointSummary> points;
};

/**
 * Fits mean delay vs distance by unweighted OLS over per-distance means of
 * the uncensored records. Records group by exact distance value. Requires at
 * least 3 distinct distances >= min_distance with >= 20 uncensored samples
 * each, and refuses any distance whose censored fraction exceeds 10%.
 */
inline TimeConstantFit fit_time_constant(std::span<const DelayRecord> records,
                                         double min_distance) {
    struct Group {
        RunningStat stat;
        std::uint32_t censored = 0;
    };
    std::map<double, Group> groups;
    for (const DelayRecord& rec : records) {
        if (rec.distance < min_distance) continue;
        Group& grp = groups[rec.distance];
        if (rec.censored)
            ++grp.censored;
        else
            grp.stat.add(static_cast<double>(rec.delay));
    }
    if (groups.size() < 3)
        throw std::invalid_argument(
            "fit_time_constant: need >= 3 distinct distances at or beyond min_distance");

    TimeConstantFit fit;
    for (const auto& [dist, grp] : groups) {
        const double total = static_cast<double>(grp.stat.count() + grp.censored);
        if (grp.censored > 0.10 * total)
            throw std::runtime_error("fit_time_constant: censored fraction above 10% at distance " +
                                     std::to_string(dist));
        if (grp.stat.count() < 20)
            throw std::invalid_argument(
                "fit_time_constant: fewer than 20 uncensored samples at distance " +
                std::to_string(dist));
        fit.points.push_back({dist, grp.stat.mean(), grp.stat.std_error(),
                              static_cast<std::uint32_t>(grp.stat.count()),
                              grp.censored});
    }

    const double m = static_cast<double>(fit.points.size());
    double x_bar = 0.0, y_bar = 0.0;
    for (const auto& pt : fit.points) {
        x_bar += pt.distance;
        y_bar += pt.mean_delay;
    }
    x_bar /= m;
    y_bar /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& pt : fit.points) {
        const double dx = pt.distance - x_bar;
        const double dy = pt.mean_delay - y_bar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("fit_time_constant: distances are not distinct");
    fit.mu_hat = sxy / sxx;
    fit.c_hat = y_bar - fit.mu_hat * x_bar;

    double ss_res = 0.0;
    double mu_var = 0.0, c_var = 0.0;
    for (const auto& pt : fit.points) {
        const double resid = pt.mean_delay - (fit.mu_hat * pt.distance + fit.c_hat);
        ss_res += resid * resid;
        const double w = (pt.distance - x_bar) / sxx;
        const double cw = 1.0 / m - x_bar * w;
        mu_var += w * w * pt.std_error * pt.std_error;
        c_var += cw * cw * pt.std_error * pt.std_error;
    }
    fit.mu_se = std::sqrt(mu_var);
    fit.c_se = std::sqrt(c_var);
    fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
    return fit;
}

} // namespace alohadyn

#endif
