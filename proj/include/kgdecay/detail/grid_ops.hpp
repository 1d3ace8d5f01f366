#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace kgdecay::detail {

inline constexpr double four_pi = 4.0 * std::numbers::pi;

/// Centered first difference of a half-line field. At r = 0 the field is
/// continued as an odd function (w(-dr) = -w(dr)); past the last node it is
/// mirrored (w(r_max + dr) = w(r_max - dr)), so the derivative there is 0.
inline std::vector<double> radial_derivative(std::span<const double> w, double dr) {
    const std::size_t n = w.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = w[1] / dr;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (w[i + 1] - w[i - 1]) / (2.0 * dr);
    return d;
}

/// Trapezoid integral of nodal samples f over [0, rho]; the last partial cell
/// uses linear interpolation of f. rho beyond the grid is clamped.
inline double integrate_to(std::span<const double> f, double dr, double rho) {
    const std::size_t n = f.size();
    if (n < 2 || rho <= 0.0) return 0.0;
    const double r_end = dr * static_cast<double>(n - 1);
    if (rho >= r_end) rho = r_end;
    const double x = rho / dr;
    auto full = static_cast<std::size_t>(std::floor(x + 1e-12));
    full = std::min(full, n - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < full; ++i) acc += 0.5 * (f[i] + f[i + 1]) * dr;
    const double frac = x - static_cast<double>(full);
    if (frac > 1e-12 && full + 1 < n) {
        const double f_end = f[full] + frac * (f[full + 1] - f[full]);
        acc += 0.5 * (f[full] + f_end) * frac * dr;
    }
    return acc;
}

inline double integrate(std::span<const double> f, double dr) {
    return integrate_to(f, dr, dr * static_cast<double>(f.size()));
}

/// Linear interpolation of nodal samples at radius r (clamped to the grid).
inline double sample(std::span<const double> f, double dr, double r) {
    const std::size_t n = f.size();
    if (r <= 0.0) return f[0];
    const double x = r / dr;
    auto j = static_cast<std::size_t>(std::floor(x));
    if (j >= n - 1) return f[n - 1];
    const double th = x - static_cast<double>(j);
    return (1.0 - th) * f[j] + th * f[j + 1];
}

/// Trapezoid rule over an irregular abscissa.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return acc;
}

/// C-infinity step: 1 for x <= 0, 0 for x >= 1.
inline double smooth_step_down(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return b / (a + b);
}

/// Standard bump exp(1 - 1/(1 - x^2)) on |x| < 1, peak value 1 at x = 0.
inline double bump(double x) {
    const double y = 1.0 - x * x;
    if (y <= 0.0) return 0.0;
    return std::exp(1.0 - 1.0 / y);
}

/// d/dx of bump(x).
inline double bump_derivative(double x) {
    const double y = 1.0 - x * x;
    if (y <= 0.0) return 0.0;
    return bump(x) * (-2.0 * x / (y * y));
}

}  // namespace kgdecay::detail
