#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace josh {

struct LowessOptions {
    double frac = 0.3;      // share of points in each local fit
    int iterations = 2;     // robustness passes after the first fit
};

namespace detail {

inline double tricube(double d) {
    if (d >= 1.0) return 0.0;
    const double t = 1.0 - d * d * d;
    return t * t * t;
}

inline double median(std::vector<double> v) {
    const auto n = v.size();
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Robust locally weighted linear regression (tricube distance weights,
/// bisquare robustness weights) evaluated at every x. x must be increasing.
inline std::vector<double> lowess(std::span<const double> x, std::span<const double> y, LowessOptions opt = {}) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("lowess: x and y differ in length");
    if (n < 2) throw std::invalid_argument("lowess: need at least two points");
    if (!(opt.frac > 0.0 && opt.frac <= 1.0)) throw std::invalid_argument("lowess: frac must be in (0, 1]");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("lowess: x must be strictly increasing");
    const auto k = static_cast<std::size_t>(opt.frac * static_cast<double>(n) + 1e-10);
    if (k < 2) return {y.begin(), y.end()};  // each point is its own neighbourhood

    std::vector<double> fit(n), robust(n, 1.0), w(n);
    for (int pass = 0; pass <= opt.iterations; ++pass) {
        std::size_t left = 0, right = k;  // window [left, right)
        for (std::size_t i = 0; i < n; ++i) {
            while (right < n && x[i] > 0.5 * (x[left] + x[right])) {
                ++left;
                ++right;
            }
            const double radius = std::max(x[i] - x[left], x[right - 1] - x[i]);
            double sw = 0.0, sx = 0.0;
            for (std::size_t j = left; j < right; ++j) {
                w[j] = detail::tricube(std::abs(x[j] - x[i]) / radius) * robust[j];
                sw += w[j];
                sx += w[j] * x[j];
            }
            if (sw <= 0.0) {
                fit[i] = y[i];
                continue;
            }
            const double xbar = sx / sw;
            double sxx = 0.0;
            for (std::size_t j = left; j < right; ++j) sxx += w[j] * (x[j] - xbar) * (x[j] - xbar);
            double yi = 0.0;
            for (std::size_t j = left; j < right; ++j) {
                double p = w[j] / sw;
                if (sxx > 0.0) p += w[j] * (x[i] - xbar) * (x[j] - xbar) / sxx;
                yi += p * y[j];
            }
            fit[i] = yi;
        }
        if (pass == opt.iterations) break;

        std::vector<double> resid(n);
        for (std::size_t i = 0; i < n; ++i) resid[i] = std::abs(y[i] - fit[i]);
        const double m = detail::median(resid);
        for (std::size_t i = 0; i < n; ++i) {
            if (m == 0.0) {
                robust[i] = resid[i] > 0.0 ? 0.0 : 1.0;
                continue;
            }
            const double u = std::min(resid[i] / (6.0 * m), 1.0);
            robust[i] = (1.0 - u * u) * (1.0 - u * u);
        }
    }
    return fit;
}

}  // namespace josh
