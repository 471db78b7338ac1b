#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace testing_support {

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

/// Central differences of f at w with step h.
inline std::vector<double> central_gradient(const ScalarFn& f, std::span<const double> w, double h = 1e-6) {
    std::vector<double> g(w.size());
    std::vector<double> probe(w.begin(), w.end());
    for (std::size_t i = 0; i < w.size(); ++i) {
        probe[i] = w[i] + h;
        const double up = f(probe);
        probe[i] = w[i] - h;
        const double down = f(probe);
        probe[i] = w[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Hessian-vector product by Richardson-extrapolated central differences of
/// the gradient; truncation error O(h^4).
inline std::vector<double> hessian_vector(const VectorFn& grad, std::span<const double> w, std::span<const double> p,
                                          double h = 1e-2) {
    const auto central = [&](double step) {
        std::vector<double> up(w.begin(), w.end()), down(w.begin(), w.end());
        for (std::size_t i = 0; i < w.size(); ++i) {
            up[i] += step * p[i];
            down[i] -= step * p[i];
        }
        const auto gu = grad(up);
        const auto gd = grad(down);
        std::vector<double> d(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) d[i] = (gu[i] - gd[i]) / (2.0 * step);
        return d;
    };
    const auto coarse = central(h);
    const auto fine = central(h / 2.0);
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    return out;
}

inline double norm(std::span<const double> v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// max_i |a_i - b_i| relative to the largest component of b.
inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    return diff / std::max(max_abs(b), 1e-300);
}

}  // namespace testing_support
