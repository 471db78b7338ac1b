#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace testing_support {

using LagTerms = std::vector<std::pair<std::size_t, double>>;

/// y_t = sum ar[k] y_{t-k} + e_t + sum ma[k] e_{t-k}, e_t ~ N(0, sigma^2),
/// after discarding `burn` warm-up values.
inline std::vector<double> simulate_arma(const LagTerms& ar, const LagTerms& ma, std::size_t n, std::uint64_t seed,
                                         double sigma = 1.0, std::size_t burn = 2000) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    const std::size_t total = n + burn;
    std::vector<double> y(total, 0.0), e(total, 0.0);
    for (std::size_t t = 0; t < total; ++t) {
        e[t] = noise(rng);
        double v = e[t];
        for (const auto& [lag, c] : ar) {
            if (t >= lag) v += c * y[t - lag];
        }
        for (const auto& [lag, c] : ma) {
            if (t >= lag) v += c * e[t - lag];
        }
        y[t] = v;
    }
    return {y.begin() + static_cast<std::ptrdiff_t>(burn), y.end()};
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    return simulate_arma({}, {}, n, seed, sigma, 0);
}

/// Cumulative sum, i.e. the inverse of one lag-1 difference starting at `start`.
inline std::vector<double> integrate(const std::vector<double>& z, double start = 0.0) {
    std::vector<double> y;
    double level = start;
    for (const double v : z) {
        level += v;
        y.push_back(level);
    }
    return y;
}

}  // namespace testing_support
