#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "demandcast/optim.hpp"

namespace testing_support {

/// E(w) = 1/2 w'Hw - b'w with a random symmetric positive definite H.
struct Quadratic {
    std::size_t n;
    std::vector<double> h;
    std::vector<double> b;

    Quadratic(std::size_t dim, std::uint64_t seed, double lo = 1.0, double hi = 10.0) : n(dim), h(dim * dim), b(dim) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        std::uniform_real_distribution<double> eig(lo, hi);
        // Random orthogonal basis by Gram-Schmidt.
        std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
        for (auto& v : q) {
            for (auto& x : v) x = g(rng);
        }
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                double d = 0.0;
                for (std::size_t k = 0; k < dim; ++k) d += q[i][k] * q[j][k];
                for (std::size_t k = 0; k < dim; ++k) q[i][k] -= d * q[j][k];
            }
            double len = 0.0;
            for (const double x : q[i]) len += x * x;
            len = std::sqrt(len);
            for (auto& x : q[i]) x /= len;
        }
        for (std::size_t e = 0; e < dim; ++e) {
            const double lambda = eig(rng);
            for (std::size_t i = 0; i < dim; ++i) {
                for (std::size_t j = 0; j < dim; ++j) h[i * dim + j] += lambda * q[e][i] * q[e][j];
            }
        }
        for (auto& x : b) x = g(rng);
    }

    demandcast::optim::Objective objective() const {
        return [this](std::span<const double> w, std::span<double> grad) {
            double e = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double hw = 0.0;
                for (std::size_t j = 0; j < n; ++j) hw += h[i * n + j] * w[j];
                e += 0.5 * w[i] * hw - b[i] * w[i];
                if (!grad.empty()) grad[i] = hw - b[i];
            }
            return e;
        };
    }
};

}  // namespace testing_support
