#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace demandcast::optim {

/// Error function over a flat parameter vector. Returns E(w); when `grad` is
/// non-empty it also receives dE/dw (same length as `w`).
using Objective = std::function<double(std::span<const double> w, std::span<double> grad)>;

struct BpConfig {
    double epsilon = 0.01;  ///< learning rate
    double alpha = 0.9;     ///< momentum
    std::size_t epochs = 2500;

    void validate() const;
};

/// Batched backpropagation with momentum:
///   dw(n) = -epsilon * dE/dw + alpha * dw(n-1),  w += dw(n)
/// once per epoch. Returns E after each epoch (length = epochs).
/// Throws DivergenceError naming the epoch when E becomes non-finite.
std::vector<double> gradient_descent(const Objective& objective, std::span<double> w, const BpConfig& config);

struct ScgConfig {
    std::size_t epochs = 2500;
    double sigma = 5e-5;         ///< base step for the second-derivative estimate
    double lambda = 5e-7;        ///< initial Hessian regulator
    double raise_factor = 4.0;   ///< lambda *= raise_factor when the quadratic model is poor
    double lower_factor = 0.25;  ///< lambda *= lower_factor when it is good
    double lambda_max = 1e50;
    std::size_t restart_interval = 0;  ///< 0 = number of parameters
    double gradient_tolerance = 0.0;   ///< stop once |E'(w)| <= tolerance

    void validate() const;
};

/// Optimizer scalars and direction vectors between iterations.
struct ScgState {
    double lambda = 0.0;
    double lambda_bar = 0.0;
    double sigma = 0.0;  ///< sigma_k used by the last second-order estimate
    double delta = 0.0;
    double error = 0.0;
    double comparison = 0.0;  ///< Delta_k, ratio of actual to predicted reduction
    std::vector<double> direction;
    std::vector<double> residual;  ///< -E'(w)
    bool success = true;
    std::size_t iteration = 0;
};

/// Called after every SCG iteration with the state and whether the step was accepted.
using ScgObserver = std::function<void(const ScgState& state, bool accepted)>;

/// Finite-difference curvature along p with the Levenberg-Marquardt shift:
///   s = (E'(w + sigma p) - E'(w)) / sigma + lambda p
/// `grad` must hold E'(w).
std::vector<double> scaled_hessian_product(const Objective& objective, std::span<const double> w,
                                           std::span<const double> grad, std::span<const double> p, double sigma,
                                           double lambda);

/// Scaled conjugate gradient; one iteration per epoch. Returns E
/// after each iteration. Stops early (shorter trace) if the gradient vanishes.
std::vector<double> scaled_conjugate_gradient(const Objective& objective, std::span<double> w,
                                              const ScgConfig& config, const ScgObserver& observer = {});

}  // namespace demandcast::optim
