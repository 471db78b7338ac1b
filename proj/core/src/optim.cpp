#include "demandcast/optim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "demandcast/error.hpp"

namespace demandcast::optim {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_finite(double e, std::size_t epoch) {
    if (!std::isfinite(e)) throw DivergenceError(fmt::format("training error became non-finite at epoch {}", epoch));
}

}  // namespace

void BpConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("BP learning rate must be >= 0");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("BP momentum must lie in [0, 1)");
}

void ScgConfig::validate() const {
    if (!(sigma > 0.0)) throw ConfigError("SCG sigma must be > 0");
    if (!(lambda > 0.0)) throw ConfigError("SCG lambda must be > 0");
    if (!(raise_factor > 1.0) || !(lower_factor > 0.0 && lower_factor < 1.0)) {
        throw ConfigError("SCG lambda factors must satisfy raise > 1 > lower > 0");
    }
}

std::vector<double> gradient_descent(const Objective& objective, std::span<double> w, const BpConfig& config) {
    config.validate();
    std::vector<double> trace;
    trace.reserve(config.epochs);
    if (config.epochs == 0) return trace;

    std::vector<double> grad(w.size());
    std::vector<double> step(w.size(), 0.0);
    double e = objective(w, grad);
    check_finite(e, 0);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            step[i] = -config.epsilon * grad[i] + config.alpha * step[i];
            w[i] += step[i];
        }
        // The gradient for the next epoch also yields E after this one; the
        // last epoch skips the unused gradient.
        e = epoch < config.epochs ? objective(w, grad) : objective(w, {});
        check_finite(e, epoch);
        trace.push_back(e);
    }
    return trace;
}

std::vector<double> scaled_hessian_product(const Objective& objective, std::span<const double> w,
                                           std::span<const double> grad, std::span<const double> p, double sigma,
                                           double lambda) {
    std::vector<double> shifted(w.begin(), w.end());
    for (std::size_t i = 0; i < w.size(); ++i) shifted[i] += sigma * p[i];
    std::vector<double> grad_shifted(w.size());
    objective(shifted, grad_shifted);
    std::vector<double> s(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) s[i] = (grad_shifted[i] - grad[i]) / sigma + lambda * p[i];
    return s;
}

std::vector<double> scaled_conjugate_gradient(const Objective& objective, std::span<double> w,
                                              const ScgConfig& config, const ScgObserver& observer) {
    config.validate();
    const std::size_t n = w.size();
    const std::size_t restart = config.restart_interval == 0 ? n : config.restart_interval;

    std::vector<double> trace;
    trace.reserve(config.epochs);
    if (config.epochs == 0 || n == 0) return trace;

    std::vector<double> grad(n);
    ScgState st;
    st.error = objective(w, grad);
    check_finite(st.error, 0);
    st.residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) st.residual[i] = -grad[i];
    st.direction = st.residual;
    st.lambda = config.lambda;

    std::vector<double> trial(n);
    std::vector<double> trial_grad(n);

    for (std::size_t k = 1; k <= config.epochs; ++k) {
        st.iteration = k;
        if (std::sqrt(dot(st.residual, st.residual)) <= config.gradient_tolerance) break;
        const double p2 = dot(st.direction, st.direction);
        if (!(p2 > 0.0)) break;

        if (st.success) {
            st.sigma = config.sigma / std::sqrt(p2);
            const auto s = scaled_hessian_product(objective, w, grad, st.direction, st.sigma, 0.0);
            st.delta = dot(st.direction, s);
        }
        st.delta += (st.lambda - st.lambda_bar) * p2;
        if (st.delta <= 0.0) {
            // Force a positive definite curvature estimate.
            st.lambda_bar = 2.0 * (st.lambda - st.delta / p2);
            st.delta = -st.delta + st.lambda * p2;
            st.lambda = st.lambda_bar;
        }

        const double mu = dot(st.direction, st.residual);
        const double alpha = mu / st.delta;
        for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + alpha * st.direction[i];
        const double trial_error = objective(trial, trial_grad);
        check_finite(trial_error, k);
        st.comparison = 2.0 * st.delta * (st.error - trial_error) / (mu * mu);

        const bool accepted = st.comparison >= 0.0;
        if (accepted) {
            std::copy(trial.begin(), trial.end(), w.begin());
            std::vector<double> r_new(n);
            for (std::size_t i = 0; i < n; ++i) r_new[i] = -trial_grad[i];
            if (k % restart == 0) {
                st.direction = r_new;
            } else {
                const double beta = (dot(r_new, r_new) - dot(r_new, st.residual)) / mu;
                for (std::size_t i = 0; i < n; ++i) st.direction[i] = r_new[i] + beta * st.direction[i];
            }
            st.residual = std::move(r_new);
            grad.swap(trial_grad);
            st.error = trial_error;
            st.lambda_bar = 0.0;
            st.success = true;
            if (st.comparison >= 0.75) st.lambda *= config.lower_factor;
        } else {
            st.lambda_bar = st.lambda;
            st.success = false;
        }
        if (st.comparison < 0.25) st.lambda = std::min(st.lambda * config.raise_factor, config.lambda_max);

        trace.push_back(st.error);
        if (observer) observer(st, accepted);
    }
    return trace;
}

}  // namespace demandcast::optim
