#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "demandcast/flops.hpp"
#include "demandcast/optim.hpp"

namespace demandcast::mlp {

/// Row-major design matrix with one target per row.
struct Batch {
    std::size_t input_width = 0;
    std::vector<double> x;
    std::vector<double> y;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return std::span<const double>(x).subspan(i * input_width, input_width);
    }
    void push_back(std::span<const double> features, double target);
};

/// Feedforward regression network: tanh hidden layers, linear scalar output.
///
/// Parameters live in one flat vector, layer by layer: the weight matrix of
/// layer l (layer_sizes[l+1] x layer_sizes[l], row-major) followed by its
/// bias vector. The optimizers work on that vector directly.
class MlpModel {
public:
    explicit MlpModel(std::vector<std::size_t> layer_sizes);

    [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    [[nodiscard]] std::size_t layer_count() const noexcept { return sizes_.size() - 1; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.size(); }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }

    [[nodiscard]] std::span<const double> weights(std::size_t layer) const;
    [[nodiscard]] std::span<double> weights(std::size_t layer);
    [[nodiscard]] std::span<const double> biases(std::size_t layer) const;
    [[nodiscard]] std::span<double> biases(std::size_t layer);

    /// Flops of one forward pass and of one forward+backward pass.
    [[nodiscard]] std::uint64_t forward_flops() const noexcept { return forward_flops_; }
    [[nodiscard]] std::uint64_t backward_flops() const noexcept { return backward_flops_; }

    friend bool operator==(const MlpModel& a, const MlpModel& b) {
        return a.sizes_ == b.sizes_ && a.params_ == b.params_;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> weight_offset_;
    std::vector<std::size_t> bias_offset_;
    std::vector<double> params_;
    std::uint64_t forward_flops_ = 0;
    std::uint64_t backward_flops_ = 0;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
MlpModel init_mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

double forward(const MlpModel& model, std::span<const double> x);
double forward(const MlpModel& model, std::span<const double> params, std::span<const double> x);

struct GradientResult {
    std::vector<double> gradient;
    double error = 0.0;  ///< mean squared error over the batch
};

/// Deterministic chunked evaluation: examples are split into fixed-size
/// chunks whose partial sums are reduced in chunk order, so the result is
/// bit-identical for any worker count.
struct EvalOptions {
    std::size_t workers = 1;
    std::size_t chunk_size = 256;
};

GradientResult gradient(const MlpModel& model, const Batch& batch, const EvalOptions& options = {},
                        FlopCounter* flops = nullptr);

/// Objective E(w) = mean squared error of `model`'s architecture evaluated at
/// parameters w. The model and batch must outlive the returned callable.
optim::Objective make_objective(const MlpModel& model, const Batch& batch, const EvalOptions& options = {},
                                FlopCounter* flops = nullptr);

using BpConfig = optim::BpConfig;
using ScgConfig = optim::ScgConfig;

/// Trains with batched momentum backpropagation. Returns training RMSE per epoch.
std::vector<double> bp_train(MlpModel& model, const Batch& data, const BpConfig& config,
                             FlopCounter* flops = nullptr, const EvalOptions& options = {});

/// Trains with scaled conjugate gradient. Returns training RMSE per iteration.
std::vector<double> scg_train(MlpModel& model, const Batch& data, const ScgConfig& config,
                              FlopCounter* flops = nullptr, const EvalOptions& options = {},
                              const optim::ScgObserver& observer = {});

double rmse(std::span<const double> predictions, std::span<const double> targets);

std::vector<double> predict_all(const MlpModel& model, const Batch& batch);

void write_snapshot(const MlpModel& model, std::ostream& out);
MlpModel read_mlp_snapshot(std::istream& in);

}  // namespace demandcast::mlp
