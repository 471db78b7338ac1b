#include "demandcast/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "demandcast/error.hpp"
#include "demandcast/text_format.hpp"

namespace demandcast::mlp {

void Batch::push_back(std::span<const double> features, double target) {
    if (input_width == 0 && y.empty()) input_width = features.size();
    if (features.size() != input_width) {
        throw ShapeError(fmt::format("batch row has {} features, expected {}", features.size(), input_width));
    }
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(target);
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ConfigError("an MLP needs at least an input and an output layer");
    for (std::size_t s : sizes_) {
        if (s == 0) throw ConfigError("MLP layer sizes must be >= 1");
    }
    if (sizes_.back() != 1) throw ConfigError("the MLP output layer must have exactly one unit");

    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const std::size_t in = sizes_[l];
        const std::size_t out = sizes_[l + 1];
        const bool hidden = l + 2 < sizes_.size();
        weight_offset_.push_back(offset);
        offset += out * in;
        bias_offset_.push_back(offset);
        offset += out;

        forward_flops_ += FlopCounter::kMac * out * in + out + (hidden ? FlopCounter::kTranscendental * out : 0);
        backward_flops_ += FlopCounter::kMac * out * in + out;
        if (l > 0) backward_flops_ += FlopCounter::kMac * out * in + 3 * in;
    }
    backward_flops_ += forward_flops_ + 4;
    params_.assign(offset, 0.0);
}

std::span<const double> MlpModel::weights(std::size_t layer) const {
    return std::span<const double>(params_).subspan(weight_offset_.at(layer), sizes_[layer + 1] * sizes_[layer]);
}
std::span<double> MlpModel::weights(std::size_t layer) {
    return std::span<double>(params_).subspan(weight_offset_.at(layer), sizes_[layer + 1] * sizes_[layer]);
}
std::span<const double> MlpModel::biases(std::size_t layer) const {
    return std::span<const double>(params_).subspan(bias_offset_.at(layer), sizes_[layer + 1]);
}
std::span<double> MlpModel::biases(std::size_t layer) {
    return std::span<double>(params_).subspan(bias_offset_.at(layer), sizes_[layer + 1]);
}

MlpModel init_mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
    MlpModel model(std::move(layer_sizes));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(model.layer_sizes()[l]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : model.weights(l)) w = dist(rng);
    }
    return model;
}

namespace {

/// Scratch activations for one example; a[l] holds layer l's outputs.
struct Workspace {
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> delta;

    explicit Workspace(const std::vector<std::size_t>& sizes) {
        for (std::size_t s : sizes) {
            a.emplace_back(s, 0.0);
            delta.emplace_back(s, 0.0);
        }
    }
};

struct Layout {
    const std::vector<std::size_t>& sizes;
    std::vector<std::size_t> w_off;
    std::vector<std::size_t> b_off;

    explicit Layout(const std::vector<std::size_t>& s) : sizes(s) {
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < s.size(); ++l) {
            w_off.push_back(offset);
            offset += s[l] * s[l + 1];
            b_off.push_back(offset);
            offset += s[l + 1];
        }
    }
    [[nodiscard]] std::size_t parameter_count() const { return b_off.back() + sizes.back(); }
};

double run_forward(const Layout& layout, std::span<const double> params, std::span<const double> x,
                   Workspace& ws) {
    const auto& sizes = layout.sizes;
    std::copy(x.begin(), x.end(), ws.a[0].begin());
    const std::size_t layers = sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const double* w = params.data() + layout.w_off[l];
        const double* b = params.data() + layout.b_off[l];
        const auto& prev = ws.a[l];
        auto& next = ws.a[l + 1];
        const bool hidden = l + 1 < layers;
        for (std::size_t o = 0; o < out; ++o) {
            double z = b[o];
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) z += row[i] * prev[i];
            next[o] = hidden ? std::tanh(z) : z;
        }
    }
    return ws.a.back()[0];
}

/// Adds d(0.5 * residual^2)/dparams scaled by `scale` into grad.
void run_backward(const Layout& layout, std::span<const double> params, double scale, Workspace& ws,
                  std::span<double> grad) {
    const auto& sizes = layout.sizes;
    const std::size_t layers = sizes.size() - 1;
    ws.delta[layers][0] = scale;
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const auto& d = ws.delta[l + 1];
        const auto& prev = ws.a[l];
        double* gw = grad.data() + layout.w_off[l];
        double* gb = grad.data() + layout.b_off[l];
        for (std::size_t o = 0; o < out; ++o) {
            double* row = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += d[o] * prev[i];
            gb[o] += d[o];
        }
        if (l == 0) break;
        const double* w = params.data() + layout.w_off[l];
        auto& dprev = ws.delta[l];
        std::fill(dprev.begin(), dprev.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) dprev[i] += row[i] * d[o];
        }
        for (std::size_t i = 0; i < in; ++i) dprev[i] *= 1.0 - prev[i] * prev[i];
    }
}

void check_batch(const MlpModel& model, const Batch& batch) {
    if (batch.size() == 0) throw DataError("empty training batch");
    if (batch.input_width != model.layer_sizes().front()) {
        throw ShapeError(fmt::format("batch has {} features, network expects {}", batch.input_width,
                                     model.layer_sizes().front()));
    }
}

template <typename ChunkFn>
void for_each_chunk(std::size_t chunks, std::size_t workers, ChunkFn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, chunks));
    if (workers == 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < chunks; c += workers) fn(c);
        });
    }
}

/// Sum of squared errors and (optionally) its gradient halves, chunk-reduced.
double evaluate(const MlpModel& model, std::span<const double> params, const Batch& batch,
                const EvalOptions& options, std::span<double> grad, FlopCounter* flops) {
    const Layout layout(model.layer_sizes());
    const std::size_t n = batch.size();
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    const bool want_grad = !grad.empty();
    const std::size_t p = layout.parameter_count();

    std::vector<double> chunk_sse(chunks, 0.0);
    std::vector<std::vector<double>> chunk_grad(want_grad ? chunks : 0);

    for_each_chunk(chunks, options.workers, [&](std::size_t c) {
        Workspace ws(model.layer_sizes());
        std::vector<double> g;
        if (want_grad) g.assign(p, 0.0);
        double sse = 0.0;
        const std::size_t end = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            const double residual = run_forward(layout, params, batch.row(i), ws) - batch.y[i];
            sse += residual * residual;
            if (want_grad) run_backward(layout, params, residual, ws, g);
        }
        chunk_sse[c] = sse;
        if (want_grad) chunk_grad[c] = std::move(g);
    });

    double sse = 0.0;
    for (double s : chunk_sse) sse += s;
    if (want_grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (const auto& g : chunk_grad) {
            for (std::size_t k = 0; k < p; ++k) grad[k] += g[k];
        }
        const double scale = 2.0 / static_cast<double>(n);
        for (double& v : grad) v *= scale;
    }
    count(flops, n * (want_grad ? model.backward_flops() : model.forward_flops() + 3) +
                     (want_grad ? chunks * p + p : 0));
    return sse / static_cast<double>(n);
}

}  // namespace

double forward(const MlpModel& model, std::span<const double> params, std::span<const double> x) {
    if (x.size() != model.layer_sizes().front()) {
        throw ShapeError(fmt::format("input has {} values, network expects {}", x.size(), model.layer_sizes().front()));
    }
    if (params.size() != model.parameter_count()) throw ShapeError("parameter vector does not match the network");
    const Layout layout(model.layer_sizes());
    Workspace ws(model.layer_sizes());
    return run_forward(layout, params, x, ws);
}

double forward(const MlpModel& model, std::span<const double> x) { return forward(model, model.parameters(), x); }

GradientResult gradient(const MlpModel& model, const Batch& batch, const EvalOptions& options, FlopCounter* flops) {
    check_batch(model, batch);
    GradientResult result;
    result.gradient.assign(model.parameter_count(), 0.0);
    result.error = evaluate(model, model.parameters(), batch, options, result.gradient, flops);
    return result;
}

optim::Objective make_objective(const MlpModel& model, const Batch& batch, const EvalOptions& options,
                                FlopCounter* flops) {
    check_batch(model, batch);
    return [&model, &batch, options, flops](std::span<const double> w, std::span<double> grad) {
        return evaluate(model, w, batch, options, grad, flops);
    };
}

namespace {

std::vector<double> to_rmse(std::vector<double> mse) {
    for (double& v : mse) v = std::sqrt(v);
    return mse;
}

void check_finite_parameters(const MlpModel& model) {
    for (double v : model.parameters()) {
        if (!std::isfinite(v)) throw DivergenceError("network parameters became non-finite");
    }
}

}  // namespace

std::vector<double> bp_train(MlpModel& model, const Batch& data, const BpConfig& config, FlopCounter* flops,
                             const EvalOptions& options) {
    auto objective = make_objective(model, data, options, flops);
    std::vector<double> w(model.parameters().begin(), model.parameters().end());
    auto trace = optim::gradient_descent(objective, w, config);
    std::copy(w.begin(), w.end(), model.parameters().begin());
    count(flops, 3 * w.size() * config.epochs);
    check_finite_parameters(model);
    return to_rmse(std::move(trace));
}

std::vector<double> scg_train(MlpModel& model, const Batch& data, const ScgConfig& config, FlopCounter* flops,
                              const EvalOptions& options, const optim::ScgObserver& observer) {
    if (config.epochs < 1) throw ConfigError("SCG needs at least one epoch");
    auto objective = make_objective(model, data, options, flops);
    std::vector<double> w(model.parameters().begin(), model.parameters().end());
    auto trace = optim::scaled_conjugate_gradient(objective, w, config, observer);
    std::copy(w.begin(), w.end(), model.parameters().begin());
    // Vector algebra per iteration: about eight length-P passes.
    count(flops, 16 * w.size() * trace.size());
    check_finite_parameters(model);
    return to_rmse(std::move(trace));
}

double rmse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || predictions.empty()) {
        throw DataError(fmt::format("rmse needs equal non-empty lengths, got {} and {}", predictions.size(),
                                    targets.size()));
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sse += d * d;
    }
    return std::sqrt(sse / static_cast<double>(predictions.size()));
}

std::vector<double> predict_all(const MlpModel& model, const Batch& batch) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) out.push_back(forward(model, batch.row(i)));
    return out;
}

void write_snapshot(const MlpModel& model, std::ostream& out) {
    text::Writer w(out);
    w.header("demandcast-mlp", 1);
    std::string sizes;
    for (std::size_t s : model.layer_sizes()) sizes += (sizes.empty() ? "" : " ") + std::to_string(s);
    w.line("layers", sizes);
    w.line("hidden", "tanh");
    w.line("output", "linear");
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const std::size_t in = model.layer_sizes()[l];
        const std::size_t rows = model.layer_sizes()[l + 1];
        w.line("weights", fmt::format("{} {} {}", l, rows, in));
        const auto weights = model.weights(l);
        for (std::size_t r = 0; r < rows; ++r) w.line_reals("row", weights.subspan(r * in, in));
        w.line_reals("bias", model.biases(l));
    }
    w.line("end", "mlp");
}

MlpModel read_mlp_snapshot(std::istream& in) {
    text::Reader r(in);
    if (const int v = r.header("demandcast-mlp"); v != 1) {
        throw ParseError(fmt::format("unsupported MLP snapshot version {}", v));
    }
    std::vector<std::size_t> sizes;
    for (const auto& t : r.expect("layers")) sizes.push_back(static_cast<std::size_t>(text::parse_integer(t)));
    if (r.expect_word("hidden") != "tanh") throw ParseError("only tanh hidden layers are supported");
    if (r.expect_word("output") != "linear") throw ParseError("only linear output layers are supported");
    MlpModel model(sizes);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const auto head = r.expect("weights");
        const std::size_t in = sizes[l];
        const std::size_t rows = sizes[l + 1];
        if (head.size() != 3 || text::parse_integer(head[0]) != static_cast<long long>(l) ||
            text::parse_integer(head[1]) != static_cast<long long>(rows) ||
            text::parse_integer(head[2]) != static_cast<long long>(in)) {
            throw ParseError(fmt::format("bad weights header for layer {}", l));
        }
        auto weights = model.weights(l);
        for (std::size_t row = 0; row < rows; ++row) {
            const auto values = r.expect_reals("row", in);
            std::copy(values.begin(), values.end(), weights.begin() + static_cast<std::ptrdiff_t>(row * in));
        }
        const auto bias = r.expect_reals("bias", rows);
        std::copy(bias.begin(), bias.end(), model.biases(l).begin());
    }
    r.expect("end");
    return model;
}

}  // namespace demandcast::mlp
