#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demandcast/arima.hpp"
#include "demandcast/dataset.hpp"
#include "demandcast/efunn.hpp"
#include "demandcast/mlp.hpp"

namespace demandcast::bench {

enum class ModelKind { efunn, mlp_bp, mlp_scg, arima };

const char* to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(const std::string& name);
inline const std::vector<ModelKind>& all_models() {
    static const std::vector<ModelKind> models = {ModelKind::efunn, ModelKind::mlp_bp, ModelKind::mlp_scg,
                                                  ModelKind::arima};
    return models;
}

/// Seasonal model fitted to lag-336 differenced demand.
arima::ArimaSpec default_arima_spec();

struct ExperimentConfig {
    /// CSV input; when absent a synthetic series is generated.
    std::optional<std::filesystem::path> data_path;
    std::size_t synth_days = 90;
    std::uint64_t data_seed = 1;
    dataset::SynthConfig synth;

    std::uint64_t seed = 42;
    double fraction = 0.2;
    std::size_t samples = 3;
    std::size_t horizon = 96;

    std::size_t membership_functions = 4;
    std::size_t output_membership_functions = 4;
    efunn::EfunnConfig efunn;

    std::vector<std::size_t> mlp_layers = {6, 40, 40, 1};
    optim::BpConfig bp;
    optim::ScgConfig scg;

    arima::ArimaSpec arima = default_arima_spec();

    std::vector<ModelKind> models = all_models();
    /// Independent trainings run concurrently on up to this many threads.
    std::size_t workers = 1;

    void validate() const;
};

/// Flat `key = value` experiment file. Keys prefixed `synth.` configure the
/// generator; unknown keys are rejected.
ExperimentConfig parse_experiment_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig read_experiment_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Records split into the training period and the trailing forecast window,
/// with normalization fitted on the training period.
struct PreparedData {
    std::vector<dataset::DemandRecord> records;
    std::size_t test_start = 0;
    /// Record indices eligible for training (lookback available, before the window).
    std::vector<std::size_t> pool;
    dataset::NormStats norm;
    /// Normalized vectors indexed by record index (entries below the lookback are unused).
    std::vector<dataset::FeatureVector> normalized;

    [[nodiscard]] std::size_t horizon() const noexcept { return records.size() - test_start; }
};

std::vector<dataset::DemandRecord> load_records(const ExperimentConfig& config);
PreparedData prepare(std::vector<dataset::DemandRecord> records, const ExperimentConfig& config);

/// Training record indices for every sample; throws std::logic_error if any
/// index falls inside the forecast window.
std::vector<std::vector<std::size_t>> draw_samples(const PreparedData& data, const ExperimentConfig& config);

struct SampleResult {
    std::optional<std::size_t> learning_epochs;
    std::optional<double> training_rmse;  ///< normalized scale
    double testing_rmse = 0.0;            ///< normalized scale
    std::uint64_t flops = 0;
    double wall_seconds = 0.0;
    std::optional<std::size_t> rule_nodes;
    std::vector<double> forecast;     ///< demand units
    std::vector<double> convergence;  ///< per-epoch training RMSE
};

struct ModelReport {
    ModelKind kind = ModelKind::efunn;
    std::vector<SampleResult> samples;

    [[nodiscard]] std::optional<double> worst_training_rmse() const;
    [[nodiscard]] double worst_testing_rmse() const;
    [[nodiscard]] std::uint64_t worst_flops() const;
};

struct BenchReport {
    std::vector<ModelReport> models;
    std::vector<dataset::Timestamp> forecast_times;
    std::vector<double> actual;  ///< demand units
    std::size_t training_examples = 0;
    std::size_t training_period = 0;
    std::optional<arima::Diagnostics> arima_diagnostics;
    std::optional<arima::ArimaFit> arima_fit;
    std::string arima_description;
    std::vector<std::string> notes;

    [[nodiscard]] const ModelReport* find(ModelKind kind) const;
};

/// Recursive multi-step forecast over the window: the previous-day demand
/// input comes from the data while it precedes the window and from the
/// model's own predictions afterwards. Returns normalized predictions.
template <typename Predict>
std::vector<double> forecast_window(const PreparedData& data, Predict&& predict_normalized);

/// Outcome of training one learned model on one sample.
struct EfunnRun {
    efunn::EfunnModel model;
    SampleResult result;
};
struct MlpRun {
    mlp::MlpModel model;
    SampleResult result;
};
struct ArimaRun {
    arima::ArimaFit fit;
    SampleResult result;
};

efunn::EfunnModel make_efunn(const ExperimentConfig& config);
EfunnRun run_efunn(const PreparedData& data, const std::vector<std::size_t>& sample, const ExperimentConfig& config);
MlpRun run_mlp(const PreparedData& data, const std::vector<std::size_t>& sample, const ExperimentConfig& config,
               ModelKind trainer, std::uint64_t init_seed);
ArimaRun run_arima(const PreparedData& data, const ExperimentConfig& config);

BenchReport run_experiment(const ExperimentConfig& config);

/// Writes report.csv, report.txt, forecast.csv, forecast.svg, convergence.csv
/// and timing.csv into `dir` (created if needed).
void emit_report(const BenchReport& report, const std::filesystem::path& dir);

std::string render_report_csv(const BenchReport& report);
std::string render_forecast_csv(const BenchReport& report);
std::string render_convergence_csv(const BenchReport& report);
std::string render_forecast_svg(const BenchReport& report);
std::string render_summary(const BenchReport& report);

template <typename Predict>
std::vector<double> forecast_window(const PreparedData& data, Predict&& predict_normalized) {
    const std::size_t horizon = data.horizon();
    std::vector<double> out(horizon);
    std::vector<double> demand(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        const std::size_t t = data.test_start + k;
        auto raw = dataset::encode_features(data.records, t);
        const std::size_t lag = t - dataset::kPeriodsPerDay;
        if (lag >= data.test_start) raw.x[dataset::Feature::prev_day_demand] = demand[lag - data.test_start];
        const auto v = dataset::apply_norm(raw, data.norm);
        out[k] = predict_normalized(std::span<const double>(v.x));
        demand[k] = data.norm.denormalize_target(out[k]);
    }
    return out;
}

}  // namespace demandcast::bench
