#include "demandcast/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "demandcast/error.hpp"
#include "demandcast/text_format.hpp"

namespace demandcast::bench {

namespace {

std::string strip(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(strip(item));
    return out;
}

std::size_t to_size(const std::string& value) {
    const auto v = text::parse_integer(value);
    if (v < 0) throw ConfigError(fmt::format("expected a non-negative integer, got '{}'", value));
    return static_cast<std::size_t>(v);
}

std::vector<std::size_t> to_sizes(const std::string& value) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(value)) out.push_back(to_size(item));
    return out;
}

bool to_bool(const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError(fmt::format("expected true or false, got '{}'", value));
}

std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<double> test_targets(const PreparedData& data) {
    std::vector<double> y;
    for (std::size_t t = data.test_start; t < data.records.size(); ++t) y.push_back(data.normalized[t].y);
    return y;
}

std::vector<double> to_demand(const PreparedData& data, std::span<const double> normalized) {
    std::vector<double> out;
    out.reserve(normalized.size());
    for (const double v : normalized) out.push_back(data.norm.denormalize_target(v));
    return out;
}

/// Runs every task on up to `workers` threads and rethrows the first failure
/// in task order.
void run_tasks(std::vector<std::function<void()>>& tasks, std::size_t workers) {
    std::vector<std::exception_ptr> errors(tasks.size());
    auto run = [&](std::size_t i) {
        try {
            tasks[i]();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (workers <= 1 || tasks.size() <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, tasks.size()); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) run(i);
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

const char* to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::efunn: return "efunn";
        case ModelKind::mlp_bp: return "mlp-bp";
        case ModelKind::mlp_scg: return "mlp-scg";
        case ModelKind::arima: return "arima";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    for (const auto kind : all_models()) {
        if (name == to_string(kind)) return kind;
    }
    throw ConfigError(fmt::format("unknown model '{}' (expected efunn, mlp-bp, mlp-scg or arima)", name));
}

arima::ArimaSpec default_arima_spec() {
    arima::ArimaSpec s;
    s.p = 1;
    s.d = 1;
    s.q = 1;
    s.sp = 1;
    s.sd = 0;
    s.sq = 1;
    s.season = dataset::kPeriodsPerDay;
    s.pre_diff_lag = 7 * dataset::kPeriodsPerDay;
    s.intercept = false;
    return s;
}

void ExperimentConfig::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError(fmt::format("fraction {} outside (0, 1]", fraction));
    if (samples == 0) throw ConfigError("at least one training sample is required");
    if (horizon == 0) throw ConfigError("forecast horizon must be positive");
    if (membership_functions < 2 || output_membership_functions < 2) {
        throw ConfigError("each variable needs at least 2 membership functions");
    }
    if (mlp_layers.size() < 2 || mlp_layers.front() != dataset::kFeatureCount || mlp_layers.back() != 1) {
        throw ConfigError(fmt::format("network layers must start with {} inputs and end with 1 output",
                                      dataset::kFeatureCount));
    }
    if (models.empty()) throw ConfigError("no models selected");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (!data_path && synth_days < 2) throw ConfigError("synthetic series needs at least 2 days");
    efunn.validate();
    bp.validate();
    scg.validate();
    arima.validate();
}

ExperimentConfig parse_experiment_config(std::istream& in, ExperimentConfig c) {
    std::string synth_lines;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(fmt::format("config line {}: expected key = value", line_no));
        const auto key = strip(line.substr(0, eq));
        const auto v = strip(line.substr(eq + 1));
        try {
            if (key.starts_with("synth.")) {
                synth_lines += key.substr(6) + " = " + v + "\n";
            } else if (key == "data") {
                c.data_path = v;
            } else if (key == "days") {
                c.synth_days = to_size(v);
            } else if (key == "data_seed") {
                c.data_seed = static_cast<std::uint64_t>(to_size(v));
            } else if (key == "seed") {
                c.seed = static_cast<std::uint64_t>(to_size(v));
            } else if (key == "fraction") {
                c.fraction = text::parse_real(v);
            } else if (key == "samples") {
                c.samples = to_size(v);
            } else if (key == "horizon") {
                c.horizon = to_size(v);
            } else if (key == "workers") {
                c.workers = to_size(v);
            } else if (key == "models") {
                c.models.clear();
                for (const auto& m : split_list(v)) c.models.push_back(model_kind_from_string(m));
            } else if (key == "epochs") {
                c.bp.epochs = c.scg.epochs = to_size(v);
            } else if (key == "efunn.mf") {
                c.membership_functions = to_size(v);
            } else if (key == "efunn.output_mf") {
                c.output_membership_functions = to_size(v);
            } else if (key == "efunn.sthr") {
                c.efunn.sthr = text::parse_real(v);
            } else if (key == "efunn.errthr") {
                c.efunn.errthr = text::parse_real(v);
            } else if (key == "efunn.lr1") {
                c.efunn.lr1 = text::parse_real(v);
            } else if (key == "efunn.lr2") {
                c.efunn.lr2 = text::parse_real(v);
            } else if (key == "efunn.lr3") {
                c.efunn.lr3 = text::parse_real(v);
            } else if (key == "efunn.ss") {
                c.efunn.ss = text::parse_real(v);
            } else if (key == "efunn.tc") {
                c.efunn.tc = text::parse_real(v);
            } else if (key == "efunn.max_nodes") {
                c.efunn.max_nodes = to_size(v);
            } else if (key == "efunn.mode") {
                if (v == "winner_take_all") c.efunn.m_mode = efunn::SelectionMode::winner_take_all;
                else if (v == "all_above_threshold") c.efunn.m_mode = efunn::SelectionMode::all_above_threshold;
                else throw ConfigError(fmt::format("unknown selection mode '{}'", v));
            } else if (key == "efunn.activation") {
                if (v == "satlin") c.efunn.activation = efunn::Activation::satlin;
                else if (v == "radbas") c.efunn.activation = efunn::Activation::radbas;
                else throw ConfigError(fmt::format("unknown activation '{}'", v));
            } else if (key == "efunn.pruning") {
                if (v == "off") {
                    c.efunn.pruning.reset();
                } else {
                    const auto f = split_list(v);
                    if (f.size() != 4) throw ConfigError("efunn.pruning needs old_age, low, radius, interval");
                    c.efunn.pruning = efunn::PruningConfig{to_size(f[0]), text::parse_real(f[1]),
                                                           text::parse_real(f[2]), to_size(f[3])};
                }
            } else if (key == "efunn.aggregation") {
                if (v == "off") {
                    c.efunn.aggregation.reset();
                } else {
                    const auto f = split_list(v);
                    if (f.size() != 3) throw ConfigError("efunn.aggregation needs thr1, thr2, interval");
                    c.efunn.aggregation =
                        efunn::AggregationConfig{text::parse_real(f[0]), text::parse_real(f[1]), to_size(f[2])};
                }
            } else if (key == "mlp.layers") {
                c.mlp_layers = to_sizes(v);
            } else if (key == "bp.epsilon") {
                c.bp.epsilon = text::parse_real(v);
            } else if (key == "bp.alpha") {
                c.bp.alpha = text::parse_real(v);
            } else if (key == "bp.epochs") {
                c.bp.epochs = to_size(v);
            } else if (key == "scg.epochs") {
                c.scg.epochs = to_size(v);
            } else if (key == "scg.sigma") {
                c.scg.sigma = text::parse_real(v);
            } else if (key == "scg.lambda") {
                c.scg.lambda = text::parse_real(v);
            } else if (key == "arima.order") {
                const auto f = to_sizes(v);
                if (f.size() != 3) throw ConfigError("arima.order needs p, d, q");
                c.arima.p = f[0];
                c.arima.d = f[1];
                c.arima.q = f[2];
            } else if (key == "arima.seasonal") {
                const auto f = to_sizes(v);
                if (f.size() != 4) throw ConfigError("arima.seasonal needs P, D, Q, period");
                c.arima.sp = f[0];
                c.arima.sd = f[1];
                c.arima.sq = f[2];
                c.arima.season = f[3];
            } else if (key == "arima.pre_diff_lag") {
                c.arima.pre_diff_lag = to_size(v);
            } else if (key == "arima.intercept") {
                c.arima.intercept = to_bool(v);
            } else {
                throw ConfigError(fmt::format("unknown key '{}'", key));
            }
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("config line {}: {}", line_no, e.what()));
        } catch (const ParseError& e) {
            throw ConfigError(fmt::format("config line {}: {}", line_no, e.what()));
        }
    }
    if (!synth_lines.empty()) {
        std::istringstream synth(synth_lines);
        c.synth = dataset::parse_synth_config(synth);
    }
    return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return parse_experiment_config(in, std::move(base));
}

std::vector<dataset::DemandRecord> load_records(const ExperimentConfig& config) {
    if (config.data_path) return dataset::read_csv(*config.data_path);
    return dataset::synthesize(config.synth_days, config.data_seed, config.synth);
}

PreparedData prepare(std::vector<dataset::DemandRecord> records, const ExperimentConfig& config) {
    const std::size_t lookback = dataset::kPeriodsPerDay;
    const std::size_t needed = config.arima.pre_diff_lag + config.horizon + lookback;
    if (records.size() < needed) {
        throw DataError(fmt::format("series has {} periods; at least {} are needed ({} differencing + {} forecast + "
                                    "{} lookback)",
                                    records.size(), needed, config.arima.pre_diff_lag, config.horizon, lookback));
    }
    PreparedData d;
    d.records = std::move(records);
    d.test_start = d.records.size() - config.horizon;

    std::vector<dataset::FeatureVector> raw(d.records.size());
    std::vector<dataset::FeatureVector> pool_raw;
    for (std::size_t t = lookback; t < d.records.size(); ++t) {
        raw[t] = dataset::encode_features(d.records, t);
        if (t < d.test_start) {
            d.pool.push_back(t);
            pool_raw.push_back(raw[t]);
        }
    }
    d.norm = dataset::fit_norm(pool_raw);
    d.normalized.resize(d.records.size());
    for (std::size_t t = lookback; t < d.records.size(); ++t) d.normalized[t] = dataset::apply_norm(raw[t], d.norm);
    return d;
}

std::vector<std::vector<std::size_t>> draw_samples(const PreparedData& data, const ExperimentConfig& config) {
    auto samples = dataset::sample_training(data.pool.size(), config.fraction, config.seed, config.samples);
    for (auto& sample : samples) {
        for (auto& i : sample) {
            i = data.pool[i];
            if (i >= data.test_start || i < dataset::kPeriodsPerDay) {
                throw std::logic_error(fmt::format("training index {} overlaps the forecast window at {}", i,
                                                   data.test_start));
            }
        }
    }
    return samples;
}

std::optional<double> ModelReport::worst_training_rmse() const {
    std::optional<double> worst;
    for (const auto& s : samples) {
        if (s.training_rmse && (!worst || *s.training_rmse > *worst)) worst = s.training_rmse;
    }
    return worst;
}

double ModelReport::worst_testing_rmse() const {
    double worst = 0.0;
    for (const auto& s : samples) worst = std::max(worst, s.testing_rmse);
    return worst;
}

std::uint64_t ModelReport::worst_flops() const {
    std::uint64_t worst = 0;
    for (const auto& s : samples) worst = std::max(worst, s.flops);
    return worst;
}

const ModelReport* BenchReport::find(ModelKind kind) const {
    for (const auto& m : models) {
        if (m.kind == kind) return &m;
    }
    return nullptr;
}

efunn::EfunnModel make_efunn(const ExperimentConfig& config) {
    std::vector<fuzzy::MembershipPartition> inputs;
    for (std::size_t i = 0; i < dataset::kFeatureCount; ++i) {
        inputs.push_back(fuzzy::build_partition(0.0, 1.0, config.membership_functions, fuzzy::MfKind::gaussian,
                                                dataset::feature_names()[i]));
    }
    auto output = fuzzy::build_partition(0.0, 1.0, config.output_membership_functions, fuzzy::MfKind::gaussian,
                                         dataset::kTargetName);
    return efunn::EfunnModel(config.efunn, std::move(inputs), std::move(output));
}

EfunnRun run_efunn(const PreparedData& data, const std::vector<std::size_t>& sample, const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    auto model = make_efunn(config);
    for (const auto t : sample) model.learn_one(data.normalized[t].x, data.normalized[t].y);
    if (model.examples_seen() != sample.size()) throw std::logic_error("one-pass learning skipped an example");

    SampleResult r;
    r.learning_epochs = 1;
    r.flops = model.flops().total();
    r.rule_nodes = model.node_count();

    std::vector<double> fitted, targets;
    for (const auto t : sample) {
        fitted.push_back(model.predict(data.normalized[t].x));
        targets.push_back(data.normalized[t].y);
    }
    r.training_rmse = mlp::rmse(fitted, targets);

    const auto predicted = forecast_window(data, [&](std::span<const double> x) { return model.predict(x); });
    r.testing_rmse = mlp::rmse(predicted, test_targets(data));
    r.forecast = to_demand(data, predicted);
    r.wall_seconds = seconds_since(start);
    return {std::move(model), std::move(r)};
}

MlpRun run_mlp(const PreparedData& data, const std::vector<std::size_t>& sample, const ExperimentConfig& config,
               ModelKind trainer, std::uint64_t init_seed) {
    if (trainer != ModelKind::mlp_bp && trainer != ModelKind::mlp_scg) {
        throw ConfigError(fmt::format("'{}' is not a network trainer", to_string(trainer)));
    }
    const auto start = std::chrono::steady_clock::now();
    mlp::Batch batch;
    batch.input_width = dataset::kFeatureCount;
    for (const auto t : sample) batch.push_back(data.normalized[t].x, data.normalized[t].y);

    auto model = mlp::init_mlp(config.mlp_layers, init_seed);
    FlopCounter flops;
    SampleResult r;
    r.convergence = trainer == ModelKind::mlp_bp ? mlp::bp_train(model, batch, config.bp, &flops)
                                                 : mlp::scg_train(model, batch, config.scg, &flops);
    r.learning_epochs = r.convergence.size();
    r.flops = flops.total();
    r.training_rmse = mlp::rmse(mlp::predict_all(model, batch), batch.y);

    const auto predicted =
        forecast_window(data, [&](std::span<const double> x) { return mlp::forward(model, x); });
    r.testing_rmse = mlp::rmse(predicted, test_targets(data));
    r.forecast = to_demand(data, predicted);
    r.wall_seconds = seconds_since(start);
    return {std::move(model), std::move(r)};
}

ArimaRun run_arima(const PreparedData& data, const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> series;
    series.reserve(data.test_start);
    for (std::size_t t = 0; t < data.test_start; ++t) series.push_back(data.records[t].demand);

    FlopCounter flops;
    arima::ArimaFit fitted = arima::fit(series, config.arima, {}, &flops);

    SampleResult r;
    r.flops = flops.total();
    // One-step in-sample errors equal the innovations in every differencing stage.
    r.training_rmse = std::sqrt(fitted.sigma2) / (data.norm.y_max - data.norm.y_min);
    r.forecast = arima::forecast(fitted, data.horizon());
    std::vector<double> predicted;
    for (const double f : r.forecast) predicted.push_back(data.norm.normalize_target(f));
    r.testing_rmse = mlp::rmse(predicted, test_targets(data));
    r.wall_seconds = seconds_since(start);
    return {std::move(fitted), std::move(r)};
}

BenchReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const PreparedData data = prepare(load_records(config), config);
    const auto samples = draw_samples(data, config);

    BenchReport report;
    report.training_period = data.test_start;
    report.training_examples = samples.front().size();
    for (std::size_t t = data.test_start; t < data.records.size(); ++t) {
        report.forecast_times.push_back(data.records[t].timestamp);
        report.actual.push_back(data.records[t].demand);
    }

    const auto has = [&](ModelKind k) { return std::ranges::find(config.models, k) != config.models.end(); };
    const std::size_t n = samples.size();
    std::vector<SampleResult> efunn_results(n), bp_results(n), scg_results(n);
    std::optional<ArimaRun> arima_run;

    std::vector<std::function<void()>> tasks;
    for (std::size_t s = 0; s < n; ++s) {
        // Both trainers of a sample start from the same initial weights.
        const std::uint64_t init_seed = mix(config.seed ^ mix(s + 1));
        if (has(ModelKind::efunn)) {
            tasks.emplace_back([&, s] { efunn_results[s] = run_efunn(data, samples[s], config).result; });
        }
        if (has(ModelKind::mlp_bp)) {
            tasks.emplace_back([&, s, init_seed] {
                bp_results[s] = run_mlp(data, samples[s], config, ModelKind::mlp_bp, init_seed).result;
            });
        }
        if (has(ModelKind::mlp_scg)) {
            tasks.emplace_back([&, s, init_seed] {
                scg_results[s] = run_mlp(data, samples[s], config, ModelKind::mlp_scg, init_seed).result;
            });
        }
    }
    if (has(ModelKind::arima)) tasks.emplace_back([&] { arima_run = run_arima(data, config); });
    run_tasks(tasks, config.workers);

    for (const auto kind : all_models()) {
        if (!has(kind)) continue;
        ModelReport m;
        m.kind = kind;
        switch (kind) {
            case ModelKind::efunn: m.samples = efunn_results; break;
            case ModelKind::mlp_bp: m.samples = bp_results; break;
            case ModelKind::mlp_scg: m.samples = scg_results; break;
            case ModelKind::arima: m.samples.assign(n, arima_run->result); break;
        }
        report.models.push_back(std::move(m));
    }
    if (arima_run) {
        report.arima_diagnostics = arima::diagnostics(arima_run->fit);
        report.arima_description = config.arima.describe();
        report.arima_fit = std::move(arima_run->fit);
    }

    report.notes = {
        "RMSE columns are on the normalized [0, 1] target scale (min-max over the training period).",
        fmt::format("Headline RMSE and flops columns are the worst (maximum) over {} training samples of {:.0f}% "
                    "of the training period; per-sample values follow.",
                    n, 100.0 * config.fraction),
        "Forecasts are recursive over the window: the previous-day demand input is the observed demand while "
        "its lag-48 lookback precedes the window and the model's own prediction afterwards.",
        "Forecast traces are in demand units and come from the sample with the worst testing RMSE.",
        "ARIMA is fitted once on the full contiguous training series (differencing needs contiguity), not on the "
        "samples; its per-sample entries repeat that fit. Its training RMSE is the one-step in-sample error.",
        "ARIMA MA sign convention: w_t = ... + e_t + theta_1 e_{t-1} + ... (MA terms enter with positive signs).",
    };
    return report;
}

}  // namespace demandcast::bench
