// demandcast: synthetic data, training, forecasting, benchmarking and rule
// listing for the half-hourly demand models.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "demandcast/arima.hpp"
#include "demandcast/bench.hpp"
#include "demandcast/dataset.hpp"
#include "demandcast/efunn.hpp"
#include "demandcast/error.hpp"
#include "demandcast/mlp.hpp"
#include "demandcast/text_format.hpp"

namespace fs = std::filesystem;
using namespace demandcast;

namespace {

struct Options {
    std::string data;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> data_seed;
    std::optional<std::size_t> days;
    std::string config;
    std::string out;
    std::string model;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> workers;
    std::string snapshot;
    std::size_t limit = 0;
};

bench::ExperimentConfig experiment_from(const Options& o) {
    bench::ExperimentConfig c;
    if (!o.config.empty()) c = bench::read_experiment_config(o.config, c);
    if (!o.data.empty()) c.data_path = o.data;
    if (o.seed) c.seed = *o.seed;
    if (o.data_seed) c.data_seed = *o.data_seed;
    if (o.days) c.synth_days = *o.days;
    if (o.epochs) c.bp.epochs = c.scg.epochs = *o.epochs;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << body;
    out.close();
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

std::string snapshot_kind(const std::string& body) {
    std::istringstream in(body);
    std::string kind;
    in >> kind;
    return kind;
}

int cmd_synth(const Options& o) {
    const auto cfg = o.config.empty() ? dataset::SynthConfig{} : dataset::read_synth_config(o.config);
    const auto records = dataset::synthesize(o.days.value_or(90), o.seed.value_or(1), cfg);
    if (o.out.empty() || o.out == "-") {
        dataset::write_csv(std::cout, records);
    } else {
        std::ostringstream body;
        dataset::write_csv(body, records);
        write_text(o.out, body.str());
        std::cerr << fmt::format("wrote {} records to {}\n", records.size(), o.out);
    }
    return 0;
}

int cmd_train(const Options& o) {
    const auto config = experiment_from(o);
    const auto kind = bench::model_kind_from_string(o.model);
    const auto data = bench::prepare(bench::load_records(config), config);
    const auto samples = bench::draw_samples(data, config);
    const fs::path dir = o.out.empty() ? fs::path("model") : fs::path(o.out);
    make_dir(dir);

    std::ostringstream model;
    bench::SampleResult result;
    switch (kind) {
        case bench::ModelKind::efunn: {
            auto run = bench::run_efunn(data, samples.front(), config);
            efunn::write_snapshot(run.model, model);
            result = std::move(run.result);
            break;
        }
        case bench::ModelKind::mlp_bp:
        case bench::ModelKind::mlp_scg: {
            auto run = bench::run_mlp(data, samples.front(), config, kind, config.seed);
            mlp::write_snapshot(run.model, model);
            result = std::move(run.result);
            break;
        }
        case bench::ModelKind::arima: {
            auto run = bench::run_arima(data, config);
            arima::write_snapshot(run.fit, model);
            result = std::move(run.result);
            break;
        }
    }
    std::ostringstream norm;
    dataset::write_norm(data.norm, norm);
    write_text(dir / "model.txt", model.str());
    write_text(dir / "norm.txt", norm.str());

    std::cout << fmt::format("model {}: epochs {}, training RMSE (normalized) {}, testing RMSE (normalized) {}, "
                             "{} flops\n",
                             o.model, result.learning_epochs ? std::to_string(*result.learning_epochs) : "-",
                             result.training_rmse ? text::format_real(*result.training_rmse) : "-",
                             text::format_real(result.testing_rmse), result.flops);
    if (result.rule_nodes) std::cout << fmt::format("rule nodes {}\n", *result.rule_nodes);
    std::cout << fmt::format("snapshot written to {}\n", dir.string());
    return 0;
}

int cmd_forecast(const Options& o) {
    const auto config = experiment_from(o);
    const fs::path dir = o.snapshot;
    const auto body = read_text(dir / "model.txt");
    std::istringstream norm_in(read_text(dir / "norm.txt"));

    auto data = bench::prepare(bench::load_records(config), config);
    data.norm = dataset::read_norm(norm_in);
    for (std::size_t t = dataset::kPeriodsPerDay; t < data.records.size(); ++t) {
        data.normalized[t] = dataset::apply_norm(dataset::encode_features(data.records, t), data.norm);
    }

    std::vector<double> demand;
    const auto kind = snapshot_kind(body);
    std::istringstream in(body);
    if (kind == "demandcast-efunn") {
        const auto model = efunn::read_efunn_snapshot(in);
        for (const double v : bench::forecast_window(data, [&](std::span<const double> x) { return model.predict(x); }))
            demand.push_back(data.norm.denormalize_target(v));
    } else if (kind == "demandcast-mlp") {
        const auto model = mlp::read_mlp_snapshot(in);
        for (const double v :
             bench::forecast_window(data, [&](std::span<const double> x) { return mlp::forward(model, x); }))
            demand.push_back(data.norm.denormalize_target(v));
    } else if (kind == "demandcast-arima") {
        demand = arima::forecast(arima::read_arima_snapshot(in), data.horizon());
    } else {
        throw ParseError(fmt::format("'{}' is not a model snapshot", (dir / "model.txt").string()));
    }

    std::string csv = "period,timestamp,actual_mwh,forecast_mwh\n";
    double sse = 0.0;
    for (std::size_t k = 0; k < demand.size(); ++k) {
        const auto& r = data.records[data.test_start + k];
        csv += fmt::format("{},{},{},{}\n", k + 1, dataset::format_timestamp(r.timestamp), text::format_real(r.demand),
                           text::format_real(demand[k]));
        const double e = data.norm.normalize_target(demand[k]) - data.norm.normalize_target(r.demand);
        sse += e * e;
    }
    if (o.out.empty() || o.out == "-") {
        std::cout << csv;
    } else {
        write_text(o.out, csv);
    }
    std::cerr << fmt::format("testing RMSE (normalized) {}\n",
                             text::format_real(std::sqrt(sse / static_cast<double>(demand.size()))));
    return 0;
}

int cmd_bench(const Options& o) {
    const auto config = experiment_from(o);
    const auto report = bench::run_experiment(config);
    const fs::path dir = o.out.empty() ? fs::path("bench-out") : fs::path(o.out);
    bench::emit_report(report, dir);
    std::cout << bench::render_summary(report);
    std::cout << fmt::format("\nreport written to {}\n", dir.string());
    return 0;
}

int cmd_rules(const Options& o) {
    const auto body = read_text(fs::path(o.snapshot) / "model.txt");
    if (snapshot_kind(body) != "demandcast-efunn") throw ConfigError("rules need an EFuNN snapshot");
    std::istringstream in(body);
    const auto model = efunn::read_efunn_snapshot(in);
    const auto rules = model.extract_rules(dataset::kTargetName);
    const std::size_t n = o.limit == 0 ? rules.size() : std::min(o.limit, rules.size());
    for (std::size_t i = 0; i < n; ++i) std::cout << fmt::format("Rule {}: {}\n", i + 1, rules[i].text);
    std::cout << fmt::format("{} of {} rules shown\n", n, rules.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Half-hourly electricity demand forecasting with evolving fuzzy, neural and seasonal ARIMA models"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::string> models = {"efunn", "mlp-bp", "mlp-scg", "arima"};
    const auto add_data = [&](CLI::App* cmd) {
        cmd->add_option("--data", o.data, "CSV of timestamp,demand_mwh,tmin_c,tmax_c (default: synthetic series)");
        cmd->add_option("--days", o.days, "days of synthetic data when --data is absent");
        cmd->add_option("--data-seed", o.data_seed, "seed of the synthetic series");
        cmd->add_option("--seed", o.seed, "sampling and initialization seed");
        cmd->add_option("--config", o.config, "experiment config file (key = value)");
        cmd->add_option("--epochs", o.epochs, "epoch budget for BP and SCG");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic half-hourly demand series");
    synth->add_option("--days", o.days, "number of days (default 90)");
    synth->add_option("--seed", o.seed, "generator seed (default 1)");
    synth->add_option("--config", o.config, "generator config file (key = value)");
    synth->add_option("--out", o.out, "output CSV (default stdout)");

    auto* train = app.add_subcommand("train", "train one model on the first training sample and save a snapshot");
    add_data(train);
    train->add_option("--model", o.model, "model to train")->required()->check(CLI::IsMember(models));
    train->add_option("--out", o.out, "snapshot directory (default model)");

    auto* forecast = app.add_subcommand("forecast", "96-step forecast of the final window from a snapshot");
    add_data(forecast);
    forecast->add_option("--snapshot", o.snapshot, "snapshot directory written by train")->required();
    forecast->add_option("--out", o.out, "output CSV (default stdout)");

    auto* bench_cmd = app.add_subcommand("bench", "train and compare all models over every sample");
    add_data(bench_cmd);
    bench_cmd->add_option("--out", o.out, "report directory (default bench-out)");
    bench_cmd->add_option("--workers", o.workers, "concurrent trainings");

    auto* rules = app.add_subcommand("rules", "print the linguistic rules of an EFuNN snapshot");
    rules->add_option("--snapshot", o.snapshot, "snapshot directory written by train --model efunn")->required();
    rules->add_option("--limit", o.limit, "print at most this many rules (0 = all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*synth) return cmd_synth(o);
        if (*train) return cmd_train(o);
        if (*forecast) return cmd_forecast(o);
        if (*bench_cmd) return cmd_bench(o);
        if (*rules) return cmd_rules(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
