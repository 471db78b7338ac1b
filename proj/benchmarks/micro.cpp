#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "demandcast/arima.hpp"
#include "demandcast/bench.hpp"
#include "demandcast/dataset.hpp"
#include "demandcast/efunn.hpp"
#include "demandcast/fuzzy.hpp"
#include "demandcast/mlp.hpp"

namespace dc = demandcast;

namespace {

const dc::bench::PreparedData& data() {
    static const dc::bench::PreparedData d = [] {
        const dc::bench::ExperimentConfig c;
        return dc::bench::prepare(dc::bench::load_records(c), c);
    }();
    return d;
}

dc::mlp::Batch batch_of(std::size_t n) {
    dc::mlp::Batch b;
    b.input_width = dc::dataset::kFeatureCount;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& v = data().normalized[data().pool[k % data().pool.size()]];
        b.push_back(v.x, v.y);
    }
    return b;
}

void BM_Fuzzify(benchmark::State& state) {
    const auto part = dc::fuzzy::build_partition(0.0, 1.0, 4);
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dc::fuzzy::fuzzify(x, part));
        x = x > 1.0 ? 0.0 : x + 1e-3;
    }
}
BENCHMARK(BM_Fuzzify);

void BM_EfunnOnePass(benchmark::State& state) {
    const dc::bench::ExperimentConfig c;
    const auto samples = dc::bench::draw_samples(data(), c);
    std::vector<std::size_t> sample(samples[0].begin(),
                                    samples[0].begin() + static_cast<std::ptrdiff_t>(state.range(0)));
    for (auto _ : state) {
        auto model = dc::bench::make_efunn(c);
        for (const auto i : sample) model.learn_one(data().normalized[i].x, data().normalized[i].y);
        benchmark::DoNotOptimize(model.node_count());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EfunnOnePass)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_MlpGradient(benchmark::State& state) {
    const auto model = dc::mlp::init_mlp({6, 40, 40, 1}, 1);
    const auto batch = batch_of(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(dc::mlp::gradient(model, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpGradient)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_ScgEpochs(benchmark::State& state) {
    const auto batch = batch_of(800);
    dc::mlp::ScgConfig c;
    c.epochs = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto model = dc::mlp::init_mlp({6, 40, 40, 1}, 1);
        benchmark::DoNotOptimize(dc::mlp::scg_train(model, batch, c));
    }
}
BENCHMARK(BM_ScgEpochs)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ArimaFit(benchmark::State& state) {
    std::vector<double> y;
    for (const auto& r : data().records) y.push_back(r.demand);
    const auto spec = dc::bench::default_arima_spec();
    for (auto _ : state) benchmark::DoNotOptimize(dc::arima::fit(y, spec));
}
BENCHMARK(BM_ArimaFit)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
