#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "demandcast/error.hpp"
#include "demandcast/mlp.hpp"
#include "numeric.hpp"
#include "reference_mlp.hpp"

namespace dc = demandcast;
namespace mlp = demandcast::mlp;

namespace {

mlp::Batch random_batch(std::size_t width, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    mlp::Batch b;
    b.input_width = width;
    std::vector<double> row(width);
    for (std::size_t k = 0; k < n; ++k) {
        for (auto& v : row) v = u(rng);
        b.push_back(row, u(rng));
    }
    return b;
}

mlp::Batch xor_batch() {
    mlp::Batch b;
    b.input_width = 2;
    const double rows[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    for (const auto& r : rows) b.push_back(std::vector<double>{r[0], r[1]}, r[2]);
    return b;
}

}  // namespace

TEST(MlpModel, RejectsBadShapes) {
    EXPECT_THROW(mlp::MlpModel({6}), dc::ConfigError);
    EXPECT_THROW(mlp::MlpModel({6, 0, 1}), dc::ConfigError);
    EXPECT_THROW(mlp::MlpModel({6, 4, 2}), dc::ConfigError);
    EXPECT_THROW(mlp::init_mlp({6}, 0), dc::ConfigError);
}

TEST(MlpModel, ParameterLayout) {
    const auto m = mlp::init_mlp({6, 40, 40, 1}, 0);
    EXPECT_EQ(m.parameter_count(), 6u * 40 + 40 + 40 * 40 + 40 + 40 + 1);
    EXPECT_EQ(m.weights(0).size(), 240u);
    EXPECT_EQ(m.biases(1).size(), 40u);
    EXPECT_EQ(m.weights(2).size(), 40u);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.layer_sizes()[l]));
        for (const double w : m.weights(l)) EXPECT_LE(std::abs(w), bound);
        for (const double b : m.biases(l)) EXPECT_EQ(b, 0.0);
    }
}

TEST(MlpModel, InitIsDeterministic) {
    EXPECT_EQ(mlp::init_mlp({6, 40, 40, 1}, 7), mlp::init_mlp({6, 40, 40, 1}, 7));
    EXPECT_FALSE(mlp::init_mlp({6, 40, 40, 1}, 7) == mlp::init_mlp({6, 40, 40, 1}, 8));
}

TEST(Forward, ZeroNetworkOutputsZero) {
    const mlp::MlpModel m({6, 40, 40, 1});
    const std::vector<double> x = {0.3, 0.1, 0.9, 0.5, 0.2, 0.7};
    EXPECT_EQ(mlp::forward(m, x), 0.0);
}

TEST(Forward, SingleLinearLayer) {
    mlp::MlpModel m({1, 1});
    m.weights(0)[0] = 2.0;
    EXPECT_EQ(mlp::forward(m, std::vector<double>{3.0}), 6.0);
    m.biases(0)[0] = -1.0;
    EXPECT_EQ(mlp::forward(m, std::vector<double>{3.0}), 5.0);
}

TEST(Forward, HiddenUnitsSaturate) {
    mlp::MlpModel m({1, 1, 1});
    m.weights(0)[0] = 100.0;
    m.weights(1)[0] = 1.0;
    EXPECT_NEAR(mlp::forward(m, std::vector<double>{1.0}), 1.0, 1e-12);
    EXPECT_NEAR(mlp::forward(m, std::vector<double>{-1.0}), -1.0, 1e-12);
}

TEST(Forward, MatchesReferenceOnRandomNetworks) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto m = mlp::init_mlp({6, 5, 3, 1}, s);
        std::vector<double> x(6);
        for (auto& v : x) v = u(rng);
        EXPECT_NEAR(mlp::forward(m, x), testing_support::reference_forward(m.layer_sizes(), m.parameters(), x), 1e-14);
    }
}

TEST(Forward, ShapeErrors) {
    const mlp::MlpModel m({2, 1});
    EXPECT_THROW(mlp::forward(m, std::vector<double>{1.0}), dc::ShapeError);
    mlp::Batch b;
    b.input_width = 2;
    EXPECT_THROW(b.push_back(std::vector<double>{1.0}, 0.0), dc::ShapeError);
    EXPECT_THROW(mlp::gradient(m, b), dc::DataError);
}

TEST(Gradient, SingleWeightExample) {
    mlp::MlpModel m({1, 1});
    m.weights(0)[0] = 1.0;
    mlp::Batch b;
    b.input_width = 1;
    b.push_back(std::vector<double>{1.0}, 0.0);
    const auto g = mlp::gradient(m, b);
    EXPECT_DOUBLE_EQ(g.error, 1.0);
    EXPECT_DOUBLE_EQ(g.gradient[0], 2.0);
    EXPECT_DOUBLE_EQ(g.gradient[1], 2.0);
}

TEST(Gradient, MatchesFiniteDifferences) {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> width(1, 8);
    for (std::uint64_t s = 0; s < 20; ++s) {
        std::vector<std::size_t> sizes = {width(rng)};
        const std::size_t hidden = 1 + s % 3;
        for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(width(rng));
        sizes.push_back(1);
        const auto m = mlp::init_mlp(sizes, 100 + s);
        const auto batch = random_batch(sizes.front(), 12, 200 + s);
        const auto analytic = mlp::gradient(m, batch).gradient;
        const auto numeric = testing_support::central_gradient(
            [&](std::span<const double> w) {
                double e = 0.0;
                for (std::size_t k = 0; k < batch.size(); ++k) {
                    const double r = testing_support::reference_forward(sizes, w, batch.row(k)) - batch.y[k];
                    e += r * r;
                }
                return e / static_cast<double>(batch.size());
            },
            m.parameters());
        EXPECT_LT(testing_support::max_relative_error(analytic, numeric), 1e-6) << "network " << s;
    }
}

TEST(Gradient, IndependentOfWorkerCount) {
    const auto m = mlp::init_mlp({6, 40, 40, 1}, 3);
    const auto batch = random_batch(6, 1000, 4);
    const auto serial = mlp::gradient(m, batch, {1, 64});
    for (const std::size_t workers : {2u, 3u, 8u}) {
        const auto parallel = mlp::gradient(m, batch, {workers, 64});
        EXPECT_EQ(serial.error, parallel.error);
        EXPECT_EQ(serial.gradient, parallel.gradient);
    }
}

TEST(Gradient, FlopsLinearInBatchSize) {
    const auto m = mlp::init_mlp({6, 40, 40, 1}, 3);
    const auto flops_for = [&](std::size_t n) {
        dc::FlopCounter f;
        mlp::gradient(m, random_batch(6, n, 4), {}, &f);
        return f.total();
    };
    const auto f1 = flops_for(50), f2 = flops_for(100), f3 = flops_for(150);
    EXPECT_GE(f1, 50 * m.backward_flops());
    EXPECT_EQ(f3 - f2, f2 - f1);
}

TEST(Training, ScgSolvesXor) {
    auto m = mlp::init_mlp({2, 4, 1}, 1);
    mlp::ScgConfig c;
    c.epochs = 200;
    const auto batch = xor_batch();
    const auto trace = mlp::scg_train(m, batch, c);
    EXPECT_LT(mlp::rmse(mlp::predict_all(m, batch), batch.y), 0.05);
    ASSERT_FALSE(trace.empty());
    EXPECT_LT(trace.back(), 0.05);
}

TEST(Training, BpReducesError) {
    auto m = mlp::init_mlp({2, 4, 1}, 1);
    const auto batch = xor_batch();
    const auto trace = mlp::bp_train(m, batch, {0.1, 0.5, 200});
    ASSERT_EQ(trace.size(), 200u);
    EXPECT_LT(trace.back(), trace.front());
}

TEST(Training, ScgNeedsAnEpoch) {
    auto m = mlp::init_mlp({2, 4, 1}, 1);
    mlp::ScgConfig c;
    c.epochs = 0;
    EXPECT_THROW(mlp::scg_train(m, xor_batch(), c), dc::ConfigError);
}

TEST(Training, DeterministicAcrossRunsAndWorkers) {
    const auto batch = random_batch(6, 600, 9);
    mlp::ScgConfig c;
    c.epochs = 15;
    auto a = mlp::init_mlp({6, 10, 10, 1}, 5);
    auto b = a;
    auto w = a;
    mlp::scg_train(a, batch, c, nullptr, {1, 100});
    mlp::scg_train(b, batch, c, nullptr, {1, 100});
    mlp::scg_train(w, batch, c, nullptr, {4, 100});
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, w);

    auto p = mlp::init_mlp({6, 10, 10, 1}, 5);
    auto q = p;
    mlp::bp_train(p, batch, {0.01, 0.9, 15}, nullptr, {1, 50});
    mlp::bp_train(q, batch, {0.01, 0.9, 15}, nullptr, {3, 50});
    EXPECT_EQ(p, q);
}

TEST(Training, FlopsScaleWithEpochs) {
    const auto batch = random_batch(6, 200, 9);
    const auto flops_for = [&](bool scg, std::size_t epochs) {
        auto m = mlp::init_mlp({6, 10, 10, 1}, 5);
        dc::FlopCounter f;
        if (scg) {
            mlp::ScgConfig c;
            c.epochs = epochs;
            mlp::scg_train(m, batch, c, &f);
        } else {
            mlp::bp_train(m, batch, {0.01, 0.9, epochs}, &f);
        }
        return static_cast<double>(f.total());
    };
    const double bp1 = flops_for(false, 50), bp2 = flops_for(false, 100), bp3 = flops_for(false, 150);
    EXPECT_EQ(bp3 - bp2, bp2 - bp1);
    // An SCG iteration costs one gradient when rejected and two when accepted.
    dc::FlopCounter one;
    mlp::gradient(mlp::init_mlp({6, 10, 10, 1}, 5), batch, {}, &one);
    const double per_iteration = (flops_for(true, 100) - flops_for(true, 50)) / 50.0;
    const double g = static_cast<double>(one.total());
    EXPECT_GE(per_iteration, g);
    EXPECT_LE(per_iteration, 2.1 * g);
}

TEST(HessianEstimate, ErrorHalvesWithSigma) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto m = mlp::init_mlp({3, 4, 1}, 40 + s);
        const auto batch = random_batch(3, 20, 50 + s);
        const auto obj = mlp::make_objective(m, batch);
        const std::vector<double> w(m.parameters().begin(), m.parameters().end());
        std::mt19937_64 rng(60 + s);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> p(w.size());
        for (auto& v : p) v = g(rng);
        const double len = testing_support::norm(p);
        for (auto& v : p) v /= len;
        const auto grad_at = [&](std::span<const double> at) {
            std::vector<double> out(at.size());
            obj(at, out);
            return out;
        };
        const auto exact = testing_support::hessian_vector(grad_at, w, p);
        const auto g0 = grad_at(w);
        const auto error_at = [&](double sigma) {
            const auto est = demandcast::optim::scaled_hessian_product(obj, w, g0, p, sigma, 0.0);
            double d = 0.0;
            for (std::size_t i = 0; i < est.size(); ++i) d = std::max(d, std::abs(est[i] - exact[i]));
            return d;
        };
        double previous = error_at(1e-2);
        for (double sigma = 5e-3; sigma > 1e-4; sigma /= 2.0) {
            const double current = error_at(sigma);
            const double ratio = previous / current;
            EXPECT_GT(ratio, 1.8) << "sigma " << sigma;
            EXPECT_LT(ratio, 2.2) << "sigma " << sigma;
            previous = current;
        }
    }
}

TEST(Rmse, Examples) {
    EXPECT_EQ(mlp::rmse(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(mlp::rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), std::sqrt(12.5));
    EXPECT_THROW(mlp::rmse(std::vector<double>{1}, std::vector<double>{1, 2}), dc::DataError);
    EXPECT_THROW(mlp::rmse(std::vector<double>{}, std::vector<double>{}), dc::DataError);
}

TEST(MlpSnapshot, RoundTripIsExact) {
    const auto m = mlp::init_mlp({6, 40, 40, 1}, 77);
    std::stringstream ss;
    mlp::write_snapshot(m, ss);
    EXPECT_EQ(mlp::read_mlp_snapshot(ss), m);
}

TEST(MlpSnapshot, RejectsCorruptInput) {
    const auto m = mlp::init_mlp({2, 3, 1}, 1);
    std::stringstream ss;
    mlp::write_snapshot(m, ss);
    const std::string body = ss.str();
    std::istringstream truncated(body.substr(0, body.size() / 2));
    EXPECT_THROW(mlp::read_mlp_snapshot(truncated), dc::ParseError);
    std::istringstream wrong("demandcast-efunn 1\n");
    EXPECT_THROW(mlp::read_mlp_snapshot(wrong), dc::ParseError);
}
