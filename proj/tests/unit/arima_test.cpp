#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "demandcast/arima.hpp"
#include "demandcast/error.hpp"
#include "simulate.hpp"

namespace dc = demandcast;
namespace ar = demandcast::arima;
using testing_support::simulate_arma;
using testing_support::white_noise;

namespace {

ar::ArimaSpec spec_of(std::size_t p, std::size_t d, std::size_t q, bool intercept = false) {
    ar::ArimaSpec s;
    s.p = p;
    s.d = d;
    s.q = q;
    s.intercept = intercept;
    return s;
}

std::vector<double> reference_acf(const std::vector<double>& y, std::size_t max_lag) {
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    std::vector<double> c(max_lag + 1, 0.0);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        for (std::size_t t = k; t < y.size(); ++t) c[k] += (y[t] - mean) * (y[t - k] - mean);
    }
    std::vector<double> r(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) r[k] = c[k] / c[0];
    return r;
}

/// Last coefficient of the order-k Yule-Walker solution, by Gaussian elimination.
double reference_pacf(const std::vector<double>& r, std::size_t k) {
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) a[i][j] = r[i > j ? i - j : j - i];
        a[i][k] = r[i + 1];
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t pivot = c;
        for (std::size_t i = c + 1; i < k; ++i) {
            if (std::abs(a[i][c]) > std::abs(a[pivot][c])) pivot = i;
        }
        std::swap(a[c], a[pivot]);
        for (std::size_t i = 0; i < k; ++i) {
            if (i == c) continue;
            const double f = a[i][c] / a[c][c];
            for (std::size_t j = c; j <= k; ++j) a[i][j] -= f * a[c][j];
        }
    }
    return a[k - 1][k] / a[k - 1][k - 1];
}

}  // namespace

TEST(Difference, Examples) {
    EXPECT_EQ(ar::difference(std::vector<double>{1, 3, 6, 10}, 1), (std::vector<double>{2, 3, 4}));
    EXPECT_EQ(ar::difference(std::vector<double>{1, 3, 6, 10}, 1, 2), (std::vector<double>{1, 1}));
    EXPECT_EQ(ar::difference(std::vector<double>{1, 2, 3, 5, 7, 9}, 3), (std::vector<double>{4, 5, 6}));
    EXPECT_THROW(ar::difference(std::vector<double>{1, 2}, 2), dc::DataError);
    EXPECT_THROW(ar::difference(std::vector<double>{1, 2}, 0), dc::ConfigError);
}

TEST(Difference, UndifferenceExample) {
    EXPECT_EQ(ar::undifference(std::vector<double>{1, 1, 1}, std::vector<double>{10}, 1),
              (std::vector<double>{11, 12, 13}));
    EXPECT_EQ(ar::undifference(std::vector<double>{1, 2, 3}, std::vector<double>{5, 7}, 2),
              (std::vector<double>{6, 9, 9}));
    EXPECT_THROW(ar::undifference(std::vector<double>{1}, std::vector<double>{1}, 2), dc::DataError);
}

TEST(Difference, UndifferenceInvertsOnRandomSeries) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(100.0, 20.0);
    for (const std::size_t lag : {1u, 48u, 336u}) {
        std::vector<double> y(3 * lag + 200);
        for (auto& v : y) v = g(rng);
        const std::size_t split = 2 * lag + 50;
        const auto z = ar::difference(y, lag);
        const std::vector<double> future(z.begin() + static_cast<std::ptrdiff_t>(split - lag), z.end());
        const std::vector<double> anchors(y.begin() + static_cast<std::ptrdiff_t>(split - lag),
                                          y.begin() + static_cast<std::ptrdiff_t>(split));
        const auto rebuilt = ar::undifference(future, anchors, lag);
        ASSERT_EQ(rebuilt.size(), y.size() - split);
        for (std::size_t i = 0; i < rebuilt.size(); ++i) EXPECT_NEAR(rebuilt[i], y[split + i], 1e-9);
    }
}

TEST(Correlation, AcfMatchesDirectComputation) {
    const auto y = simulate_arma({{1, 0.6}}, {}, 500, 1);
    const auto r = ar::acf(y, 30);
    const auto ref = reference_acf(y, 30);
    ASSERT_EQ(r.size(), 31u);
    EXPECT_EQ(r[0], 1.0);
    for (std::size_t k = 0; k <= 30; ++k) EXPECT_NEAR(r[k], ref[k], 1e-12);
}

TEST(Correlation, PacfMatchesYuleWalker) {
    const auto y = simulate_arma({{1, 0.5}, {2, -0.3}}, {{1, 0.4}}, 800, 2);
    const auto r = reference_acf(y, 12);
    const auto p = ar::pacf(y, 12);
    ASSERT_EQ(p.size(), 13u);
    for (std::size_t k = 1; k <= 12; ++k) EXPECT_NEAR(p[k], reference_pacf(r, k), 1e-10) << "lag " << k;
}

TEST(Correlation, AcfErrors) {
    EXPECT_THROW(ar::acf(std::vector<double>{1, 2, 3}, 5), dc::DataError);
    EXPECT_THROW(ar::acf(std::vector<double>(20, 2.0), 3), dc::DegenerateError);
}

TEST(Fit, RecoversAr1) {
    const auto y = simulate_arma({{1, 0.7}}, {}, 5000, 10);
    const auto f = ar::fit(y, spec_of(1, 0, 0));
    ASSERT_EQ(f.ar.size(), 1u);
    EXPECT_NEAR(f.ar[0], 0.7, 0.03);
    EXPECT_NEAR(f.sigma2, 1.0, 0.06);
}

TEST(Fit, RecoversMa1WithPositiveSign) {
    const auto y = simulate_arma({}, {{1, 0.5}}, 5000, 11);
    const auto f = ar::fit(y, spec_of(0, 0, 1));
    ASSERT_EQ(f.ma.size(), 1u);
    EXPECT_NEAR(f.ma[0], 0.5, 0.03);
}

TEST(Fit, RecoversIntercept) {
    auto y = simulate_arma({{1, 0.5}}, {}, 5000, 12);
    for (auto& v : y) v += 4.0;
    const auto f = ar::fit(y, spec_of(1, 0, 0, true));
    EXPECT_NEAR(f.ar[0], 0.5, 0.03);
    EXPECT_NEAR(f.intercept / (1.0 - f.ar[0]), 4.0, 0.1);
}

TEST(Fit, WhiteNoiseGivesSmallCoefficients) {
    const auto y = white_noise(4000, 13);
    const auto f = ar::fit(y, spec_of(1, 0, 1));
    EXPECT_LT(std::abs(f.ar[0] + f.ma[0]), 0.1);
    EXPECT_TRUE(ar::diagnostics(f).adequate());
}

TEST(Fit, RecoversSeasonalTerms) {
    const auto y = simulate_arma({{1, 0.5}, {12, 0.6}, {13, -0.3}}, {}, 6000, 14);
    ar::ArimaSpec s = spec_of(1, 0, 0);
    s.sp = 1;
    s.season = 12;
    const auto f = ar::fit(y, s);
    EXPECT_NEAR(f.ar[0], 0.5, 0.04);
    EXPECT_NEAR(f.seasonal_ar[0], 0.6, 0.04);
}

TEST(Fit, SeasonalMovingAverage) {
    const auto y = simulate_arma({}, {{1, 0.4}, {12, 0.5}, {13, 0.2}}, 6000, 15);
    ar::ArimaSpec s = spec_of(0, 0, 1);
    s.sq = 1;
    s.season = 12;
    const auto f = ar::fit(y, s);
    EXPECT_NEAR(f.ma[0], 0.4, 0.04);
    EXPECT_NEAR(f.seasonal_ma[0], 0.5, 0.04);
}

TEST(Fit, ResidualsReproduceFromCoefficients) {
    const auto y = simulate_arma({{1, 0.6}}, {{1, 0.3}}, 1500, 16);
    const auto f = ar::fit(y, spec_of(1, 0, 1));
    const auto e = ar::css_residuals(f.working_series, f);
    ASSERT_EQ(e.size(), f.residuals.size());
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e[i], f.residuals[i], 1e-12);
}

TEST(Fit, ConvergenceFailureKeepsLastIterate) {
    const auto y = simulate_arma({{1, 0.3}}, {{1, 0.6}}, 2000, 17);
    ar::FitOptions o;
    o.max_iterations = 1;
    try {
        ar::fit(y, spec_of(1, 0, 1), o);
        FAIL() << "expected a convergence error";
    } catch (const ar::ArimaConvergenceError& e) {
        EXPECT_EQ(e.last_iterate().iterations, 1u);
        EXPECT_EQ(e.last_iterate().ar.size(), 1u);
    }
}

TEST(Fit, RejectsTooShortSeries) {
    EXPECT_THROW(ar::fit(std::vector<double>{1, 2, 3}, spec_of(2, 0, 2)), dc::DataError);
}

TEST(ArimaSpec, Validation) {
    ar::ArimaSpec s = spec_of(1, 0, 0);
    s.sp = 1;
    s.season = 1;
    EXPECT_THROW(s.validate(), dc::ConfigError);
    s.season = 48;
    s.pre_diff_lag = 336;
    s.d = 1;
    s.sd = 1;
    EXPECT_EQ(s.differencing_lags(), (std::vector<std::size_t>{336, 1, 48}));
}

TEST(Diagnostics, LjungBoxMatchesDefinition) {
    const auto e = white_noise(600, 20);
    const auto d = ar::diagnose_residuals(e, 20, 2);
    const auto r = reference_acf(e, 20);
    double q = 0.0;
    const double n = 600.0;
    for (std::size_t k = 1; k <= 20; ++k) q += r[k] * r[k] / (n - static_cast<double>(k));
    q *= n * (n + 2.0);
    EXPECT_NEAR(d.ljung_box, q, 1e-9);
    EXPECT_EQ(d.degrees_of_freedom, 18u);
    EXPECT_NEAR(d.critical_95, 28.869, 1e-3);
    EXPECT_GT(d.p_value, 0.0);
    EXPECT_LE(d.p_value, 1.0);
}

TEST(Diagnostics, DetectsStructureLeftInResiduals) {
    const auto e = simulate_arma({{1, 0.5}}, {}, 1000, 21);
    const auto d = ar::diagnose_residuals(e, 20, 0);
    EXPECT_FALSE(d.adequate());
    EXPECT_LT(d.p_value, 0.05);
    EXPECT_THROW(ar::diagnose_residuals(white_noise(20, 1), 10, 0), dc::DataError);
}

TEST(Forecast, Ar1ClosedForm) {
    const auto y = simulate_arma({{1, 0.8}}, {}, 3000, 30);
    const auto f = ar::fit(y, spec_of(1, 0, 0));
    const auto h = ar::forecast(f, 10);
    double expected = y.back();
    for (std::size_t k = 0; k < 10; ++k) {
        expected *= f.ar[0];
        EXPECT_NEAR(h[k], expected, 1e-12);
    }
}

TEST(Forecast, RandomWalkIsFlat) {
    const auto y = testing_support::integrate(white_noise(1000, 31), 50.0);
    const auto f = ar::fit(y, spec_of(0, 1, 0));
    const auto h = ar::forecast(f, 96);
    ASSERT_EQ(h.size(), 96u);
    for (const double v : h) EXPECT_DOUBLE_EQ(v, y.back());
}

TEST(Forecast, Ma1VanishesAfterOneStep) {
    const auto y = simulate_arma({}, {{1, 0.5}}, 2000, 32);
    const auto f = ar::fit(y, spec_of(0, 0, 1));
    const auto h = ar::forecast(f, 5);
    EXPECT_NEAR(h[0], f.ma[0] * f.residuals.back(), 1e-12);
    for (std::size_t k = 1; k < 5; ++k) EXPECT_EQ(h[k], 0.0);
}

TEST(Forecast, StationaryForecastDecaysToMean) {
    auto y = simulate_arma({{1, 0.6}}, {{1, 0.2}}, 3000, 33);
    for (auto& v : y) v += 10.0;
    const auto f = ar::fit(y, spec_of(1, 0, 1, true));
    const auto h = ar::forecast(f, 200);
    const double mean = f.intercept / (1.0 - f.ar[0]);
    EXPECT_NEAR(h.back(), mean, 1e-9);
    for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LE(std::abs(h[k] - mean), std::abs(h[k - 1] - mean) + 1e-12);
}

TEST(Forecast, SeasonallyDifferencedRepeatsPattern) {
    // Deterministic daily cycle plus pre-difference: forecasts repeat the last season.
    std::vector<double> y;
    for (std::size_t t = 0; t < 48 * 30; ++t) y.push_back(100.0 + 10.0 * std::sin(2.0 * M_PI * t / 48.0));
    const auto noise = white_noise(y.size(), 34, 0.01);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] += noise[t];
    ar::ArimaSpec s;
    s.pre_diff_lag = 48;
    s.intercept = false;
    const auto f = ar::fit(y, s);
    const auto h = ar::forecast(f, 96);
    for (std::size_t k = 0; k < 96; ++k) EXPECT_DOUBLE_EQ(h[k], y[y.size() - 48 + k % 48]);
}

TEST(Forecast, RejectsZeroHorizon) {
    const auto f = ar::fit(simulate_arma({{1, 0.5}}, {}, 500, 35), spec_of(1, 0, 0));
    EXPECT_THROW(ar::forecast(f, 0), dc::ConfigError);
}

TEST(ArimaSnapshot, RoundTripForecastsIdentically) {
    const auto y = testing_support::integrate(simulate_arma({{1, 0.4}}, {{1, 0.3}}, 1500, 40), 5.0);
    ar::ArimaSpec s = spec_of(1, 1, 1, true);
    const auto f = ar::fit(y, s);
    std::stringstream ss;
    ar::write_snapshot(f, ss);
    const auto g = ar::read_arima_snapshot(ss);
    EXPECT_EQ(g.ar, f.ar);
    EXPECT_EQ(g.ma, f.ma);
    EXPECT_EQ(g.intercept, f.intercept);
    EXPECT_EQ(ar::forecast(g, 96), ar::forecast(f, 96));
}

TEST(ArimaSnapshot, RejectsCorruptInput) {
    std::istringstream wrong("demandcast-arima 9\n");
    EXPECT_THROW(ar::read_arima_snapshot(wrong), dc::ParseError);
    std::istringstream empty("");
    EXPECT_THROW(ar::read_arima_snapshot(empty), dc::ParseError);
}
