#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "demandcast/error.hpp"
#include "demandcast/flops.hpp"

namespace demandcast::arima {

/// Orders of a multiplicative seasonal ARIMA(p,d,q)(sp,sd,sq)_season model,
/// optionally applied after an extra lag-`pre_diff_lag` difference.
struct ArimaSpec {
    std::size_t p = 0, d = 0, q = 0;
    std::size_t sp = 0, sd = 0, sq = 0;
    std::size_t season = 1;
    std::size_t pre_diff_lag = 0;
    bool intercept = true;

    void validate() const;
    [[nodiscard]] std::size_t parameter_count() const noexcept {
        return (intercept ? 1 : 0) + p + q + sp + sq;
    }
    /// Lags applied in order: pre-difference, then d lag-1, then sd lag-season.
    [[nodiscard]] std::vector<std::size_t> differencing_lags() const;
    [[nodiscard]] std::string describe() const;
};

/// Conditional-sum-of-squares estimate.
///
/// Sign conventions on the differenced series w_t:
///   (1 - sum ar_i B^i)(1 - sum sar_j B^{js}) w_t = c + (1 + sum ma_i B^i)(1 + sum sma_j B^{js}) e_t
/// i.e. MA terms enter with positive signs.
struct ArimaFit {
    ArimaSpec spec;
    double intercept = 0.0;
    std::vector<double> ar;
    std::vector<double> ma;
    std::vector<double> seasonal_ar;
    std::vector<double> seasonal_ma;
    /// Innovations for t >= first_residual of the differenced series.
    std::vector<double> residuals;
    double sigma2 = 0.0;
    double sse = 0.0;
    std::size_t iterations = 0;
    bool near_unit_root = false;

    /// Fully differenced series the model was estimated on.
    std::vector<double> working_series;
    std::size_t first_residual = 0;
    /// Last `lag` values of the series entering each differencing stage.
    std::vector<std::vector<double>> stage_tails;
};

class ArimaConvergenceError : public ConvergenceError {
public:
    ArimaConvergenceError(const std::string& what, ArimaFit last_iterate)
        : ConvergenceError(what), last_(std::move(last_iterate)) {}
    [[nodiscard]] const ArimaFit& last_iterate() const noexcept { return last_; }

private:
    ArimaFit last_;
};

struct FitOptions {
    std::size_t max_iterations = 200;
    double relative_tolerance = 1e-10;
    std::size_t max_halvings = 20;
};

/// z_t = y_t - y_{t-lag}, applied `times` times.
std::vector<double> difference(std::span<const double> series, std::size_t lag, std::size_t times = 1);

/// Inverse of one lag-`lag` difference continuing after `anchors` (the last
/// original values before the forecasts).
std::vector<double> undifference(std::span<const double> forecasts, std::span<const double> anchors,
                                 std::size_t lag);

/// Sample autocorrelations r_0..r_max_lag (r_0 = 1).
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);
/// Partial autocorrelations via Durbin-Levinson, index 0 = 1.
std::vector<double> pacf(std::span<const double> series, std::size_t max_lag);

ArimaFit fit(std::span<const double> series, const ArimaSpec& spec, const FitOptions& options = {},
             FlopCounter* flops = nullptr);

/// Innovations of `spec` with the given coefficients over a differenced series
/// (pre-sample innovations fixed at zero).
std::vector<double> css_residuals(std::span<const double> working, const ArimaFit& coefficients);

struct Diagnostics {
    std::vector<double> residual_acf;  ///< lags 0..lags
    std::size_t lags = 0;
    double ljung_box = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 0.0;
    double critical_95 = 0.0;  ///< chi-square 95% quantile at the degrees of freedom
    double residual_mean = 0.0;
    double residual_variance = 0.0;
    [[nodiscard]] bool adequate() const noexcept { return ljung_box <= critical_95; }
};

/// Ljung-Box test over residual autocorrelations to `lags`, with
/// `fitted_parameters` subtracted from the degrees of freedom.
Diagnostics diagnose_residuals(std::span<const double> residuals, std::size_t lags,
                               std::size_t fitted_parameters);
/// Residual checks to lag 2*season for seasonal fits, else 20.
Diagnostics diagnostics(const ArimaFit& fit);

/// Forecasts of the fully differenced series (future innovations zero).
std::vector<double> forecast_differenced(const ArimaFit& fit, std::size_t horizon);
/// Forecasts in the original units; every differencing stage is inverted.
std::vector<double> forecast(const ArimaFit& fit, std::size_t horizon);

void write_snapshot(const ArimaFit& fit, std::ostream& out);
ArimaFit read_arima_snapshot(std::istream& in);

}  // namespace demandcast::arima
