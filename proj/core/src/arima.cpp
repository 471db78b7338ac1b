#include "demandcast/arima.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <istream>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "demandcast/text_format.hpp"

namespace demandcast::arima {

void ArimaSpec::validate() const {
    if ((sp > 0 || sd > 0 || sq > 0) && season < 2) {
        throw ConfigError("seasonal orders need a season of at least 2 periods");
    }
    if (season < 1) throw ConfigError("season must be >= 1");
}

std::vector<std::size_t> ArimaSpec::differencing_lags() const {
    std::vector<std::size_t> lags;
    if (pre_diff_lag > 0) lags.push_back(pre_diff_lag);
    for (std::size_t i = 0; i < d; ++i) lags.push_back(1);
    for (std::size_t i = 0; i < sd; ++i) lags.push_back(season);
    return lags;
}

std::string ArimaSpec::describe() const {
    std::string s = fmt::format("ARIMA({},{},{})", p, d, q);
    if (sp + sd + sq > 0) s += fmt::format("({},{},{})_{}", sp, sd, sq, season);
    if (pre_diff_lag > 0) s += fmt::format(" on lag-{} differences", pre_diff_lag);
    return s;
}

std::vector<double> difference(std::span<const double> series, std::size_t lag, std::size_t times) {
    if (lag == 0) throw ConfigError("differencing lag must be >= 1");
    if (series.size() <= lag * times) {
        throw DataError(fmt::format("series of length {} too short for {} lag-{} differences", series.size(), times, lag));
    }
    std::vector<double> out(series.begin(), series.end());
    for (std::size_t k = 0; k < times; ++k) {
        std::vector<double> next(out.size() - lag);
        for (std::size_t t = lag; t < out.size(); ++t) next[t - lag] = out[t] - out[t - lag];
        out = std::move(next);
    }
    return out;
}

std::vector<double> undifference(std::span<const double> forecasts, std::span<const double> anchors,
                                 std::size_t lag) {
    if (lag == 0) throw ConfigError("differencing lag must be >= 1");
    if (anchors.size() < lag) {
        throw DataError(fmt::format("undifference needs {} anchors, got {}", lag, anchors.size()));
    }
    std::vector<double> history(anchors.end() - static_cast<std::ptrdiff_t>(lag), anchors.end());
    std::vector<double> out(forecasts.size());
    for (std::size_t h = 0; h < forecasts.size(); ++h) {
        const double base = h < lag ? history[h] : out[h - lag];
        out[h] = forecasts[h] + base;
    }
    return out;
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n <= max_lag + 1) throw DataError(fmt::format("acf to lag {} needs more than {} values", max_lag, max_lag + 1));
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    if (!(c0 > 0.0)) throw DegenerateError("autocorrelation of a zero-variance series");
    std::vector<double> r(max_lag + 1);
    r[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t t = k; t < n; ++t) ck += (series[t] - mean) * (series[t - k] - mean);
        r[k] = ck / c0;
    }
    return r;
}

std::vector<double> pacf(std::span<const double> series, std::size_t max_lag) {
    const auto r = acf(series, max_lag);
    std::vector<double> out(max_lag + 1, 0.0);
    out[0] = 1.0;
    if (max_lag == 0) return out;
    std::vector<double> phi(max_lag + 1, 0.0);
    std::vector<double> prev(max_lag + 1, 0.0);
    phi[1] = r[1];
    out[1] = r[1];
    double v = 1.0 - r[1] * r[1];
    for (std::size_t k = 2; k <= max_lag; ++k) {
        prev = phi;
        double num = r[k];
        for (std::size_t j = 1; j < k; ++j) num -= prev[j] * r[k - j];
        const double kk = v > 0.0 ? num / v : 0.0;
        phi[k] = kk;
        for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - kk * prev[k - j];
        v *= 1.0 - kk * kk;
        out[k] = std::clamp(kk, -1.0, 1.0);
    }
    return out;
}

namespace {

/// Expanded lag polynomial as sparse (lag, coefficient) pairs for the
/// recursion w_t = c + sum ar w_{t-lag} + e_t + sum ma e_{t-lag}.
struct Recursion {
    std::vector<std::pair<std::size_t, double>> ar;
    std::vector<std::pair<std::size_t, double>> ma;
    std::size_t max_ar_lag = 0;
    std::size_t max_ma_lag = 0;
};

/// Coefficients of (1 + sign*sum a_i B^i)(1 + sign*sum b_j B^{js}) beyond the
/// constant, over the structural lag set {i + j*s}, scaled by `sign`.
std::vector<std::pair<std::size_t, double>> expand(std::span<const double> regular, std::span<const double> seasonal,
                                                   std::size_t season, double sign) {
    std::map<std::size_t, double> product;
    for (std::size_t j = 0; j <= seasonal.size(); ++j) {
        const double b = j == 0 ? 1.0 : sign * seasonal[j - 1];
        for (std::size_t i = 0; i <= regular.size(); ++i) {
            if (i == 0 && j == 0) continue;
            const double a = i == 0 ? 1.0 : sign * regular[i - 1];
            product[i + j * season] += a * b;
        }
    }
    std::vector<std::pair<std::size_t, double>> terms;
    for (const auto& [lag, c] : product) terms.emplace_back(lag, sign * c);
    return terms;
}

Recursion make_recursion(const ArimaFit& f) {
    Recursion rec;
    const std::size_t s = std::max<std::size_t>(f.spec.season, 1);
    // AR polynomial is 1 - sum; its recursion coefficients are the negated tail.
    rec.ar = expand(f.ar, f.seasonal_ar, s, -1.0);
    rec.ma = expand(f.ma, f.seasonal_ma, s, 1.0);
    for (const auto& [lag, c] : rec.ar) rec.max_ar_lag = std::max(rec.max_ar_lag, lag);
    for (const auto& [lag, c] : rec.ma) rec.max_ma_lag = std::max(rec.max_ma_lag, lag);
    return rec;
}

void unpack(const ArimaSpec& spec, std::span<const double> beta, ArimaFit& f) {
    std::size_t k = 0;
    f.intercept = spec.intercept ? beta[k++] : 0.0;
    f.ar.assign(beta.begin() + static_cast<std::ptrdiff_t>(k), beta.begin() + static_cast<std::ptrdiff_t>(k + spec.p));
    k += spec.p;
    f.ma.assign(beta.begin() + static_cast<std::ptrdiff_t>(k), beta.begin() + static_cast<std::ptrdiff_t>(k + spec.q));
    k += spec.q;
    f.seasonal_ar.assign(beta.begin() + static_cast<std::ptrdiff_t>(k),
                         beta.begin() + static_cast<std::ptrdiff_t>(k + spec.sp));
    k += spec.sp;
    f.seasonal_ma.assign(beta.begin() + static_cast<std::ptrdiff_t>(k),
                         beta.begin() + static_cast<std::ptrdiff_t>(k + spec.sq));
}

/// Innovations for t >= first over the whole working series.
std::vector<double> innovations(std::span<const double> w, const Recursion& rec, double c, std::size_t first) {
    std::vector<double> e(w.size(), 0.0);
    for (std::size_t t = first; t < w.size(); ++t) {
        double v = w[t] - c;
        for (const auto& [lag, a] : rec.ar) v -= a * w[t - lag];
        for (const auto& [lag, m] : rec.ma) {
            if (lag <= t) v -= m * e[t - lag];
        }
        e[t] = v;
    }
    return std::vector<double>(e.begin() + static_cast<std::ptrdiff_t>(first), e.end());
}

/// Largest modulus among reciprocal roots of 1 + sign*sum c_i z^i.
double max_inverse_root(std::span<const double> coeffs, double sign) {
    std::size_t degree = coeffs.size();
    while (degree > 0 && coeffs[degree - 1] == 0.0) --degree;
    if (degree == 0) return 0.0;
    // Reciprocal roots solve x^n + sign*(c_1 x^{n-1} + ... + c_n) = 0.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(degree),
                                                      static_cast<Eigen::Index>(degree));
    for (std::size_t i = 0; i < degree; ++i) companion(0, static_cast<Eigen::Index>(i)) = -sign * coeffs[i];
    for (std::size_t i = 1; i < degree; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    double m = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) m = std::max(m, std::abs(solver.eigenvalues()(i)));
    return m;
}

bool has_near_unit_root(const ArimaFit& f) {
    // |root| < 1.001 is |reciprocal root| > 1/1.001.
    const double limit = 1.0 / 1.001;
    return max_inverse_root(f.ar, -1.0) > limit || max_inverse_root(f.seasonal_ar, -1.0) > limit ||
           max_inverse_root(f.ma, 1.0) > limit || max_inverse_root(f.seasonal_ma, 1.0) > limit;
}

}  // namespace

std::vector<double> css_residuals(std::span<const double> working, const ArimaFit& coefficients) {
    const auto rec = make_recursion(coefficients);
    const std::size_t first = rec.max_ar_lag;
    if (working.size() <= first) throw DataError("series shorter than the autoregressive lag span");
    return innovations(working, rec, coefficients.intercept, first);
}

ArimaFit fit(std::span<const double> series, const ArimaSpec& spec, const FitOptions& options, FlopCounter* flops) {
    spec.validate();
    ArimaFit f;
    f.spec = spec;

    std::vector<double> current(series.begin(), series.end());
    for (std::size_t lag : spec.differencing_lags()) {
        if (current.size() <= lag) throw DataError("series too short for the requested differencing");
        f.stage_tails.emplace_back(current.end() - static_cast<std::ptrdiff_t>(lag), current.end());
        current = difference(current, lag, 1);
    }
    f.working_series = std::move(current);
    const auto& w = f.working_series;

    const std::size_t k = spec.parameter_count();
    if (w.size() < 10 * std::max<std::size_t>(k, 1)) {
        throw DataError(fmt::format("{} differenced values are too few to estimate {} parameters", w.size(), k));
    }

    std::vector<double> beta(k, 0.0);
    if (spec.intercept) beta[0] = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());

    unpack(spec, beta, f);
    const std::size_t first = make_recursion(f).max_ar_lag;
    if (w.size() <= first + k) throw DataError("series too short for the seasonal lag span");
    f.first_residual = first;

    std::uint64_t flops_per_eval = 0;
    auto residual_vector = [&](std::span<const double> b) {
        ArimaFit trial;
        trial.spec = spec;
        unpack(spec, b, trial);
        const auto rec = make_recursion(trial);
        if (flops_per_eval == 0) flops_per_eval = (w.size() - first) * (FlopCounter::kMac * (rec.ar.size() + rec.ma.size()) + 1);
        count(flops, flops_per_eval);
        return innovations(w, rec, trial.intercept, first);
    };
    auto sum_squares = [](const std::vector<double>& e) {
        double s = 0.0;
        for (double v : e) s += v * v;
        return s;
    };

    auto e = residual_vector(beta);
    double sse = sum_squares(e);
    const std::size_t m = e.size();
    bool converged = k == 0;
    std::size_t iter = 0;

    while (!converged && iter < options.max_iterations) {
        ++iter;
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(beta[j]));
            auto up = beta;
            auto down = beta;
            up[j] += h;
            down[j] -= h;
            const auto eu = residual_vector(up);
            const auto ed = residual_vector(down);
            for (std::size_t t = 0; t < m; ++t) {
                jac(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = (eu[t] - ed[t]) / (2.0 * h);
            }
        }
        const Eigen::Map<const Eigen::VectorXd> r(e.data(), static_cast<Eigen::Index>(m));
        const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);
        count(flops, 2 * m * k * k + 2 * m * k);

        bool improved = false;
        double scale = 1.0;
        for (std::size_t halving = 0; halving <= options.max_halvings; ++halving, scale *= 0.5) {
            std::vector<double> candidate(beta);
            for (std::size_t j = 0; j < k; ++j) candidate[j] += scale * step(static_cast<Eigen::Index>(j));
            auto ec = residual_vector(candidate);
            const double sc = sum_squares(ec);
            if (std::isfinite(sc) && sc < sse) {
                const double rel = (sse - sc) / std::max(sse, 1e-300);
                beta = std::move(candidate);
                e = std::move(ec);
                sse = sc;
                improved = true;
                if (rel < options.relative_tolerance) converged = true;
                break;
            }
        }
        // No descent left along the Gauss-Newton direction: at a minimum to rounding.
        if (!improved) converged = true;
    }

    unpack(spec, beta, f);
    f.residuals = std::move(e);
    f.sse = sse;
    f.iterations = iter;
    f.sigma2 = sse / static_cast<double>(m);
    f.near_unit_root = has_near_unit_root(f);
    if (!converged) {
        throw ArimaConvergenceError(
            fmt::format("{} did not converge in {} Gauss-Newton iterations (SSE {})", spec.describe(), iter, sse), f);
    }
    if (!(f.sigma2 > 0.0)) throw DegenerateError("ARIMA fit has zero residual variance");
    return f;
}

Diagnostics diagnose_residuals(std::span<const double> residuals, std::size_t lags, std::size_t fitted_parameters) {
    if (residuals.size() < 50) {
        throw DataError(fmt::format("diagnostics need at least 50 residuals, got {}", residuals.size()));
    }
    Diagnostics d;
    d.lags = std::min(lags, residuals.size() - 2);
    d.residual_acf = acf(residuals, d.lags);
    const double n = static_cast<double>(residuals.size());
    double q = 0.0;
    for (std::size_t k = 1; k <= d.lags; ++k) q += d.residual_acf[k] * d.residual_acf[k] / (n - static_cast<double>(k));
    d.ljung_box = n * (n + 2.0) * q;
    d.degrees_of_freedom = d.lags > fitted_parameters ? d.lags - fitted_parameters : 1;
    const boost::math::chi_squared dist(static_cast<double>(d.degrees_of_freedom));
    d.critical_95 = boost::math::quantile(dist, 0.95);
    d.p_value = boost::math::cdf(boost::math::complement(dist, d.ljung_box));
    d.residual_mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
    double var = 0.0;
    for (double v : residuals) var += (v - d.residual_mean) * (v - d.residual_mean);
    d.residual_variance = var / n;
    return d;
}

Diagnostics diagnostics(const ArimaFit& fit) {
    const bool seasonal = fit.spec.sp + fit.spec.sd + fit.spec.sq > 0;
    const std::size_t lags = seasonal ? 2 * fit.spec.season : 20;
    const std::size_t arma_params = fit.spec.p + fit.spec.q + fit.spec.sp + fit.spec.sq;
    return diagnose_residuals(fit.residuals, lags, arma_params);
}

std::vector<double> forecast_differenced(const ArimaFit& fit, std::size_t horizon) {
    if (horizon < 1) throw ConfigError("forecast horizon must be >= 1");
    const auto rec = make_recursion(fit);
    const std::size_t n = fit.working_series.size();
    if (fit.residuals.size() + fit.first_residual != n) throw DataError("fit residuals do not align with its series");
    if (n < std::max(rec.max_ar_lag, rec.max_ma_lag)) throw DataError("fit retains too little history to forecast");

    std::vector<double> w(fit.working_series);
    std::vector<double> e(n + horizon, 0.0);
    std::copy(fit.residuals.begin(), fit.residuals.end(), e.begin() + static_cast<std::ptrdiff_t>(fit.first_residual));
    w.resize(n + horizon, 0.0);
    for (std::size_t t = n; t < n + horizon; ++t) {
        double v = fit.intercept;
        for (const auto& [lag, a] : rec.ar) v += a * w[t - lag];
        for (const auto& [lag, m] : rec.ma) v += m * e[t - lag];
        w[t] = v;
    }
    return std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(n), w.end());
}

std::vector<double> forecast(const ArimaFit& fit, std::size_t horizon) {
    auto values = forecast_differenced(fit, horizon);
    const auto lags = fit.spec.differencing_lags();
    if (lags.size() != fit.stage_tails.size()) throw DataError("fit is missing differencing anchors");
    for (std::size_t stage = lags.size(); stage-- > 0;) {
        values = undifference(values, fit.stage_tails[stage], lags[stage]);
    }
    return values;
}

void write_snapshot(const ArimaFit& fit, std::ostream& out) {
    text::Writer w(out);
    const auto& s = fit.spec;
    w.header("demandcast-arima", 1);
    w.line("orders", fmt::format("{} {} {} {} {} {} {} {} {}", s.p, s.d, s.q, s.sp, s.sd, s.sq, s.season,
                                 s.pre_diff_lag, s.intercept ? 1 : 0));
    w.line_real("intercept", fit.intercept);
    w.line_reals("ar", fit.ar);
    w.line_reals("ma", fit.ma);
    w.line_reals("seasonal_ar", fit.seasonal_ar);
    w.line_reals("seasonal_ma", fit.seasonal_ma);
    w.line_real("sigma2", fit.sigma2);
    // Enough history for the recursion: the longest AR/MA lag.
    const auto rec = make_recursion(fit);
    const std::size_t keep = std::min(fit.working_series.size(), std::max<std::size_t>({rec.max_ar_lag, rec.max_ma_lag, 1}));
    const std::size_t n = fit.working_series.size();
    std::vector<double> e_tail(keep, 0.0);
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t t = n - keep + i;
        if (t >= fit.first_residual) e_tail[i] = fit.residuals[t - fit.first_residual];
    }
    w.line("history", static_cast<long long>(keep));
    w.line_reals("working", std::span<const double>(fit.working_series).subspan(n - keep));
    w.line_reals("innovations", e_tail);
    w.line("stages", static_cast<long long>(fit.stage_tails.size()));
    for (const auto& tail : fit.stage_tails) w.line_reals("anchor", tail);
    w.line("end", "arima");
}

ArimaFit read_arima_snapshot(std::istream& in) {
    text::Reader r(in);
    if (const int v = r.header("demandcast-arima"); v != 1) {
        throw ParseError(fmt::format("unsupported ARIMA snapshot version {}", v));
    }
    ArimaFit f;
    const auto o = r.expect("orders");
    if (o.size() != 9) throw ParseError("orders line needs 9 values");
    auto u = [&](std::size_t i) { return static_cast<std::size_t>(text::parse_integer(o[i])); };
    f.spec = ArimaSpec{u(0), u(1), u(2), u(3), u(4), u(5), u(6), u(7), u(8) != 0};
    f.spec.validate();
    f.intercept = r.expect_real("intercept");
    f.ar = r.expect_reals("ar", f.spec.p);
    f.ma = r.expect_reals("ma", f.spec.q);
    f.seasonal_ar = r.expect_reals("seasonal_ar", f.spec.sp);
    f.seasonal_ma = r.expect_reals("seasonal_ma", f.spec.sq);
    f.sigma2 = r.expect_real("sigma2");
    const auto keep = static_cast<std::size_t>(r.expect_integer("history"));
    f.working_series = r.expect_reals("working", keep);
    f.residuals = r.expect_reals("innovations", keep);
    f.first_residual = 0;
    const auto stages = static_cast<std::size_t>(r.expect_integer("stages"));
    const auto lags = f.spec.differencing_lags();
    if (stages != lags.size()) throw ParseError("stage count does not match the differencing orders");
    for (std::size_t i = 0; i < stages; ++i) f.stage_tails.push_back(r.expect_reals("anchor", lags[i]));
    r.expect("end");
    f.near_unit_root = has_near_unit_root(f);
    return f;
}

}  // namespace demandcast::arima
