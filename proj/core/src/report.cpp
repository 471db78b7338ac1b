#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include <fmt/format.h>

#include "demandcast/bench.hpp"
#include "demandcast/error.hpp"
#include "demandcast/text_format.hpp"

namespace demandcast::bench {

namespace {

std::string column_name(ModelKind kind) {
    std::string s = to_string(kind);
    std::ranges::replace(s, '-', '_');
    return s;
}

std::string opt_real(const std::optional<double>& v) { return v ? text::format_real(*v) : "-"; }

std::string opt_size(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "-"; }

std::string gflops(std::uint64_t flops) { return text::format_real(static_cast<double>(flops) * 1e-9); }

std::size_t worst_sample(const ModelReport& m) {
    std::size_t worst = 0;
    for (std::size_t s = 1; s < m.samples.size(); ++s) {
        if (m.samples[s].testing_rmse > m.samples[worst].testing_rmse) worst = s;
    }
    return worst;
}

std::optional<std::size_t> headline_epochs(const ModelReport& m) {
    if (m.kind == ModelKind::arima) return std::nullopt;
    std::optional<std::size_t> most;
    for (const auto& s : m.samples) {
        if (s.learning_epochs && (!most || *s.learning_epochs > *most)) most = s.learning_epochs;
    }
    return most;
}

std::optional<std::size_t> most_nodes(const ModelReport& m) {
    std::optional<std::size_t> most;
    for (const auto& s : m.samples) {
        if (s.rule_nodes && (!most || *s.rule_nodes > *most)) most = s.rule_nodes;
    }
    return most;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << body;
    out.close();
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace

std::string render_report_csv(const BenchReport& report) {
    const std::size_t n = report.models.empty() ? 0 : report.models.front().samples.size();
    std::string out = "model,learning_epochs,training_rmse_norm_worst,testing_rmse_norm_worst,gflops_worst,rule_nodes";
    for (std::size_t s = 1; s <= n; ++s) {
        out += fmt::format(",s{0}_training_rmse_norm,s{0}_testing_rmse_norm,s{0}_gflops", s);
    }
    out += '\n';
    for (const auto& m : report.models) {
        out += fmt::format("{},{},{},{},{},{}", to_string(m.kind), opt_size(headline_epochs(m)),
                           opt_real(m.worst_training_rmse()), text::format_real(m.worst_testing_rmse()),
                           gflops(m.worst_flops()), opt_size(most_nodes(m)));
        for (const auto& s : m.samples) {
            out += fmt::format(",{},{},{}", opt_real(s.training_rmse), text::format_real(s.testing_rmse),
                               gflops(s.flops));
        }
        out += '\n';
    }
    return out;
}

std::string render_forecast_csv(const BenchReport& report) {
    std::string out = "period,timestamp,actual_mwh";
    for (const auto& m : report.models) out += fmt::format(",{}_mwh", column_name(m.kind));
    out += '\n';
    for (std::size_t k = 0; k < report.actual.size(); ++k) {
        out += fmt::format("{},{},{}", k + 1, dataset::format_timestamp(report.forecast_times[k]),
                           text::format_real(report.actual[k]));
        for (const auto& m : report.models) {
            out += ',';
            out += text::format_real(m.samples[worst_sample(m)].forecast.at(k));
        }
        out += '\n';
    }
    return out;
}

std::string render_convergence_csv(const BenchReport& report) {
    std::string out = "trainer,epoch,training_rmse_norm\n";
    for (const auto& m : report.models) {
        if (m.kind != ModelKind::mlp_bp && m.kind != ModelKind::mlp_scg) continue;
        const auto& trace = m.samples.front().convergence;
        for (std::size_t e = 0; e < trace.size(); ++e) {
            out += fmt::format("{},{},{}\n", to_string(m.kind), e + 1, text::format_real(trace[e]));
        }
    }
    return out;
}

std::string render_forecast_svg(const BenchReport& report) {
    constexpr double width = 960, height = 480, left = 80, right = 170, top = 30, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    struct Series {
        std::string label;
        std::string color;
        const std::vector<double>* values;
    };
    std::vector<Series> series = {{"actual", "#000000", &report.actual}};
    const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
    for (std::size_t i = 0; i < report.models.size(); ++i) {
        const auto& m = report.models[i];
        series.push_back({to_string(m.kind), palette[i % palette.size()], &m.samples[worst_sample(m)].forecast});
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        for (const double v : *s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const std::size_t points = report.actual.size();
    const auto px = [&](std::size_t k) {
        return left + (points > 1 ? plot_w * static_cast<double>(k) / static_cast<double>(points - 1) : 0.0);
    };
    const auto py = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
        width, height);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888888\"/>\n",
                       left, top, plot_w, plot_h);
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.0f}</text>\n", left - 6,
                           py(v) + 4, v);
    }
    for (std::size_t k = 0; k < points; k += 12) {
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", px(k),
                           top + plot_h + 18, k + 1);
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">half-hour period</text>\n",
                       left + plot_w / 2, height - 10);
    out += fmt::format("<text x=\"16\" y=\"{:.1f}\" transform=\"rotate(-90 16 {:.1f})\" "
                       "text-anchor=\"middle\">demand (MWh)</text>\n",
                       top + plot_h / 2, top + plot_h / 2);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", s.color);
        for (std::size_t k = 0; k < s.values->size(); ++k) {
            out += fmt::format("{}{:.2f},{:.2f}", k ? " " : "", px(k), py((*s.values)[k]));
        }
        out += "\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(i);
        out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" "
                           "stroke-width=\"2\"/>\n",
                           left + plot_w + 15, ly, left + plot_w + 40, s.color);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", left + plot_w + 46, ly + 4, s.label);
    }
    out += "</svg>\n";
    return out;
}

std::string render_summary(const BenchReport& report) {
    std::string out = "Demand forecasting comparison\n\n";
    out += fmt::format("training period: {} half-hours; examples per sample: {}; forecast window: {} half-hours\n\n",
                       report.training_period, report.training_examples, report.actual.size());
    out += fmt::format("{:<9} {:>8} {:>15} {:>15} {:>14}\n", "model", "epochs", "train RMSE*", "test RMSE*",
                       "Gflops");
    for (const auto& m : report.models) {
        const auto train = m.worst_training_rmse();
        out += fmt::format("{:<9} {:>8} {:>15} {:>15.6g} {:>14.6g}\n", to_string(m.kind), opt_size(headline_epochs(m)),
                           train ? fmt::format("{:.6g}", *train) : "-", m.worst_testing_rmse(),
                           static_cast<double>(m.worst_flops()) * 1e-9);
    }
    out += "* normalized target scale, worst over samples\n\nPer sample:\n";
    for (const auto& m : report.models) {
        for (std::size_t s = 0; s < m.samples.size(); ++s) {
            const auto& r = m.samples[s];
            out += fmt::format("  {:<9} sample {}: epochs {}, train {}, test {:.6g}, Gflops {:.6g}", to_string(m.kind),
                               s + 1, opt_size(r.learning_epochs),
                               r.training_rmse ? fmt::format("{:.6g}", *r.training_rmse) : "-", r.testing_rmse,
                               static_cast<double>(r.flops) * 1e-9);
            if (r.rule_nodes) out += fmt::format(", rule nodes {}", *r.rule_nodes);
            out += '\n';
        }
    }
    if (report.arima_fit) {
        const auto& f = *report.arima_fit;
        out += fmt::format("\nARIMA {}\n", report.arima_description);
        const auto list = [](const std::vector<double>& v) {
            std::string s;
            for (const double x : v) s += fmt::format(" {:.6g}", x);
            return s.empty() ? std::string(" none") : s;
        };
        out += fmt::format("  ar:{}\n  ma:{}\n  seasonal ar:{}\n  seasonal ma:{}\n", list(f.ar), list(f.ma),
                           list(f.seasonal_ar), list(f.seasonal_ma));
        if (f.spec.intercept) out += fmt::format("  intercept: {:.6g}\n", f.intercept);
        out += fmt::format("  sigma2 {:.6g}, Gauss-Newton iterations {}, near unit root: {}\n", f.sigma2, f.iterations,
                           f.near_unit_root ? "yes" : "no");
    }
    if (report.arima_diagnostics) {
        const auto& d = *report.arima_diagnostics;
        out += fmt::format("  Ljung-Box Q({}) = {:.6g}, df {}, p = {:.4g}, 95% critical {:.6g}: {}\n", d.lags,
                           d.ljung_box, d.degrees_of_freedom, d.p_value, d.critical_95,
                           d.adequate() ? "residuals consistent with white noise" : "residual correlation remains");
        out += fmt::format("  residual mean {:.6g}, variance {:.6g}\n", d.residual_mean, d.residual_variance);
    }
    out += "\nNotes:\n";
    for (const auto& n : report.notes) out += fmt::format("  - {}\n", n);
    return out;
}

void emit_report(const BenchReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

    write_file(dir / "report.csv", render_report_csv(report));
    write_file(dir / "report.txt", render_summary(report));
    write_file(dir / "forecast.csv", render_forecast_csv(report));
    write_file(dir / "forecast.svg", render_forecast_svg(report));
    write_file(dir / "convergence.csv", render_convergence_csv(report));

    std::string timing = "model,sample,wall_seconds\n";
    for (const auto& m : report.models) {
        for (std::size_t s = 0; s < m.samples.size(); ++s) {
            timing += fmt::format("{},{},{:.6f}\n", to_string(m.kind), s + 1, m.samples[s].wall_seconds);
        }
    }
    write_file(dir / "timing.csv", timing);
}

}  // namespace demandcast::bench
