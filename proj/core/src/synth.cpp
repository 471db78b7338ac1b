#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "demandcast/dataset.hpp"
#include "demandcast/error.hpp"
#include "demandcast/text_format.hpp"

namespace demandcast::dataset {

using namespace std::chrono;

namespace {

std::string strip(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Gaussian draw truncated at 4 standard deviations.
double truncated_normal(std::mt19937_64& rng, double sigma) {
    std::normal_distribution<double> dist(0.0, 1.0);
    double z = dist(rng);
    while (std::abs(z) > 4.0) z = dist(rng);
    return sigma * z;
}

}  // namespace

SynthConfig parse_synth_config(std::istream& in) {
    SynthConfig c;
    const std::map<std::string, double*> reals = {
        {"base_mwh", &c.base_mwh},
        {"daily_amplitude_mwh", &c.daily_amplitude_mwh},
        {"peak_half_hour", &c.peak_half_hour},
        {"weekend_drop_mwh", &c.weekend_drop_mwh},
        {"heating_threshold_c", &c.heating_threshold_c},
        {"heating_mwh_per_c", &c.heating_mwh_per_c},
        {"cooling_threshold_c", &c.cooling_threshold_c},
        {"cooling_mwh_per_c", &c.cooling_mwh_per_c},
        {"tmax_mean_c", &c.tmax_mean_c},
        {"tmax_amplitude_c", &c.tmax_amplitude_c},
        {"hottest_day_of_year", &c.hottest_day_of_year},
        {"diurnal_range_c", &c.diurnal_range_c},
        {"temperature_noise_c", &c.temperature_noise_c},
        {"noise_mwh", &c.noise_mwh},
    };
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(fmt::format("config line {}: expected key = value", line_no));
        const auto key = strip(line.substr(0, eq));
        const auto value = strip(line.substr(eq + 1));
        if (key == "start_date") {
            parse_timestamp(value + "T00:00");
            c.start_date = value;
        } else if (auto it = reals.find(key); it != reals.end()) {
            *it->second = text::parse_real(value);
        } else {
            throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
        }
    }
    return c;
}

SynthConfig read_synth_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return parse_synth_config(in);
}

std::vector<DemandRecord> synthesize(std::size_t n_days, std::uint64_t seed, const SynthConfig& config) {
    if (n_days < 2) throw ConfigError("synthetic series needs at least 2 days");
    const Timestamp start = parse_timestamp(config.start_date + "T00:00");
    std::mt19937_64 rng(seed);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    std::vector<DemandRecord> out;
    out.reserve(n_days * kPeriodsPerDay);
    for (std::size_t d = 0; d < n_days; ++d) {
        const sys_days day = floor<days>(start) + std::chrono::days{static_cast<int>(d)};
        const year_month_day ymd{day};
        const auto day_of_year = (day - sys_days{ymd.year() / January / 1}).count();
        const double seasonal =
            std::cos(two_pi * (static_cast<double>(day_of_year) - config.hottest_day_of_year) / 365.25);
        const double tmax = config.tmax_mean_c + config.tmax_amplitude_c * seasonal +
                            truncated_normal(rng, config.temperature_noise_c);
        const double range = std::max(2.0, config.diurnal_range_c + truncated_normal(rng, config.temperature_noise_c / 2));
        const double tmin = tmax - range;

        const double heating = config.heating_mwh_per_c * std::max(0.0, config.heating_threshold_c - tmin);
        const double cooling = config.cooling_mwh_per_c * std::max(0.0, tmax - config.cooling_threshold_c);
        const bool weekend = weekday{day}.iso_encoding() >= 6;
        const double level = config.base_mwh + heating + cooling - (weekend ? config.weekend_drop_mwh : 0.0);

        for (std::size_t h = 0; h < kPeriodsPerDay; ++h) {
            const double phase = two_pi * (static_cast<double>(h) - config.peak_half_hour) / kPeriodsPerDay;
            const double demand =
                level + config.daily_amplitude_mwh * std::cos(phase) + truncated_normal(rng, config.noise_mwh);
            DemandRecord r;
            r.timestamp = day + minutes{30 * static_cast<int>(h)};
            r.demand = std::max(demand, 1.0);
            r.tmin = tmin;
            r.tmax = tmax;
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace demandcast::dataset
