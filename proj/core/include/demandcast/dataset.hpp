#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace demandcast::dataset {

using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

constexpr std::size_t kPeriodsPerDay = 48;
constexpr std::size_t kFeatureCount = 6;
constexpr const char* kCsvHeader = "timestamp,demand_mwh,tmin_c,tmax_c";

/// One half-hourly observation. Temperatures are the day's extremes.
struct DemandRecord {
    Timestamp timestamp;
    double demand = 0.0;
    double tmin = 0.0;
    double tmax = 0.0;

    friend bool operator==(const DemandRecord&, const DemandRecord&) = default;
};

enum Feature : std::size_t { tmin = 0, tmax, prev_day_demand, half_hour, season, day_of_week };

/// Human-readable feature names, in Feature order.
const std::array<std::string, kFeatureCount>& feature_names();
inline constexpr const char* kTargetName = "electricity demand";

struct FeatureVector {
    std::array<double, kFeatureCount> x{};
    double y = 0.0;
};

/// "YYYY-MM-DDTHH:MM[:SS]" (a space may replace the T). Must fall on a half hour.
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

/// Reads `timestamp,demand_mwh,tmin_c,tmax_c` rows. Throws GapError on a
/// missing or repeated half hour, ParseError on malformed fields and
/// DataError when a row violates tmax >= tmin or demand >= 0.
std::vector<DemandRecord> parse_csv(std::istream& in);
std::vector<DemandRecord> read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, std::span<const DemandRecord> records);

std::size_t half_hour_of_day(Timestamp t);
/// Monday = 0 ... Sunday = 6.
std::size_t weekday_index(Timestamp t);
/// Southern hemisphere: Dec-Feb summer = 0, autumn = 1, winter = 2, spring = 3.
std::size_t season_index(Timestamp t);

/// Raw (unnormalized) features of record `index`; needs a previous-day lookback.
FeatureVector encode_features(std::span<const DemandRecord> records, std::size_t index);

/// Per-variable min-max scaling learned from training vectors.
struct NormStats {
    std::array<double, kFeatureCount> min{};
    std::array<double, kFeatureCount> max{};
    double y_min = 0.0;
    double y_max = 1.0;

    [[nodiscard]] double normalize_target(double y) const;
    [[nodiscard]] double denormalize_target(double y) const;
};

NormStats fit_norm(std::span<const FeatureVector> train);
/// Maps inputs onto [0, 1] with clamping; the target is scaled but not clamped.
FeatureVector apply_norm(const FeatureVector& v, const NormStats& stats);

void write_norm(const NormStats& stats, std::ostream& out);
NormStats read_norm(std::istream& in);

/// `n_samples` independent uniform samples without replacement from
/// [0, population), each of round(fraction * population) indices, sorted.
std::vector<std::vector<std::size_t>> sample_training(std::size_t population, double fraction, std::uint64_t seed,
                                                      std::size_t n_samples);

/// Parameters of the synthetic half-hourly demand generator.
struct SynthConfig {
    std::string start_date = "1995-01-27";
    double base_mwh = 4700.0;
    double daily_amplitude_mwh = 1100.0;
    double peak_half_hour = 25.0;
    double weekend_drop_mwh = 500.0;
    double heating_threshold_c = 15.0;
    double heating_mwh_per_c = 60.0;
    double cooling_threshold_c = 25.0;
    double cooling_mwh_per_c = 80.0;
    double tmax_mean_c = 21.0;
    double tmax_amplitude_c = 6.0;
    double hottest_day_of_year = 20.0;
    double diurnal_range_c = 9.0;
    double temperature_noise_c = 3.0;
    double noise_mwh = 60.0;
};

/// Flat `key = value` text; unknown keys are rejected.
SynthConfig parse_synth_config(std::istream& in);
SynthConfig read_synth_config(const std::filesystem::path& path);

/// Deterministic synthetic series of `days` whole days from config.start_date.
std::vector<DemandRecord> synthesize(std::size_t days, std::uint64_t seed, const SynthConfig& config = {});

}  // namespace demandcast::dataset
