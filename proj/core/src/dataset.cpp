#include "demandcast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "demandcast/error.hpp"
#include "demandcast/text_format.hpp"

namespace demandcast::dataset {

using namespace std::chrono;

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "minimum temperature", "maximum temperature", "previous day's demand",
        "half-hour period",    "season",              "day of week"};
    return names;
}

namespace {

int parse_field_int(const std::string& text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw ParseError(fmt::format("bad timestamp '{}'", text));
    const auto value = text::parse_integer(std::string_view(text).substr(pos, len));
    return static_cast<int>(value);
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    return s.substr(start);
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
    // YYYY-MM-DDTHH:MM with optional :SS
    if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':') {
        throw ParseError(fmt::format("bad timestamp '{}'", text));
    }
    const int y = parse_field_int(text, 0, 4);
    const int mo = parse_field_int(text, 5, 2);
    const int d = parse_field_int(text, 8, 2);
    const int h = parse_field_int(text, 11, 2);
    const int mi = parse_field_int(text, 14, 2);
    int sec = 0;
    if (text.size() > 16) {
        if (text.size() != 19 || text[16] != ':') throw ParseError(fmt::format("bad timestamp '{}'", text));
        sec = parse_field_int(text, 17, 2);
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) throw ParseError(fmt::format("bad timestamp '{}'", text));
    if (sec != 0 || mi % 30 != 0) throw ParseError(fmt::format("timestamp '{}' is not on a half hour", text));
    return sys_days{ymd} + hours{h} + minutes{mi};
}

std::string format_timestamp(Timestamp t) {
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const auto mins = (t - day_start).count();
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:00", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), mins / 60, mins % 60);
}

std::vector<DemandRecord> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCsvHeader) {
        throw ParseError(fmt::format("line 1: expected header '{}'", kCsvHeader));
    }
    std::vector<DemandRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::array<std::string, 4> fields;
        std::stringstream ss(line);
        std::size_t n = 0;
        for (std::string f; std::getline(ss, f, ',');) {
            if (n == fields.size()) throw ParseError(fmt::format("line {}: too many fields", line_no));
            fields[n++] = trim(f);
        }
        if (n != fields.size()) throw ParseError(fmt::format("line {}: expected 4 fields, found {}", line_no, n));
        DemandRecord r;
        try {
            r.timestamp = parse_timestamp(fields[0]);
            r.demand = text::parse_real(fields[1]);
            r.tmin = text::parse_real(fields[2]);
            r.tmax = text::parse_real(fields[3]);
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("line {}: {}", line_no, e.what()));
        }
        if (!std::isfinite(r.demand) || r.demand < 0.0) throw DataError(fmt::format("line {}: negative demand", line_no));
        if (!(r.tmax >= r.tmin)) throw DataError(fmt::format("line {}: tmax {} below tmin {}", line_no, r.tmax, r.tmin));
        if (!records.empty()) {
            const auto step = r.timestamp - records.back().timestamp;
            if (step != minutes{30}) {
                throw GapError(fmt::format("line {}: {} follows {} (expected a 30 minute step)", line_no,
                                           fields[0], format_timestamp(records.back().timestamp)));
            }
        }
        records.push_back(r);
    }
    return records;
}

std::vector<DemandRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return parse_csv(in);
}

void write_csv(std::ostream& out, std::span<const DemandRecord> records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << format_timestamp(r.timestamp) << ',' << text::format_real(r.demand) << ','
            << text::format_real(r.tmin) << ',' << text::format_real(r.tmax) << '\n';
    }
}

std::size_t half_hour_of_day(Timestamp t) {
    const auto mins = (t - floor<days>(t)).count();
    return static_cast<std::size_t>(mins / 30);
}

std::size_t weekday_index(Timestamp t) {
    return weekday{floor<days>(t)}.iso_encoding() - 1;
}

std::size_t season_index(Timestamp t) {
    const unsigned m = static_cast<unsigned>(year_month_day{floor<days>(t)}.month());
    return (m % 12) / 3;
}

FeatureVector encode_features(std::span<const DemandRecord> records, std::size_t index) {
    if (index >= records.size()) throw IndexError(fmt::format("record {} outside {} records", index, records.size()));
    if (index < kPeriodsPerDay) {
        throw DataError(fmt::format("record {} has no previous-day lookback (needs index >= {})", index,
                                    kPeriodsPerDay));
    }
    const auto& r = records[index];
    FeatureVector v;
    v.x[Feature::tmin] = r.tmin;
    v.x[Feature::tmax] = r.tmax;
    v.x[Feature::prev_day_demand] = records[index - kPeriodsPerDay].demand;
    v.x[Feature::half_hour] = static_cast<double>(half_hour_of_day(r.timestamp));
    v.x[Feature::season] = static_cast<double>(season_index(r.timestamp));
    v.x[Feature::day_of_week] = static_cast<double>(weekday_index(r.timestamp));
    v.y = r.demand;
    return v;
}

double NormStats::normalize_target(double y) const { return (y - y_min) / (y_max - y_min); }
double NormStats::denormalize_target(double y) const { return y_min + y * (y_max - y_min); }

NormStats fit_norm(std::span<const FeatureVector> train) {
    if (train.empty()) throw DataError("cannot fit normalization on an empty training set");
    NormStats s;
    s.min = train.front().x;
    s.max = train.front().x;
    s.y_min = s.y_max = train.front().y;
    for (const auto& v : train) {
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            s.min[i] = std::min(s.min[i], v.x[i]);
            s.max[i] = std::max(s.max[i], v.x[i]);
        }
        s.y_min = std::min(s.y_min, v.y);
        s.y_max = std::max(s.y_max, v.y);
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!(s.max[i] > s.min[i])) {
            throw DegenerateError(fmt::format("training variable '{}' is constant", feature_names()[i]));
        }
    }
    if (!(s.y_max > s.y_min)) throw DegenerateError(fmt::format("training variable '{}' is constant", kTargetName));
    return s;
}

FeatureVector apply_norm(const FeatureVector& v, const NormStats& stats) {
    FeatureVector out;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        out.x[i] = std::clamp((v.x[i] - stats.min[i]) / (stats.max[i] - stats.min[i]), 0.0, 1.0);
    }
    out.y = stats.normalize_target(v.y);
    return out;
}

void write_norm(const NormStats& stats, std::ostream& out) {
    text::Writer w(out);
    w.header("demandcast-norm", 1);
    w.line_reals("min", stats.min);
    w.line_reals("max", stats.max);
    w.line_reals("target", std::array{stats.y_min, stats.y_max});
}

NormStats read_norm(std::istream& in) {
    text::Reader r(in);
    if (const int v = r.header("demandcast-norm"); v != 1) {
        throw ParseError(fmt::format("unsupported normalization version {}", v));
    }
    NormStats s;
    const auto lo = r.expect_reals("min", kFeatureCount);
    const auto hi = r.expect_reals("max", kFeatureCount);
    std::copy(lo.begin(), lo.end(), s.min.begin());
    std::copy(hi.begin(), hi.end(), s.max.begin());
    const auto t = r.expect_reals("target", 2);
    s.y_min = t[0];
    s.y_max = t[1];
    return s;
}

std::vector<std::vector<std::size_t>> sample_training(std::size_t population, double fraction, std::uint64_t seed,
                                                      std::size_t n_samples) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError(fmt::format("sampling fraction must lie in (0, 1], got {}", fraction));
    }
    if (population == 0) throw DataError("cannot sample from an empty pool");
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(population))));

    std::vector<std::vector<std::size_t>> samples;
    samples.reserve(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(s)};
        std::mt19937_64 rng(seq);
        std::vector<std::size_t> pool(population);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, population - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(take);
        std::sort(pool.begin(), pool.end());
        samples.push_back(std::move(pool));
    }
    return samples;
}

}  // namespace demandcast::dataset
