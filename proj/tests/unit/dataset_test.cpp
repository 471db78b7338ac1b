#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "demandcast/dataset.hpp"
#include "demandcast/error.hpp"

namespace dc = demandcast;
namespace ds = demandcast::dataset;

namespace {

std::vector<ds::DemandRecord> parse(const std::string& body) {
    std::istringstream in(body);
    return ds::parse_csv(in);
}

ds::Timestamp at(const std::string& text) { return ds::parse_timestamp(text); }

/// Mean demand per half hour of day over a series.
std::vector<double> daily_profile(const std::vector<ds::DemandRecord>& r) {
    std::vector<double> sum(ds::kPeriodsPerDay, 0.0);
    std::vector<double> n(ds::kPeriodsPerDay, 0.0);
    for (const auto& rec : r) {
        const auto h = ds::half_hour_of_day(rec.timestamp);
        sum[h] += rec.demand;
        n[h] += 1.0;
    }
    for (std::size_t h = 0; h < sum.size(); ++h) sum[h] /= n[h];
    return sum;
}

}  // namespace

TEST(Csv, ParsesRows) {
    const auto r = parse(
        "timestamp,demand_mwh,tmin_c,tmax_c\n"
        "1995-01-27T00:00,4500.5,14,27\n"
        "1995-01-27 00:30,4400,14,27\n");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].demand, 4500.5);
    EXPECT_EQ(r[1].tmax, 27.0);
    EXPECT_EQ(ds::format_timestamp(r[1].timestamp), "1995-01-27T00:30:00");
}

TEST(Csv, RejectsGapsAndDuplicates) {
    EXPECT_THROW(parse("timestamp,demand_mwh,tmin_c,tmax_c\n"
                       "1995-01-27T00:00,1,1,2\n"
                       "1995-01-27T01:00,1,1,2\n"),
                 dc::GapError);
    EXPECT_THROW(parse("timestamp,demand_mwh,tmin_c,tmax_c\n"
                       "1995-01-27T00:00,1,1,2\n"
                       "1995-01-27T00:00,1,1,2\n"),
                 dc::GapError);
}

TEST(Csv, RejectsBadRows) {
    const std::string h = "timestamp,demand_mwh,tmin_c,tmax_c\n";
    EXPECT_THROW(parse(h + "1995-01-27T00:00,1,5,2\n"), dc::DataError);
    EXPECT_THROW(parse(h + "1995-01-27T00:00,-1,1,2\n"), dc::DataError);
    EXPECT_THROW(parse(h + "1995-01-27T00:00,x,1,2\n"), dc::ParseError);
    EXPECT_THROW(parse(h + "1995-01-27T00:00,1,1\n"), dc::ParseError);
    EXPECT_THROW(parse(h + "1995-01-27T00:15,1,1,2\n"), dc::ParseError);
    EXPECT_THROW(parse("time,demand\n"), dc::ParseError);
}

TEST(Csv, WriteParseRoundTrip) {
    const auto r = ds::synthesize(3, 5);
    std::stringstream ss;
    ds::write_csv(ss, r);
    EXPECT_EQ(ds::parse_csv(ss), r);
}

TEST(Calendar, Indices) {
    EXPECT_EQ(ds::half_hour_of_day(at("1995-01-27T09:00")), 18u);
    EXPECT_EQ(ds::half_hour_of_day(at("1995-01-27T23:30")), 47u);
    EXPECT_EQ(ds::weekday_index(at("1995-01-30T00:00")), 0u);  // Monday
    EXPECT_EQ(ds::weekday_index(at("1995-01-29T00:00")), 6u);  // Sunday
    EXPECT_EQ(ds::season_index(at("1995-01-15T00:00")), 0u);
    EXPECT_EQ(ds::season_index(at("1995-04-15T00:00")), 1u);
    EXPECT_EQ(ds::season_index(at("1995-07-15T00:00")), 2u);
    EXPECT_EQ(ds::season_index(at("1995-10-15T00:00")), 3u);
    EXPECT_EQ(ds::season_index(at("1995-12-01T00:00")), 0u);
}

TEST(Encoding, UsesPreviousDayDemand) {
    const auto r = ds::synthesize(3, 7);
    const auto v = ds::encode_features(r, 60);
    EXPECT_EQ(v.x[ds::Feature::prev_day_demand], r[12].demand);
    EXPECT_EQ(v.x[ds::Feature::half_hour], 12.0);
    EXPECT_EQ(v.x[ds::Feature::tmin], r[60].tmin);
    EXPECT_EQ(v.y, r[60].demand);
    EXPECT_THROW(ds::encode_features(r, 47), dc::DataError);
    EXPECT_THROW(ds::encode_features(r, r.size()), dc::IndexError);
}

TEST(Normalization, ScalesToUnitInterval) {
    const auto r = ds::synthesize(90, 8);
    std::vector<ds::FeatureVector> v;
    for (std::size_t t = ds::kPeriodsPerDay; t < r.size(); ++t) v.push_back(ds::encode_features(r, t));
    const auto stats = ds::fit_norm(v);
    for (const auto& f : v) {
        const auto n = ds::apply_norm(f, stats);
        for (const double x : n.x) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
        EXPECT_GE(n.y, 0.0);
        EXPECT_LE(n.y, 1.0);
        EXPECT_NEAR(stats.denormalize_target(n.y), f.y, 1e-9);
    }
}

TEST(Normalization, ClampsInputsButNotTarget) {
    ds::NormStats s;
    s.min.fill(0.0);
    s.max.fill(10.0);
    s.y_min = 0.0;
    s.y_max = 10.0;
    ds::FeatureVector f;
    f.x.fill(20.0);
    f.y = 20.0;
    const auto n = ds::apply_norm(f, s);
    EXPECT_EQ(n.x[0], 1.0);
    EXPECT_EQ(n.y, 2.0);
}

TEST(Normalization, RejectsConstantVariables) {
    std::vector<ds::FeatureVector> v(3);
    EXPECT_THROW(ds::fit_norm(v), dc::DegenerateError);
    EXPECT_THROW(ds::fit_norm(std::vector<ds::FeatureVector>{}), dc::DataError);
}

TEST(Normalization, SnapshotRoundTrip) {
    const auto r = ds::synthesize(40, 9);
    std::vector<ds::FeatureVector> v;
    for (std::size_t t = ds::kPeriodsPerDay; t < r.size(); ++t) v.push_back(ds::encode_features(r, t));
    const auto stats = ds::fit_norm(v);
    std::stringstream ss;
    ds::write_norm(stats, ss);
    const auto back = ds::read_norm(ss);
    EXPECT_EQ(back.min, stats.min);
    EXPECT_EQ(back.max, stats.max);
    EXPECT_EQ(back.y_min, stats.y_min);
    EXPECT_EQ(back.y_max, stats.y_max);
}

TEST(Sampling, SizesAndUniqueness) {
    const auto s = ds::sample_training(14685, 0.2, 42, 3);
    ASSERT_EQ(s.size(), 3u);
    for (const auto& sample : s) {
        EXPECT_EQ(sample.size(), 2937u);
        EXPECT_TRUE(std::is_sorted(sample.begin(), sample.end()));
        EXPECT_EQ(std::set<std::size_t>(sample.begin(), sample.end()).size(), sample.size());
        EXPECT_LT(sample.back(), 14685u);
    }
    EXPECT_NE(s[0], s[1]);
    EXPECT_EQ(s, ds::sample_training(14685, 0.2, 42, 3));
    EXPECT_NE(s, ds::sample_training(14685, 0.2, 43, 3));
}

TEST(Sampling, RoughlyUniform) {
    const std::size_t population = 1000;
    std::vector<double> hits(10, 0.0);
    for (const auto& sample : ds::sample_training(population, 0.5, 1, 200)) {
        for (const auto i : sample) hits[i / 100] += 1.0;
    }
    for (const double h : hits) EXPECT_NEAR(h / (200.0 * 50.0), 1.0, 0.03);
}

TEST(Sampling, Errors) {
    EXPECT_THROW(ds::sample_training(10, 0.0, 1, 1), dc::ConfigError);
    EXPECT_THROW(ds::sample_training(10, 1.5, 1, 1), dc::ConfigError);
    EXPECT_THROW(ds::sample_training(0, 0.5, 1, 1), dc::DataError);
}

TEST(Synthetic, ShapeAndDeterminism) {
    const auto a = ds::synthesize(7, 3);
    EXPECT_EQ(a.size(), 7u * 48);
    EXPECT_EQ(a, ds::synthesize(7, 3));
    EXPECT_NE(a, ds::synthesize(7, 4));
    EXPECT_EQ(ds::format_timestamp(a.front().timestamp), "1995-01-27T00:00:00");
    for (std::size_t t = 1; t < a.size(); ++t) EXPECT_EQ((a[t].timestamp - a[t - 1].timestamp).count(), 30);
}

TEST(Synthetic, PlausibleYear) {
    const auto r = ds::synthesize(365, 11);
    for (const auto& rec : r) {
        EXPECT_GT(rec.demand, 0.0);
        EXPECT_LT(rec.demand, 8000.0);
        EXPECT_GE(rec.tmax, rec.tmin);
    }
    const auto profile = daily_profile(r);
    const auto peak = static_cast<std::size_t>(std::max_element(profile.begin(), profile.end()) - profile.begin());
    EXPECT_GE(peak, 22u);
    EXPECT_LE(peak, 28u);

    double weekday = 0.0, weekend = 0.0, nd = 0.0, ne = 0.0;
    for (const auto& rec : r) {
        if (ds::weekday_index(rec.timestamp) >= 5) {
            weekend += rec.demand;
            ne += 1.0;
        } else {
            weekday += rec.demand;
            nd += 1.0;
        }
    }
    EXPECT_LT(weekend / ne, weekday / nd);
}

TEST(Synthetic, ConfigParsing) {
    std::istringstream in("# comment\nbase_mwh = 5000\nnoise_mwh=0\n");
    const auto c = ds::parse_synth_config(in);
    EXPECT_EQ(c.base_mwh, 5000.0);
    EXPECT_EQ(c.noise_mwh, 0.0);
    EXPECT_EQ(c.peak_half_hour, ds::SynthConfig{}.peak_half_hour);
    std::istringstream bad("no_such_key = 1\n");
    EXPECT_THROW(ds::parse_synth_config(bad), dc::ConfigError);
}
