#include "demandcast/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "demandcast/error.hpp"

namespace demandcast::fuzzy {

const char* to_string(MfKind kind) noexcept {
    return kind == MfKind::gaussian ? "gaussian" : "triangular";
}

MfKind mf_kind_from_string(const std::string& name) {
    if (name == "gaussian") return MfKind::gaussian;
    if (name == "triangular") return MfKind::triangular;
    throw ConfigError(fmt::format("unknown membership function kind '{}'", name));
}

MembershipPartition::MembershipPartition(std::string variable_name, MfKind kind, std::vector<double> centers,
                                         std::vector<double> widths)
    : name_(std::move(variable_name)), kind_(kind), centers_(std::move(centers)), widths_(std::move(widths)) {
    if (centers_.size() < 2 || centers_.size() != widths_.size()) {
        throw ConfigError(fmt::format("invalid partition '{}': need >= 2 MFs with one width each", name_));
    }
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        if (!std::isfinite(centers_[i]) || !(widths_[i] > 0.0) || !std::isfinite(widths_[i])) {
            throw ConfigError(fmt::format("invalid partition '{}': MF {} has bad center/width", name_, i));
        }
        if (i > 0 && !(centers_[i] > centers_[i - 1])) {
            throw ConfigError(fmt::format("invalid partition '{}': centers not strictly ascending", name_));
        }
    }
}

double MembershipPartition::degree(std::size_t i, double x) const {
    const double d = x - centers_[i];
    if (kind_ == MfKind::gaussian) {
        return std::exp(-(d * d) / (2.0 * widths_[i] * widths_[i]));
    }
    return std::max(0.0, 1.0 - std::abs(d) / widths_[i]);
}

MembershipPartition build_partition(double lo, double hi, std::size_t n, MfKind kind, std::string variable_name) {
    if (n < 2 || !(hi > lo)) {
        throw ConfigError(fmt::format("invalid partition: n = {}, range [{}, {}]", n, lo, hi));
    }
    const double spacing = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> centers(n);
    for (std::size_t i = 0; i < n; ++i) centers[i] = lo + spacing * static_cast<double>(i);
    centers.back() = hi;
    const double width = kind == MfKind::gaussian ? spacing / 2.0 : spacing;
    return MembershipPartition(std::move(variable_name), kind, std::move(centers), std::vector<double>(n, width));
}

std::span<const double> FuzzyVector::segment(std::size_t variable) const {
    if (variable >= segments.size()) throw IndexError(fmt::format("no fuzzy segment {}", variable));
    const std::size_t offset = std::accumulate(segments.begin(), segments.begin() + variable, std::size_t{0});
    return std::span<const double>(degrees).subspan(offset, segments[variable]);
}

std::vector<double> fuzzify(double x, const MembershipPartition& partition, FlopCounter* flops) {
    const double clamped = std::clamp(x, partition.lo(), partition.hi());
    std::vector<double> out(partition.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = partition.degree(i, clamped);
    count(flops, out.size() * (4 + FlopCounter::kTranscendental));
    return out;
}

FuzzyVector fuzzify(std::span<const double> values, std::span<const MembershipPartition> partitions,
                    FlopCounter* flops) {
    if (values.size() != partitions.size()) {
        throw ShapeError(fmt::format("fuzzify: {} values for {} partitions", values.size(), partitions.size()));
    }
    FuzzyVector out;
    out.segments.reserve(partitions.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
        auto seg = fuzzify(values[v], partitions[v], flops);
        out.segments.push_back(seg.size());
        out.degrees.insert(out.degrees.end(), seg.begin(), seg.end());
    }
    return out;
}

double defuzzify(std::span<const double> degrees, const MembershipPartition& partition, FlopCounter* flops) {
    if (degrees.size() != partition.size()) {
        throw ShapeError(fmt::format("defuzzify: {} degrees for {} MFs", degrees.size(), partition.size()));
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        num += degrees[i] * partition.centers()[i];
        den += degrees[i];
    }
    count(flops, FlopCounter::dot(degrees.size()) + degrees.size() + 1);
    if (!(den > 0.0)) throw DegenerateError("defuzzify: all membership degrees are zero");
    return num / den;
}

double fuzzy_difference(std::span<const double> a, std::span<const double> b, FlopCounter* flops) {
    if (a.size() != b.size()) {
        throw ShapeError(fmt::format("fuzzy_difference: lengths {} and {}", a.size(), b.size()));
    }
    double diff = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += std::abs(a[i] - b[i]);
        total += a[i] + b[i];
    }
    count(flops, 4 * a.size() + 1);
    if (!(total > 0.0)) throw DegenerateError("fuzzy_difference: both vectors are all-zero");
    return diff / total;
}

void check_fuzzy_vector(const FuzzyVector& v, std::span<const MembershipPartition> partitions) {
    if (v.segments.size() != partitions.size()) {
        throw ShapeError(fmt::format("fuzzy vector has {} segments, expected {}", v.segments.size(),
                                     partitions.size()));
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        if (v.segments[i] != partitions[i].size()) {
            throw ShapeError(fmt::format("fuzzy segment {} has {} degrees, partition has {} MFs", i,
                                         v.segments[i], partitions[i].size()));
        }
        total += v.segments[i];
    }
    if (total != v.degrees.size()) throw ShapeError("fuzzy vector segment lengths do not cover its degrees");
    for (double d : v.degrees) {
        if (!(d >= 0.0 && d <= 1.0)) throw ShapeError(fmt::format("membership degree {} outside [0, 1]", d));
    }
}

double radbas(double x) noexcept { return std::exp(-x * x); }

}  // namespace demandcast::fuzzy
