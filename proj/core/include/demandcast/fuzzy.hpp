#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "demandcast/flops.hpp"

namespace demandcast::fuzzy {

enum class MfKind { gaussian, triangular };

const char* to_string(MfKind kind) noexcept;
MfKind mf_kind_from_string(const std::string& name);

/// Set of membership functions quantizing one variable. Centers are strictly
/// ascending; the first and last center bound the variable's domain and
/// inputs outside it are clamped before fuzzification.
///
/// Gaussian MFs use `width` as the standard deviation. Triangular MFs use it
/// as the half-base, so `build_partition` picks width = spacing and adjacent
/// triangles sum to one.
class MembershipPartition {
public:
    MembershipPartition(std::string variable_name, MfKind kind, std::vector<double> centers,
                        std::vector<double> widths);

    [[nodiscard]] const std::string& variable_name() const noexcept { return name_; }
    [[nodiscard]] MfKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<double>& centers() const noexcept { return centers_; }
    [[nodiscard]] const std::vector<double>& widths() const noexcept { return widths_; }
    [[nodiscard]] std::size_t size() const noexcept { return centers_.size(); }
    [[nodiscard]] double lo() const noexcept { return centers_.front(); }
    [[nodiscard]] double hi() const noexcept { return centers_.back(); }

    /// Membership of an (already clamped) value in MF `i`.
    [[nodiscard]] double degree(std::size_t i, double x) const;

    friend bool operator==(const MembershipPartition&, const MembershipPartition&) = default;

private:
    std::string name_;
    MfKind kind_;
    std::vector<double> centers_;
    std::vector<double> widths_;
};

/// n evenly spaced MFs over [lo, hi]. Gaussian width is half the spacing.
MembershipPartition build_partition(double lo, double hi, std::size_t n, MfKind kind = MfKind::gaussian,
                                    std::string variable_name = {});

/// Membership degrees grouped by variable.
struct FuzzyVector {
    std::vector<double> degrees;
    std::vector<std::size_t> segments;

    [[nodiscard]] std::size_t size() const noexcept { return degrees.size(); }
    [[nodiscard]] std::span<const double> segment(std::size_t variable) const;

    friend bool operator==(const FuzzyVector&, const FuzzyVector&) = default;
};

std::vector<double> fuzzify(double x, const MembershipPartition& partition, FlopCounter* flops = nullptr);

/// Fuzzifies one value per partition and concatenates the segments.
FuzzyVector fuzzify(std::span<const double> values, std::span<const MembershipPartition> partitions,
                    FlopCounter* flops = nullptr);

/// Center of gravity over the MF centers.
double defuzzify(std::span<const double> degrees, const MembershipPartition& partition,
                 FlopCounter* flops = nullptr);

/// Local normalized fuzzy difference: sum|a - b| / sum(a + b), in [0, 1].
double fuzzy_difference(std::span<const double> a, std::span<const double> b, FlopCounter* flops = nullptr);

/// Throws ShapeError unless `v` has one segment per partition with matching
/// sizes and every degree in [0, 1].
void check_fuzzy_vector(const FuzzyVector& v, std::span<const MembershipPartition> partitions);

constexpr double satlin(double x) noexcept { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }
double radbas(double x) noexcept;

}  // namespace demandcast::fuzzy
