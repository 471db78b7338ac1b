#pragma once

#include <cstddef>
#include <cstdint>

namespace demandcast {

/// Instrumented floating-point operation counter.
///
/// Convention shared by every trainer: one multiply-accumulate is 2 flops,
/// a transcendental (exp, tanh) is 10 flops, and any other scalar add,
/// multiply, compare-free arithmetic or division is 1 flop. Counters only
/// ever grow; one counter is owned by one training run.
class FlopCounter {
public:
    static constexpr std::uint64_t kMac = 2;
    static constexpr std::uint64_t kTranscendental = 10;
    static constexpr std::uint64_t kScalar = 1;

    void add(std::uint64_t flops) noexcept { total_ += flops; }
    void mac(std::uint64_t n = 1) noexcept { total_ += kMac * n; }
    void transcendental(std::uint64_t n = 1) noexcept { total_ += kTranscendental * n; }
    void scalar(std::uint64_t n = 1) noexcept { total_ += kScalar * n; }

    /// Flops for a dot product of length n.
    static constexpr std::uint64_t dot(std::size_t n) noexcept { return kMac * n; }

    [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
    [[nodiscard]] double billions() const noexcept { return static_cast<double>(total_) * 1e-9; }

    FlopCounter& operator+=(const FlopCounter& other) noexcept {
        total_ += other.total_;
        return *this;
    }

private:
    std::uint64_t total_ = 0;
};

/// Counter that accepts a null target so instrumented code paths can run
/// without a counter attached.
inline void count(FlopCounter* counter, std::uint64_t flops) noexcept {
    if (counter != nullptr) counter->add(flops);
}

}  // namespace demandcast
