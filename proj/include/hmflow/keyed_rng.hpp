#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hmflow {

/// Counter-based Gaussian source: Philox4x32-10 keyed by the master seed.
///
/// Every draw is a pure function of (seed, stream, index, step, component), so
/// results do not depend on the order in which paths or nodes are processed.
class KeyedNormal {
public:
    enum Stream : std::uint32_t {
        ForwardPaths = 1,
        OneStepBatch = 2,
        NodeBatch = 3,
        WeakProbe = 4,
    };

    explicit KeyedNormal(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    [[nodiscard]] double normal(std::uint32_t stream, std::uint64_t index, std::uint32_t step,
                                std::uint32_t component) const noexcept {
        const std::array<std::uint32_t, 4> counter{static_cast<std::uint32_t>(index),
                                                   static_cast<std::uint32_t>(index >> 32), step,
                                                   (stream << 24) ^ (component >> 1)};
        const auto bits = philox(counter);
        // Box-Muller on two 53-bit uniforms; the first lies in (0, 1].
        const double u1 = (static_cast<double>((static_cast<std::uint64_t>(bits[0]) << 21) ^ (bits[1] >> 11)) + 1.0) *
                          0x1.0p-53;
        const double u2 = static_cast<double>((static_cast<std::uint64_t>(bits[2]) << 21) ^ (bits[3] >> 11)) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return (component & 1U) ? r * std::sin(a) : r * std::cos(a);
    }

private:
    [[nodiscard]] std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr) const noexcept {
        constexpr std::uint32_t m0 = 0xD2511F53U;
        constexpr std::uint32_t m1 = 0xCD9E8D57U;
        constexpr std::uint32_t w0 = 0x9E3779B9U;
        constexpr std::uint32_t w1 = 0xBB67AE85U;
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }

    std::array<std::uint32_t, 2> key_;
};

}  // namespace hmflow
