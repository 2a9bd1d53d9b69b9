#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace genhedge {

/// Philox4x32-10 counter-based generator. Every (key, counter) pair maps to
/// four independent 32-bit words, so path/step/factor substreams never
/// overlap and results do not depend on scheduling.
struct Philox4x32 {
    static constexpr uint32_t M0 = 0xD2511F53u;
    static constexpr uint32_t M1 = 0xCD9E8D57u;
    static constexpr uint32_t W0 = 0x9E3779B9u;
    static constexpr uint32_t W1 = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                         std::array<uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const uint64_t p0 = static_cast<uint64_t>(M0) * ctr[0];
            const uint64_t p1 = static_cast<uint64_t>(M1) * ctr[2];
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
            const uint32_t lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
            const uint32_t lo1 = static_cast<uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }
};

/// Deterministic normal variates derived from a seed and a (stream, path,
/// step, slot) coordinate. Box-Muller on 53-bit uniforms; the pair (2k, 2k+1)
/// of slots shares one Philox block.
class NormalField {
public:
    explicit NormalField(uint64_t seed)
        : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)} {}

    /// Normal variate for integer coordinates (stream, path, step, slot).
    double normal(uint32_t stream, uint32_t path, uint32_t step, uint32_t slot) const {
        const auto r = Philox4x32::block(
            {path, step, slot >> 1, stream}, key_);
        const double u1 = to_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        return (slot & 1u) ? radius * std::sin(angle) : radius * std::cos(angle);
    }

    /// Both normals of the slot pair (2k, 2k+1) with one block.
    std::array<double, 2> normal_pair(uint32_t stream, uint32_t path, uint32_t step,
                                      uint32_t pair_index) const {
        const auto r = Philox4x32::block({path, step, pair_index, stream}, key_);
        const double u1 = to_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    /// Uniform in (0,1] for auxiliary draws.
    double uniform(uint32_t stream, uint32_t path, uint32_t step, uint32_t slot) const {
        const auto r = Philox4x32::block({path, step, slot, stream ^ 0x5EEDu}, key_);
        return to_unit(r[0], r[1]);
    }

private:
    static double to_unit(uint32_t a, uint32_t b) {
        const uint64_t bits = (static_cast<uint64_t>(a) << 32) | b;
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53; // (0,1]
    }

    std::array<uint32_t, 2> key_;
};

/// Stream tags keep independent uses of the same seed apart.
namespace rng_stream {
constexpr uint32_t market = 0;      // market Brownian increments
constexpr uint32_t probe = 1;       // random test vectors / probe points
constexpr uint32_t scenario = 2;    // scenario-level auxiliary draws
} // namespace rng_stream

} // namespace genhedge
