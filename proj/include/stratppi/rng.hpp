#pragma once

#include <cmath>
#include <cstdint>

namespace stratppi {

/// Deterministic counter-based generator with substreams keyed by
/// (seed, trial, stratum, purpose). Each substream is an independent
/// splitmix64 sequence, so trials are reproducible and order-independent
/// regardless of execution order.
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t seed, std::uint64_t trial = 0, std::uint64_t stratum = 0,
                 std::uint64_t purpose = 0) {
        state_ = mix(seed + kGolden);
        state_ = mix(state_ ^ mix(trial + 2 * kGolden));
        state_ = mix(state_ ^ mix(stratum + 3 * kGolden));
        state_ = mix(state_ ^ mix(purpose + 4 * kGolden));
    }

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix(state_);
    }

    /// Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) via rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via Box-Muller (pair cached).
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - next_double(); // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * kPi * u2;
        cached_ = r * std::sin(angle);
        has_cached_ = true;
        return r * std::cos(angle);
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace stratppi
