#pragma once

#include <cstdint>

namespace motionwalk {

/// Counter-based random stream: every draw is a pure function of
/// (master seed, stream id, counter), so ensembles can be sharded across
/// workers in any order and still produce identical draws.
///
/// The generator is the splitmix64 finalizer applied to a Weyl sequence,
/// evaluated at an arbitrary counter instead of advanced incrementally.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : base_(mix(mix(seed) ^ (stream_id * 0xD2B74407B1CE6E93ULL + 0x9E3779B97F4A7C15ULL))) {}

    /// 64 random bits for the given counter value.
    std::uint64_t bits(std::uint64_t counter) const {
        return mix(base_ + counter * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform double in [0,1), 53 significant bits.
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t base_;
};

}  // namespace motionwalk
