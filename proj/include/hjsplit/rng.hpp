#pragma once

#include "hjsplit/core.hpp"

#include <cstdint>

namespace hjsplit {

/// Counter-based deterministic random stream.
///
/// Every draw is a pure function of (seed, stream_id, sample_index), so the
/// same triple always yields the same value regardless of evaluation order,
/// host, or parallelism. Consumers that need independent randomness derive
/// disjoint stream ids instead of sharing mutable generator state.
///
/// Gaussian variates use the Box-Muller cosine branch on two 53-bit uniforms;
/// this transform is fixed so that recorded outputs survive refactors.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t sample_index) const {
        const std::uint64_t key = mix(seed + kGolden) ^ mix(stream_id + 0xd1b54a32d192ed03ULL);
        return mix(key + (sample_index + 1) * kGolden);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01(std::uint64_t sample_index) const {
        return static_cast<double>(bits(sample_index) >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe as a log argument.
    double uniform_open01(std::uint64_t sample_index) const {
        return static_cast<double>((bits(sample_index) >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal draw number `sample_index` (consumes uniform indices
    /// 2i and 2i+1). Bounded by ~8.6 sigma because u1 is bounded away from 0.
    double normal(std::uint64_t sample_index) const {
        const double u1 = uniform_open01(2 * sample_index);
        const double u2 = uniform01(2 * sample_index + 1);
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    /// n standard normals at indices first_index .. first_index + n - 1.
    Vec normal_vec(std::uint64_t first_index, Index n) const {
        Vec z(n);
        for (Index j = 0; j < n; ++j) {
            z[j] = normal(first_index + static_cast<std::uint64_t>(j));
        }
        return z;
    }

    RngStream with_stream(std::uint64_t sid) const { return RngStream{seed, sid}; }
};

}  // namespace hjsplit
