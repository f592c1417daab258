#pragma once

#include <cstdint>
#include <vector>

namespace dhedge {

/// Counter-based seeded random stream. A (seed, index) pair determines the
/// draw sequence bit-for-bit, independent of platform or thread schedule;
/// distinct indices give statistically independent streams.
///
/// Uniforms come from xoshiro256++ seeded through splitmix64, normals from
/// Box-Muller on those uniforms. std::normal_distribution is deliberately
/// avoided: its algorithm is implementation-defined.
class SeededStream {
public:
    SeededStream(std::uint64_t seed, std::uint64_t stream_index);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t index() const { return index_; }

    std::uint64_t next_u64();
    /// Uniform on (0, 1), never exactly 0 or 1.
    double next_uniform();
    double next_normal(double mean = 0.0, double variance = 1.0);

    /// Derive an independent child stream (e.g. one per Monte Carlo path).
    SeededStream child(std::uint64_t sub_index) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t index_ = 0;
    std::uint64_t state_[4] = {};
    bool have_cached_ = false;
    double cached_ = 0.0;
};

/// i.i.d. N(mean, variance) draws; deterministic given the stream state.
std::vector<double> draw_normal_increments(SeededStream& stream, std::size_t count,
                                           double mean, double variance);

} // namespace dhedge
