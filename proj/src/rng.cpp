#include "dhedge/rng.hpp"

#include "dhedge/errors.hpp"

#include <cmath>

namespace dhedge {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

SeededStream::SeededStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), index_(stream_index) {
    // Mix seed and index so that neighbouring indices land far apart.
    std::uint64_t s = seed ^ (0x5851f42d4c957f2dULL * (stream_index + 1));
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t SeededStream::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double SeededStream::next_uniform() {
    // 53-bit mantissa, shifted into (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededStream::next_normal(double mean, double variance) {
    if (variance < 0.0) throw InvalidParameter("next_normal: negative variance");
    double z;
    if (have_cached_) {
        have_cached_ = false;
        z = cached_;
    } else {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        z = r * std::cos(phi);
        cached_ = r * std::sin(phi);
        have_cached_ = true;
    }
    return mean + std::sqrt(variance) * z;
}

SeededStream SeededStream::child(std::uint64_t sub_index) const {
    std::uint64_t mix = seed_ ^ (0x9e3779b97f4a7c15ULL * (index_ + 0x632be59bd9b4e019ULL));
    return SeededStream(splitmix64(mix), sub_index);
}

std::vector<double> draw_normal_increments(SeededStream& stream, std::size_t count,
                                           double mean, double variance) {
    std::vector<double> out(count);
    for (auto& v : out) v = stream.next_normal(mean, variance);
    return out;
}

} // namespace dhedge
