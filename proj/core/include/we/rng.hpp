#pragma once

#include <cstdint>
#include <limits>

namespace we {

/// What a stream is used for. Distinct purposes never share draws.
enum class Purpose : std::uint64_t {
    Initial = 1,
    Selection = 2,
    Mutation = 3,
    CoarseSampling = 4,
    Bootstrap = 5,
    Test = 99,
};

/// Counter-based random stream keyed by (seed, replicate, generation, purpose).
/// Draw k of a stream is a pure function of the key and k, so results do not
/// depend on evaluation order or thread count. Within WE steps, draw k belongs
/// to particle k.
///
/// Satisfies UniformRandomBitGenerator for sequential use.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t generation,
              Purpose purpose);

    /// Random access: the k-th 64-bit draw.
    std::uint64_t bits_at(std::uint64_t k) const noexcept;
    /// Random access: the k-th draw as a double in [0, 1) with 53 random bits.
    double uniform_at(std::uint64_t k) const noexcept {
        return static_cast<double>(bits_at(k) >> 11) * 0x1.0p-53;
    }

    /// Sequential draws continue from an internal counter starting at 0.
    result_type operator()() noexcept { return bits_at(counter_++); }
    double uniform() noexcept { return uniform_at(counter_++); }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace we
