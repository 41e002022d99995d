#include "we/rng.hpp"

namespace we {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t generation,
                     Purpose purpose) {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (replicate * 0xd1b54a32d192ed03ULL + 1));
    k = mix64(k ^ (generation * 0xaef17502108ef2d9ULL + 2));
    k = mix64(k ^ (static_cast<std::uint64_t>(purpose) * 0xdb4f0b9175ae2165ULL + 3));
    key_ = k;
}

std::uint64_t RngStream::bits_at(std::uint64_t k) const noexcept {
    // Two rounds so neighbouring counters and neighbouring keys decorrelate.
    return mix64(mix64(key_ + (k + 1) * kGolden) ^ key_);
}

}  // namespace we
