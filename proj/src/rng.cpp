#include "hype/rng.hpp"

namespace hype {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

RngStream::RngStream(const RngKey& key) {
    std::uint64_t h = mix64(key.seed + kGamma);
    h = mix64(h ^ (key.step + 2 * kGamma));
    h = mix64(h ^ (static_cast<std::uint64_t>(key.layer) + 3 * kGamma));
    h = mix64(h ^ (static_cast<std::uint64_t>(key.purpose) + 4 * kGamma));
    key_hash_ = h;
}

RngStream::result_type RngStream::operator()() {
    const std::uint64_t out = mix64(key_hash_ + (counter_ + 1) * kGamma);
    ++counter_;
    return out;
}

double RngStream::uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

}  // namespace hype
