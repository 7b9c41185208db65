#pragma once

#include <cstdint>
#include <limits>

namespace hype {

// What a stream is used for. Part of the key, so streams for different
// purposes never alias even at the same (seed, step, layer).
enum class Purpose : std::uint32_t {
    noise_pre = 1,
    noise_intra = 2,
    dropout_pre = 3,
    dropout_ffn = 4,
    init = 5,
    head_init = 6,
    shuffle = 7,
    mlm_mask = 8,
    subsample = 9,
    synthetic = 10,
    probe = 11,
    corrupt = 12,
};

struct RngKey {
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::uint32_t layer = 0;
    Purpose purpose = Purpose::init;
};

/// Counter-based generator: the i-th output is a pure function of
/// (key, i). Satisfies UniformRandomBitGenerator so it plugs into
/// <random> distributions.
class RngStream {
   public:
    using result_type = std::uint64_t;

    explicit RngStream(const RngKey& key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    std::uint64_t counter() const noexcept { return counter_; }

   private:
    std::uint64_t key_hash_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace hype
