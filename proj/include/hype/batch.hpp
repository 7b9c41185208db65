#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hype {

// One tokenized, unpadded input.
struct TokenSequence {
    std::vector<std::size_t> ids;
    std::vector<std::size_t> segments;  // 0 = first text, 1 = second text
};

// Padded [batch x seq] block fed to the encoder.
struct TokenBatch {
    std::size_t batch = 0;
    std::size_t seq = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> segments;
    std::vector<std::uint8_t> valid;  // 1 = real token, 0 = padding
};

// Pads to the longest member, or to pad_to when it is nonzero.
TokenBatch make_batch(std::span<const TokenSequence> sequences, std::size_t pad_id, std::size_t pad_to = 0);

}  // namespace hype
