#pragma once

// Rate-1/3 parallel-concatenated convolutional code built from two memory-3
// recursive systematic constituents (feedback 13, feedforward 15, octal) with
// a fixed-seed pseudorandom interleaver per block length. Decoding runs a
// fixed number of Max-Log-MAP extrinsic-exchange iterations.
//
// Codeword layout for k info bits (3k + 12 total):
//   [ systematic(k) | parity1(k) | parity2(k) |
//     tail1 sys(3) | tail1 parity(3) | tail2 sys(3) | tail2 parity(3) ]
//
// LLR convention throughout: positive means bit 0.

#include <cstdint>
#include <vector>

#include "semcom/classic/bits.hpp"

namespace semcom::classic {

struct TurboConfig {
    int iterations = 5;
    // Max-Log-MAP extrinsics run over-confident; the usual 0.75 damping
    // recovers most of the gap to full MAP.
    double extrinsic_scale = 0.75;
    std::uint64_t interleaver_seed = 0x7EA15EEDULL;
};

constexpr int kTurboMemory = 3;
constexpr int kTurboStates = 8;
constexpr int kTurboTailBits = 12;

// Fixed-seed pseudorandom permutation of [0,k).
std::vector<std::size_t> turbo_interleaver(std::size_t k, std::uint64_t seed);

BitStream turbo_encode(const BitStream& info, const TurboConfig& cfg = {});

// Soft-input decode of `llr` (length 3k+12, layout above); returns k bits.
BitStream turbo_decode(const std::vector<double>& llr, std::size_t k, const TurboConfig& cfg = {});

}  // namespace semcom::classic
