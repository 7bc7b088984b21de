#pragma once

// Systematic RS(255,223) over GF(2^8) with primitive polynomial
// x^8 + x^4 + x^3 + x^2 + 1 (0x11D); corrects up to t = 16 symbol errors.
// Generator roots are alpha^1 .. alpha^32.

#include <cstdint>
#include <vector>

namespace semcom::classic {

constexpr int kRsN = 255;
constexpr int kRsK = 223;
constexpr int kRsT = 16;

// GF(2^8) arithmetic backed by exp/log tables.
namespace gf256 {
std::uint8_t mul(std::uint8_t a, std::uint8_t b);
std::uint8_t inv(std::uint8_t a);
std::uint8_t pow_alpha(int e);  // alpha^e, e may be negative
}  // namespace gf256

// data must be exactly 223 bytes; returns 255 (data followed by 32 parity).
std::vector<std::uint8_t> rs_encode(const std::vector<std::uint8_t>& data);

struct RsDecodeResult {
    std::vector<std::uint8_t> data;  // 223 bytes (received systematic part on failure)
    bool ok = false;
    int corrected = 0;
};

// received must be exactly 255 bytes. ok is true only when the corrected
// word is a consistent codeword within the t=16 budget.
RsDecodeResult rs_decode(const std::vector<std::uint8_t>& received);

}  // namespace semcom::classic
