#pragma once

// Traditional baseline: 5-bit fixed-length source coding, Turbo or RS channel
// coding, 64-QAM, and the same AWGN / Rayleigh channels with perfect-CSI
// equalization as the learned chain.

#include <cstdint>
#include <string>
#include <vector>

#include "semcom/channel.hpp"
#include "semcom/classic/turbo.hpp"
#include "semcom/metrics.hpp"

namespace semcom::classic {

enum class Codec { turbo, rs };

inline Codec codec_from_string(const std::string& s) {
    if (s == "turbo") return Codec::turbo;
    if (s == "rs") return Codec::rs;
    throw std::invalid_argument("unknown codec: " + s);
}

inline const char* codec_name(Codec c) { return c == Codec::turbo ? "turbo" : "rs"; }

struct ClassicConfig {
    Codec codec = Codec::turbo;
    channel::Kind channel = channel::Kind::awgn;
    double snr_db = 8.0;
    std::uint64_t seed = 0;
    TurboConfig turbo;
};

struct ClassicStats {
    std::size_t sentences = 0;
    std::size_t rs_block_failures = 0;
    std::size_t substituted_chars = 0;
};

struct ClassicResult {
    std::vector<metrics::Sentence> decoded;
    ClassicStats stats;
};

// Runs text -> 5-bit coding -> channel coding -> 64-QAM -> channel -> soft
// demod -> channel decode -> source decode -> text, one sentence at a time
// with per-sentence derived noise streams.
ClassicResult run_classic_pipeline(const std::vector<metrics::Sentence>& sentences,
                                   const ClassicConfig& cfg);

// Monte-Carlo bit error rates over 64-QAM, used for codec calibration checks.
double uncoded_qam_ber(std::size_t nbits, double snr_db, std::uint64_t seed);
double turbo_qam_ber(std::size_t info_bits, std::size_t block_bits, double snr_db,
                     std::uint64_t seed, const TurboConfig& cfg = {});

}  // namespace semcom::classic
