#include "semcom/classic/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "semcom/classic/fixed_length.hpp"
#include "semcom/classic/qam.hpp"
#include "semcom/classic/rs.hpp"
#include "semcom/rng.hpp"

namespace semcom::classic {

namespace {

// RS frame: two header bytes (big-endian character count) + packed 5-bit
// payload + zero padding to a whole number of 223-byte blocks. The two-byte
// count pins the exact end of the 5-bit stream inside the padded payload.
std::vector<std::uint8_t> rs_frame(const BitStream& payload, std::size_t nchars) {
    std::vector<std::uint8_t> frame;
    frame.push_back(static_cast<std::uint8_t>((nchars >> 8) & 0xFF));
    frame.push_back(static_cast<std::uint8_t>(nchars & 0xFF));
    const auto bytes = payload.to_bytes();
    frame.insert(frame.end(), bytes.begin(), bytes.end());
    while (frame.size() % kRsK != 0) frame.push_back(0);
    return frame;
}

std::string rs_unframe(const std::vector<std::uint8_t>& frame) {
    if (frame.size() < 2) return "";
    std::size_t nchars = (static_cast<std::size_t>(frame[0]) << 8) | frame[1];
    const std::size_t payload_bytes = frame.size() - 2;
    nchars = std::min(nchars, payload_bytes * 8 / kBitsPerChar);
    const std::size_t nbits = nchars * kBitsPerChar;
    auto payload = BitStream::from_bytes(std::vector<std::uint8_t>(frame.begin() + 2, frame.end()),
                                         nbits);
    return fixed_length_decode(payload);
}

std::vector<double> through_channel(std::vector<std::complex<double>> symbols,
                                    channel::Kind kind, double snr_db, Rng& rng) {
    const double noise_var = channel::snr_to_noise_var(snr_db);
    double effective_var = noise_var;
    if (kind == channel::Kind::awgn) {
        channel::add_awgn(symbols, noise_var, rng);
    } else {
        const auto h = channel::fade_and_equalize(symbols, noise_var, rng);
        effective_var = noise_var / std::norm(h);
    }
    return qam64_demodulate(symbols, std::max(effective_var, 1e-12));
}

metrics::Sentence split_words(const std::string& text) {
    metrics::Sentence words;
    std::string cur;
    for (char c : text) {
        if (c == ' ') {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

}  // namespace

ClassicResult run_classic_pipeline(const std::vector<metrics::Sentence>& sentences,
                                   const ClassicConfig& cfg) {
    ClassicResult res;
    res.decoded.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        Rng rng(derive_seed(cfg.seed, i));
        std::string text;
        for (std::size_t w = 0; w < sentences[i].size(); ++w) {
            if (w) text += ' ';
            text += sentences[i][w];
        }
        auto source = fixed_length_encode(text);
        res.stats.substituted_chars += source.substituted;

        std::string decoded_text;
        if (cfg.codec == Codec::turbo) {
            const std::size_t k = source.bits.size();
            if (k == 0) {
                res.decoded.push_back({});
                ++res.stats.sentences;
                continue;
            }
            const auto codeword = turbo_encode(source.bits, cfg.turbo);
            const auto llrs = through_channel(qam64_modulate(codeword), cfg.channel, cfg.snr_db, rng);
            const auto info = turbo_decode(
                std::vector<double>(llrs.begin(),
                                    llrs.begin() + static_cast<std::ptrdiff_t>(codeword.size())),
                k, cfg.turbo);
            decoded_text = fixed_length_decode(info);
        } else {
            const auto frame = rs_frame(source.bits, text.size());
            BitStream coded;
            for (std::size_t b = 0; b < frame.size(); b += kRsK) {
                const auto block = rs_encode(
                    std::vector<std::uint8_t>(frame.begin() + static_cast<std::ptrdiff_t>(b),
                                              frame.begin() + static_cast<std::ptrdiff_t>(b + kRsK)));
                for (std::uint8_t byte : block)
                    for (int bit = 7; bit >= 0; --bit) coded.push((byte >> bit) & 1);
            }
            const auto llrs = through_channel(qam64_modulate(coded), cfg.channel, cfg.snr_db, rng);
            const auto hard = llr_hard_bits(llrs, coded.size());
            std::vector<std::uint8_t> recovered;
            const std::size_t nblocks = coded.size() / (8 * kRsN);
            for (std::size_t b = 0; b < nblocks; ++b) {
                std::vector<std::uint8_t> block(kRsN, 0);
                for (int byte = 0; byte < kRsN; ++byte)
                    for (int bit = 0; bit < 8; ++bit)
                        block[static_cast<std::size_t>(byte)] = static_cast<std::uint8_t>(
                            (block[static_cast<std::size_t>(byte)] << 1) |
                            hard.get(b * 8 * kRsN + static_cast<std::size_t>(byte) * 8 +
                                     static_cast<std::size_t>(bit)));
                auto dec = rs_decode(block);
                if (!dec.ok) ++res.stats.rs_block_failures;
                recovered.insert(recovered.end(), dec.data.begin(), dec.data.end());
            }
            decoded_text = rs_unframe(recovered);
        }
        res.decoded.push_back(split_words(decoded_text));
        ++res.stats.sentences;
    }
    return res;
}

double uncoded_qam_ber(std::size_t nbits, double snr_db, std::uint64_t seed) {
    Rng rng(seed);
    BitStream bits;
    for (std::size_t i = 0; i < nbits; ++i) bits.push(static_cast<int>(rng.next_u64() & 1));
    auto symbols = qam64_modulate(bits);
    channel::add_awgn(symbols, channel::snr_to_noise_var(snr_db), rng);
    const auto llrs = qam64_demodulate(symbols, channel::snr_to_noise_var(snr_db));
    const auto hard = llr_hard_bits(llrs, bits.size());
    std::size_t errors = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (hard.get(i) != bits.get(i)) ++errors;
    return static_cast<double>(errors) / static_cast<double>(nbits);
}

double turbo_qam_ber(std::size_t info_bits, std::size_t block_bits, double snr_db,
                     std::uint64_t seed, const TurboConfig& cfg) {
    Rng rng(seed);
    std::size_t errors = 0, total = 0;
    std::size_t block_index = 0;
    while (total < info_bits) {
        const std::size_t k = std::min(block_bits, info_bits - total);
        BitStream info;
        for (std::size_t i = 0; i < k; ++i) info.push(static_cast<int>(rng.next_u64() & 1));
        const auto codeword = turbo_encode(info, cfg);
        auto symbols = qam64_modulate(codeword);
        const double nv = channel::snr_to_noise_var(snr_db);
        channel::add_awgn(symbols, nv, rng);
        const auto llrs = qam64_demodulate(symbols, nv);
        const auto decoded = turbo_decode(
            std::vector<double>(llrs.begin(),
                                llrs.begin() + static_cast<std::ptrdiff_t>(codeword.size())),
            k, cfg);
        for (std::size_t i = 0; i < k; ++i)
            if (decoded.get(i) != info.get(i)) ++errors;
        total += k;
        ++block_index;
    }
    return static_cast<double>(errors) / static_cast<double>(total);
}

}  // namespace semcom::classic
