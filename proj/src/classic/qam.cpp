#include "semcom/classic/qam.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace semcom::classic {

namespace {
// Average energy of the square constellation: 2 * mean level^2 = 42 before
// scaling, hence the 1/sqrt(42) normalization.
const double kScale = 1.0 / std::sqrt(42.0);
}  // namespace

double qam64_axis_level(int index) {
    if (index < 0 || index >= kQamLevelsPerAxis) throw std::out_of_range("qam level index");
    return (2 * index - 7) * kScale;
}

int qam64_bits_to_index(int bits3) {
    // bits are the binary-reflected Gray code of the level index
    int idx = bits3 & 7;
    idx ^= idx >> 1;
    idx ^= idx >> 2;
    return idx;
}

int qam64_index_to_bits(int index) { return (index ^ (index >> 1)) & 7; }

std::vector<std::complex<double>> qam64_modulate(const BitStream& bits) {
    std::vector<int> b = bits.to_bits();
    while (b.size() % kQamBitsPerSymbol != 0) b.push_back(0);
    std::vector<std::complex<double>> out;
    out.reserve(b.size() / kQamBitsPerSymbol);
    for (std::size_t i = 0; i < b.size(); i += kQamBitsPerSymbol) {
        const int bi = (b[i] << 2) | (b[i + 1] << 1) | b[i + 2];
        const int bq = (b[i + 3] << 2) | (b[i + 4] << 1) | b[i + 5];
        out.emplace_back(qam64_axis_level(qam64_bits_to_index(bi)),
                         qam64_axis_level(qam64_bits_to_index(bq)));
    }
    return out;
}

std::vector<double> qam64_demodulate(const std::vector<std::complex<double>>& symbols,
                                     double noise_var) {
    std::vector<double> llrs;
    llrs.reserve(symbols.size() * kQamBitsPerSymbol);
    const double inv_var = 1.0 / noise_var;
    auto axis_llrs = [&](double y, double* out3) {
        // Per axis: min distance^2 separately over levels whose Gray label
        // has the bit at 0 / 1.
        for (int bit = 0; bit < 3; ++bit) {
            double d0 = std::numeric_limits<double>::infinity();
            double d1 = std::numeric_limits<double>::infinity();
            for (int idx = 0; idx < kQamLevelsPerAxis; ++idx) {
                const double d = y - qam64_axis_level(idx);
                const double d2 = d * d;
                const int label = qam64_index_to_bits(idx);
                if ((label >> (2 - bit)) & 1)
                    d1 = std::min(d1, d2);
                else
                    d0 = std::min(d0, d2);
            }
            out3[bit] = (d1 - d0) * inv_var;
        }
    };
    double tmp[3];
    for (const auto& s : symbols) {
        axis_llrs(s.real(), tmp);
        llrs.push_back(tmp[0]);
        llrs.push_back(tmp[1]);
        llrs.push_back(tmp[2]);
        axis_llrs(s.imag(), tmp);
        llrs.push_back(tmp[0]);
        llrs.push_back(tmp[1]);
        llrs.push_back(tmp[2]);
    }
    return llrs;
}

BitStream llr_hard_bits(const std::vector<double>& llrs, std::size_t nbits) {
    if (nbits > llrs.size()) throw std::invalid_argument("llr_hard_bits: nbits exceeds llr count");
    BitStream out;
    for (std::size_t i = 0; i < nbits; ++i) out.push(llrs[i] > 0.0 ? 0 : 1);
    return out;
}

}  // namespace semcom::classic
