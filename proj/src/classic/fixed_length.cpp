#include "semcom/classic/fixed_length.hpp"

#include <stdexcept>

namespace semcom::classic {

namespace {
// Indices 0..25: a..z; 26: space; 27..31: . , ' ? !
const char kExtra[] = {' ', '.', ',', '\'', '?', '!'};
}  // namespace

int alphabet_index(char c) {
    if (c >= 'a' && c <= 'z') return c - 'a';
    for (int i = 0; i < 6; ++i)
        if (c == kExtra[i]) return 26 + i;
    return -1;
}

char alphabet_char(int index) {
    if (index < 0 || index >= kAlphabetSize) throw std::out_of_range("alphabet index out of range");
    if (index < 26) return static_cast<char>('a' + index);
    return kExtra[index - 26];
}

FixedLengthEncodeResult fixed_length_encode(const std::string& textline) {
    FixedLengthEncodeResult res;
    for (char c : textline) {
        int idx = alphabet_index(c);
        if (idx < 0) {
            idx = alphabet_index(' ');
            ++res.substituted;
        }
        for (int b = kBitsPerChar - 1; b >= 0; --b) res.bits.push((idx >> b) & 1);
    }
    return res;
}

std::string fixed_length_decode(const BitStream& bits) {
    std::string out;
    const std::size_t n = bits.size() / kBitsPerChar;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        int idx = 0;
        for (int b = 0; b < kBitsPerChar; ++b) idx = (idx << 1) | bits.get(i * kBitsPerChar + b);
        out.push_back(alphabet_char(idx));
    }
    return out;
}

}  // namespace semcom::classic
