#pragma once

// 5-bit fixed-length source coding over a 32-symbol character alphabet:
// a..z, space, '.', ',', '\'', '?', '!'. Characters outside the alphabet
// are substituted with a space and counted.

#include <string>

#include "semcom/classic/bits.hpp"

namespace semcom::classic {

constexpr int kAlphabetSize = 32;
constexpr int kBitsPerChar = 5;

// Index in [0,32) for alphabet characters, -1 otherwise.
int alphabet_index(char c);
char alphabet_char(int index);

struct FixedLengthEncodeResult {
    BitStream bits;
    std::size_t substituted = 0;  // out-of-alphabet characters replaced by space
};

FixedLengthEncodeResult fixed_length_encode(const std::string& textline);
std::string fixed_length_decode(const BitStream& bits);

}  // namespace semcom::classic
