#pragma once

// Gray-mapped square 64-QAM with unit average constellation energy
// (per-axis levels {+-1,+-3,+-5,+-7}/sqrt(42)) and max-log LLR soft
// demodulation. LLR convention: positive means bit 0. Six bits per symbol:
// the first three select the in-phase level, the last three the quadrature.

#include <complex>
#include <vector>

#include "semcom/classic/bits.hpp"

namespace semcom::classic {

constexpr int kQamBitsPerSymbol = 6;
constexpr int kQamLevelsPerAxis = 8;

// Amplitude of axis level index 0..7 (Gray-adjacent indices differ by one bit).
double qam64_axis_level(int index);

// Maps 3 bits (as an integer, MSB first) to the axis level index.
int qam64_bits_to_index(int bits3);
// Inverse mapping.
int qam64_index_to_bits(int index);

// Pads the stream with zero bits to a multiple of 6.
std::vector<std::complex<double>> qam64_modulate(const BitStream& bits);

// Max-log LLRs given total complex-noise variance noise_var; 6 per symbol.
std::vector<double> qam64_demodulate(const std::vector<std::complex<double>>& symbols,
                                     double noise_var);

// Sign decision on LLRs (positive -> 0); truncated to nbits.
BitStream llr_hard_bits(const std::vector<double>& llrs, std::size_t nbits);

}  // namespace semcom::classic
