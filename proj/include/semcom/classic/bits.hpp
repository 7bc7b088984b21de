#pragma once

// Packed bit sequence used throughout the classical chain. Bits are stored
// MSB-first within each byte.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace semcom::classic {

class BitStream {
public:
    BitStream() = default;

    static BitStream from_bits(const std::vector<int>& bits) {
        BitStream s;
        for (int b : bits) s.push(b);
        return s;
    }

    static BitStream from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t nbits) {
        if (nbits > bytes.size() * 8) throw std::invalid_argument("bit count exceeds byte payload");
        BitStream s;
        s.bytes_ = bytes;
        s.nbits_ = nbits;
        return s;
    }

    void push(int bit) {
        const std::size_t byte = nbits_ / 8;
        if (byte == bytes_.size()) bytes_.push_back(0);
        if (bit) bytes_[byte] |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
        ++nbits_;
    }

    int get(std::size_t i) const {
        if (i >= nbits_) throw std::out_of_range("bit index out of range");
        return (bytes_[i / 8] >> (7 - i % 8)) & 1;
    }

    std::size_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

    std::vector<int> to_bits() const {
        std::vector<int> out(nbits_);
        for (std::size_t i = 0; i < nbits_; ++i) out[i] = get(i);
        return out;
    }

    // Whole bytes covering the payload; trailing slack bits are zero.
    std::vector<std::uint8_t> to_bytes() const { return bytes_; }

    bool operator==(const BitStream& o) const {
        if (nbits_ != o.nbits_) return false;
        for (std::size_t i = 0; i < nbits_; ++i)
            if (get(i) != o.get(i)) return false;
        return true;
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

}  // namespace semcom::classic
