#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsc {

// Ordered sequence of bits, one byte of storage per bit.
class BitStream {
public:
    BitStream() = default;
    explicit BitStream(std::vector<std::uint8_t> bits);

    // "1011" style text; whitespace and '_' are ignored.
    static BitStream from_string(std::string_view text);
    // MSB-first hex; nbits may be smaller than 4 * digits to drop trailing pad.
    static BitStream from_hex(std::string_view hex, std::size_t nbits);
    // MSB-first expansion of bytes.
    static BitStream from_bytes(std::span<const std::uint8_t> bytes);

    std::string to_string() const;
    std::string to_hex() const;
    // Packs MSB-first; a partial final byte is zero-padded.
    std::vector<std::uint8_t> to_bytes() const;

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    std::size_t count_ones() const noexcept;

    void push_back(std::uint8_t bit);
    void append(const BitStream& other);
    BitStream slice(std::size_t offset, std::size_t length) const;

    friend bool operator==(const BitStream&, const BitStream&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

// Pseudo-random bit sequence derived from a seed; sender and checker that
// share the seed derive the same ground truth.
BitStream prbs(std::uint64_t seed, std::size_t nbits);

}  // namespace fsc
