#include "fsyncchan/bitstream.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace fsc {

BitStream::BitStream(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
        if (b > 1) throw std::invalid_argument("BitStream: bit value must be 0 or 1");
    }
}

BitStream BitStream::from_string(std::string_view text) {
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
        if (c == '0' || c == '1') {
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c == ' ' || c == '_' || c == '\n' || c == '\t' || c == '\r') {
            continue;
        } else {
            throw std::invalid_argument(std::string("BitStream: invalid bit character '") + c + "'");
        }
    }
    return BitStream(std::move(bits));
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

BitStream BitStream::from_hex(std::string_view hex, std::size_t nbits) {
    if (nbits > hex.size() * 4) throw std::invalid_argument("BitStream: hex too short for bit count");
    if (hex.size() * 4 >= nbits + 4) throw std::invalid_argument("BitStream: hex has extra digits");
    std::vector<std::uint8_t> bits;
    bits.reserve(nbits);
    for (char c : hex) {
        int v = hex_value(c);
        if (v < 0) throw std::invalid_argument(std::string("BitStream: invalid hex digit '") + c + "'");
        for (int shift = 3; shift >= 0 && bits.size() < nbits; --shift) {
            bits.push_back(static_cast<std::uint8_t>((v >> shift) & 1));
        }
    }
    return BitStream(std::move(bits));
}

BitStream BitStream::from_bytes(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (auto byte : bytes) {
        for (int shift = 7; shift >= 0; --shift) bits.push_back(static_cast<std::uint8_t>((byte >> shift) & 1));
    }
    return BitStream(std::move(bits));
}

std::string BitStream::to_string() const {
    std::string out;
    out.reserve(bits_.size());
    for (auto b : bits_) out.push_back(static_cast<char>('0' + b));
    return out;
}

std::string BitStream::to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve((bits_.size() + 3) / 4);
    for (std::size_t i = 0; i < bits_.size(); i += 4) {
        int v = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            v <<= 1;
            if (i + j < bits_.size()) v |= bits_[i + j];
        }
        out.push_back(kDigits[v]);
    }
    return out;
}

std::vector<std::uint8_t> BitStream::to_bytes() const {
    std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    return out;
}

std::size_t BitStream::count_ones() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void BitStream::push_back(std::uint8_t bit) {
    if (bit > 1) throw std::invalid_argument("BitStream: bit value must be 0 or 1");
    bits_.push_back(bit);
}

void BitStream::append(const BitStream& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

BitStream BitStream::slice(std::size_t offset, std::size_t length) const {
    if (offset > bits_.size() || length > bits_.size() - offset) {
        throw std::out_of_range("BitStream::slice out of range");
    }
    auto first = bits_.begin() + static_cast<std::ptrdiff_t>(offset);
    return BitStream(std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(length)));
}

BitStream prbs(std::uint64_t seed, std::size_t nbits) {
    std::mt19937_64 gen(seed);
    std::vector<std::uint8_t> bits;
    bits.reserve(nbits);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < nbits; ++i) {
        if (i % 64 == 0) word = gen();
        bits.push_back(static_cast<std::uint8_t>((word >> (i % 64)) & 1));
    }
    return BitStream(std::move(bits));
}

}  // namespace fsc
