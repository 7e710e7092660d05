#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fsyncchan/bitstream.hpp"
#include "fsyncchan/config.hpp"

namespace fsc {

struct Frame {
    BitStream header;
    BitStream payload;

    BitStream to_bits() const;
};

// Splits the payload into cfg.payload_len chunks, zero-pads the last one and
// prefixes each with the header. Payload length travels out of band.
std::vector<Frame> encode_frames(const BitStream& payload_bits, const ChannelConfig& cfg);

// Concatenated frame payloads trimmed to payload_bits.
BitStream decode_frames(const std::vector<Frame>& frames, std::size_t payload_bits);

// Header+payload of every frame, back to back: what the sender keys out.
BitStream frames_to_stream(const std::vector<Frame>& frames);

std::size_t hamming_distance(const BitStream& a, std::size_t a_offset, const BitStream& b);

// Smallest offset whose |header|-long window differs from header in at most
// max_mismatches positions.
std::optional<std::size_t> find_frame_start(const BitStream& bits, const BitStream& header,
                                            std::size_t max_mismatches);

}  // namespace fsc
