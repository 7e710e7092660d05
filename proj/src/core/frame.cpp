#include "fsyncchan/frame.hpp"

#include <stdexcept>

namespace fsc {

BitStream Frame::to_bits() const {
    BitStream out = header;
    out.append(payload);
    return out;
}

std::vector<Frame> encode_frames(const BitStream& payload_bits, const ChannelConfig& cfg) {
    cfg.validate();
    if (payload_bits.empty()) throw std::invalid_argument("encode_frames: empty payload");

    const std::size_t chunk = cfg.payload_len;
    std::vector<Frame> frames;
    frames.reserve((payload_bits.size() + chunk - 1) / chunk);
    for (std::size_t offset = 0; offset < payload_bits.size(); offset += chunk) {
        const std::size_t take = std::min(chunk, payload_bits.size() - offset);
        BitStream payload = payload_bits.slice(offset, take);
        for (std::size_t i = take; i < chunk; ++i) payload.push_back(0);
        frames.push_back(Frame{cfg.header_pattern, std::move(payload)});
    }
    return frames;
}

BitStream decode_frames(const std::vector<Frame>& frames, std::size_t payload_bits) {
    BitStream out;
    for (const auto& f : frames) out.append(f.payload);
    if (payload_bits > out.size()) throw std::invalid_argument("decode_frames: frames shorter than payload length");
    return out.slice(0, payload_bits);
}

BitStream frames_to_stream(const std::vector<Frame>& frames) {
    BitStream out;
    for (const auto& f : frames) out.append(f.to_bits());
    return out;
}

std::size_t hamming_distance(const BitStream& a, std::size_t a_offset, const BitStream& b) {
    if (a_offset > a.size() || b.size() > a.size() - a_offset) {
        throw std::out_of_range("hamming_distance: window exceeds stream");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < b.size(); ++i) d += a[a_offset + i] != b[i];
    return d;
}

std::optional<std::size_t> find_frame_start(const BitStream& bits, const BitStream& header,
                                            std::size_t max_mismatches) {
    const std::size_t h = header.size();
    if (h == 0 || bits.size() < h) return std::nullopt;
    for (std::size_t offset = 0; offset + h <= bits.size(); ++offset) {
        std::size_t mismatches = 0;
        for (std::size_t i = 0; i < h && mismatches <= max_mismatches; ++i) {
            mismatches += bits[offset + i] != header[i];
        }
        if (mismatches <= max_mismatches) return offset;
    }
    return std::nullopt;
}

}  // namespace fsc
