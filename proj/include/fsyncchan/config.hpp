#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "fsyncchan/bitstream.hpp"

namespace fsc {

enum class ProbeMode { FsyncOnly, WriteFsync, FtruncateFsync };

enum class DecisionRule { MeanThreshold, StddevThreshold };

std::string_view to_string(ProbeMode mode);
std::string_view to_string(DecisionRule rule);
// Accepts the CLI spellings: fsync|write|ftruncate and mean|stddev.
ProbeMode parse_probe_mode(std::string_view text);
DecisionRule parse_decision_rule(std::string_view text);

// 16-bit alternating preamble followed by the sync word 10110101.
BitStream default_header();

inline constexpr std::size_t kDefaultPayloadLen = 8000;

struct ChannelConfig {
    std::int64_t symbol_duration_us = 50;
    ProbeMode probe_mode = ProbeMode::FsyncOnly;
    DecisionRule decision_rule = DecisionRule::MeanThreshold;
    // Initial threshold; 0 means "calibrate before use".
    std::int64_t theta_ns = 0;
    BitStream header_pattern = default_header();
    std::size_t payload_len = kDefaultPayloadLen;
    std::size_t samples_per_symbol_min = 1;
    std::size_t header_max_mismatches = 1;

    std::int64_t symbol_duration_ns() const { return symbol_duration_us * 1000; }

    // Throws std::invalid_argument on a broken invariant.
    void validate() const;
};

}  // namespace fsc
