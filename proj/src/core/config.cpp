#include "fsyncchan/config.hpp"

#include <stdexcept>
#include <string>

namespace fsc {

std::string_view to_string(ProbeMode mode) {
    switch (mode) {
        case ProbeMode::FsyncOnly: return "fsync";
        case ProbeMode::WriteFsync: return "write";
        case ProbeMode::FtruncateFsync: return "ftruncate";
    }
    return "unknown";
}

std::string_view to_string(DecisionRule rule) {
    switch (rule) {
        case DecisionRule::MeanThreshold: return "mean";
        case DecisionRule::StddevThreshold: return "stddev";
    }
    return "unknown";
}

ProbeMode parse_probe_mode(std::string_view text) {
    if (text == "fsync") return ProbeMode::FsyncOnly;
    if (text == "write") return ProbeMode::WriteFsync;
    if (text == "ftruncate") return ProbeMode::FtruncateFsync;
    throw std::invalid_argument("unknown probe mode '" + std::string(text) + "'");
}

DecisionRule parse_decision_rule(std::string_view text) {
    if (text == "mean") return DecisionRule::MeanThreshold;
    if (text == "stddev") return DecisionRule::StddevThreshold;
    throw std::invalid_argument("unknown decision rule '" + std::string(text) + "'");
}

BitStream default_header() {
    return BitStream::from_string("1010101010101010" "10110101");
}

void ChannelConfig::validate() const {
    if (symbol_duration_us <= 0) throw std::invalid_argument("symbol duration must be positive");
    if (payload_len == 0) throw std::invalid_argument("payload length must be positive");
    if (header_pattern.size() < 8) throw std::invalid_argument("header pattern must have at least 8 bits");
    if (theta_ns < 0) throw std::invalid_argument("threshold must be nonnegative");
    if (samples_per_symbol_min == 0) throw std::invalid_argument("samples_per_symbol_min must be >= 1");
    if (header_max_mismatches >= header_pattern.size()) {
        throw std::invalid_argument("header mismatch budget must be smaller than the header");
    }
}

}  // namespace fsc
