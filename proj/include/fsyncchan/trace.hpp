#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsyncchan/config.hpp"

namespace fsc {

// One fsync call. timestamp is the fsync start relative to session start;
// latency covers the fsync call only.
struct LatencySample {
    std::int64_t timestamp_ns = 0;
    std::int64_t latency_ns = 0;

    std::int64_t end_ns() const { return timestamp_ns + latency_ns; }

    friend bool operator==(const LatencySample&, const LatencySample&) = default;
};

inline constexpr std::size_t kWarmupSamples = 16;

struct TraceMeta {
    ProbeMode probe_mode = ProbeMode::FsyncOnly;
    std::string session_id;
    std::int64_t clock_resolution_ns = 1;
    // Leading samples excluded from calibration.
    std::size_t warmup_samples = 0;
};

struct LatencyTrace {
    std::vector<LatencySample> samples;
    TraceMeta meta;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// Positive latencies and nondecreasing timestamps; throws ValidationError.
void check_ordered(const LatencyTrace& trace);

// True when no two samples overlap in time, as produced by one sequential probe.
bool is_sequential(const LatencyTrace& trace);

// CSV: header "timestamp_ns,latency_ns", one sample per LF-terminated line.
// Meta is not serialized.
void trace_write(const LatencyTrace& trace, std::ostream& sink);
LatencyTrace trace_read(std::istream& source);

void trace_write_file(const LatencyTrace& trace, const std::filesystem::path& path);
LatencyTrace trace_read_file(const std::filesystem::path& path);

}  // namespace fsc
