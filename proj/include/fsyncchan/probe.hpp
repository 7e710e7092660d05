#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>

#include "fsyncchan/config.hpp"
#include "fsyncchan/trace.hpp"

namespace fsc {

// Monotonic raw clock in nanoseconds.
std::int64_t monotonic_now_ns();
std::int64_t monotonic_resolution_ns();

struct ProbeOptions {
    ProbeMode mode = ProbeMode::FsyncOnly;
    std::int64_t truncate_min_bytes = 1024;
    std::int64_t truncate_max_bytes = 64 * 1024;
    std::uint64_t seed = 1;
};

// Times fsync on an ordinary, caller-owned file. The file must already exist;
// the handle opens it read-write and never creates or removes anything.
class ProbeHandle {
public:
    static constexpr std::size_t kWriteBytes = 1024;

    ProbeHandle(const std::filesystem::path& path, ProbeOptions opts);
    ~ProbeHandle();

    ProbeHandle(const ProbeHandle&) = delete;
    ProbeHandle& operator=(const ProbeHandle&) = delete;
    ProbeHandle(ProbeHandle&& other) noexcept;
    ProbeHandle& operator=(ProbeHandle&& other) noexcept;

    ProbeMode mode() const { return opts_.mode; }
    // Nanoseconds since this handle's session started.
    std::int64_t now_ns() const;
    std::int64_t session_start_ns() const { return session_start_; }

    // Applies the mode's mutation (untimed), then times fsync alone.
    LatencySample probe_once();

    // Mutation + fsync without recording; used by the sender.
    void mutate_and_sync();

    TraceMeta meta() const;

private:
    void mutate();

    int fd_ = -1;
    ProbeOptions opts_;
    std::array<char, kWriteBytes> buffer_{};
    std::mt19937_64 rng_;
    std::int64_t session_start_ = 0;
    std::int64_t last_end_ = 0;
    std::size_t probes_issued_ = 0;
};

// Repeats probe_once until at least duration_us of wall time has passed.
// Always returns at least one sample.
LatencyTrace probe_for(ProbeHandle& h, std::int64_t duration_us);

// Sender side of a '1': mutation + fsync in a loop for duration_us.
// Returns the number of fsyncs issued.
std::int64_t busy_fsync_for(ProbeHandle& h, std::int64_t duration_us);

// Same loop against an absolute session deadline (h.now_ns() scale).
std::int64_t busy_fsync_until(ProbeHandle& h, std::int64_t deadline_ns);

}  // namespace fsc
