#include "fsyncchan/probe.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <stdexcept>
#include <string>
#include <utility>

#include "fsyncchan/error.hpp"

namespace fsc {

std::int64_t monotonic_now_ns() {
    timespec ts{};
    ::clock_gettime(CLOCK_MONOTONIC_RAW, &ts);
    return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

std::int64_t monotonic_resolution_ns() {
    timespec ts{};
    if (::clock_getres(CLOCK_MONOTONIC_RAW, &ts) != 0) return 1;
    return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

ProbeHandle::ProbeHandle(const std::filesystem::path& path, ProbeOptions opts)
    : opts_(opts), rng_(opts.seed) {
    if (opts_.truncate_min_bytes < 0 || opts_.truncate_max_bytes < opts_.truncate_min_bytes) {
        throw std::invalid_argument("ProbeHandle: bad truncate size range");
    }
    fd_ = ::open(path.c_str(), O_RDWR | O_CLOEXEC);
    if (fd_ < 0) throw ProbeError("open " + path.string(), errno);

    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
        int err = errno;
        ::close(fd_);
        throw ProbeError("fstat " + path.string(), err);
    }
    if (!S_ISREG(st.st_mode)) {
        ::close(fd_);
        throw std::invalid_argument("ProbeHandle: " + path.string() + " is not a regular file");
    }
    if (opts_.mode == ProbeMode::WriteFsync && st.st_size < static_cast<off_t>(kWriteBytes)) {
        if (::ftruncate(fd_, kWriteBytes) != 0) {
            int err = errno;
            ::close(fd_);
            throw ProbeError("ftruncate " + path.string(), err);
        }
    }
    for (std::size_t i = 0; i < buffer_.size(); ++i) buffer_[i] = static_cast<char>('a' + i % 26);
    session_start_ = monotonic_now_ns();
}

ProbeHandle::~ProbeHandle() {
    if (fd_ >= 0) ::close(fd_);
}

ProbeHandle::ProbeHandle(ProbeHandle&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      opts_(other.opts_),
      buffer_(other.buffer_),
      rng_(other.rng_),
      session_start_(other.session_start_),
      last_end_(other.last_end_),
      probes_issued_(other.probes_issued_) {}

ProbeHandle& ProbeHandle::operator=(ProbeHandle&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(other.fd_, -1);
        opts_ = other.opts_;
        buffer_ = other.buffer_;
        rng_ = other.rng_;
        session_start_ = other.session_start_;
        last_end_ = other.last_end_;
        probes_issued_ = other.probes_issued_;
    }
    return *this;
}

std::int64_t ProbeHandle::now_ns() const { return monotonic_now_ns() - session_start_; }

void ProbeHandle::mutate() {
    switch (opts_.mode) {
        case ProbeMode::FsyncOnly:
            break;
        case ProbeMode::WriteFsync: {
            std::size_t done = 0;
            while (done < buffer_.size()) {
                ssize_t n = ::pwrite(fd_, buffer_.data() + done, buffer_.size() - done, static_cast<off_t>(done));
                if (n < 0) {
                    if (errno == EINTR) continue;
                    throw ProbeError("pwrite", errno);
                }
                done += static_cast<std::size_t>(n);
            }
            break;
        }
        case ProbeMode::FtruncateFsync: {
            std::uniform_int_distribution<std::int64_t> size(opts_.truncate_min_bytes, opts_.truncate_max_bytes);
            if (::ftruncate(fd_, static_cast<off_t>(size(rng_))) != 0) throw ProbeError("ftruncate", errno);
            break;
        }
    }
}

LatencySample ProbeHandle::probe_once() {
    if (fd_ < 0) throw std::logic_error("ProbeHandle: moved-from handle");
    mutate();
    const std::int64_t start = monotonic_now_ns();
    const int rc = ::fsync(fd_);
    const std::int64_t end = monotonic_now_ns();
    if (rc != 0) throw ProbeError("fsync", errno);
    if (end < start || start - session_start_ < last_end_) {
        throw std::logic_error("ProbeHandle: monotonic clock went backwards");
    }
    // A zero delta only happens below clock resolution; report one tick.
    LatencySample s{start - session_start_, std::max<std::int64_t>(end - start, 1)};
    last_end_ = s.end_ns();
    ++probes_issued_;
    return s;
}

void ProbeHandle::mutate_and_sync() {
    if (fd_ < 0) throw std::logic_error("ProbeHandle: moved-from handle");
    mutate();
    if (::fsync(fd_) != 0) throw ProbeError("fsync", errno);
}

TraceMeta ProbeHandle::meta() const {
    TraceMeta m;
    m.probe_mode = opts_.mode;
    m.session_id = "probe-" + std::to_string(session_start_);
    m.clock_resolution_ns = monotonic_resolution_ns();
    // Warm-up counts from the start of the session, not of this trace.
    m.warmup_samples = probes_issued_ < kWarmupSamples ? kWarmupSamples - probes_issued_ : 0;
    return m;
}

LatencyTrace probe_for(ProbeHandle& h, std::int64_t duration_us) {
    if (duration_us <= 0) throw std::invalid_argument("probe_for: duration must be positive");
    LatencyTrace trace;
    trace.meta = h.meta();
    const std::int64_t deadline = h.now_ns() + duration_us * 1000;
    do {
        trace.samples.push_back(h.probe_once());
    } while (h.now_ns() < deadline);
    return trace;
}

std::int64_t busy_fsync_until(ProbeHandle& h, std::int64_t deadline_ns) {
    std::int64_t count = 0;
    do {
        h.mutate_and_sync();
        ++count;
    } while (h.now_ns() < deadline_ns);
    return count;
}

std::int64_t busy_fsync_for(ProbeHandle& h, std::int64_t duration_us) {
    if (duration_us <= 0) throw std::invalid_argument("busy_fsync_for: duration must be positive");
    return busy_fsync_until(h, h.now_ns() + duration_us * 1000);
}

}  // namespace fsc
