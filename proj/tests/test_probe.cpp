#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fsyncchan/error.hpp"
#include "fsyncchan/probe.hpp"

using namespace fsc;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    TempFile() {
        path = fs::temp_directory_path() / ("fsyncchan_probe_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter++));
        std::ofstream(path) << "x";
    }
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
    static inline int counter = 0;
};

}  // namespace

TEST_CASE("monotonic clock advances and reports a resolution") {
    const auto a = monotonic_now_ns();
    const auto b = monotonic_now_ns();
    CHECK(b >= a);
    CHECK(monotonic_resolution_ns() > 0);
}

TEST_CASE("probe handle refuses missing files and never creates them") {
    const fs::path missing = fs::temp_directory_path() / "fsyncchan_probe_does_not_exist";
    fs::remove(missing);
    CHECK_THROWS_AS(ProbeHandle(missing, ProbeOptions{}), ProbeError);
    CHECK_FALSE(fs::exists(missing));
    CHECK_THROWS_AS(ProbeHandle(fs::temp_directory_path(), ProbeOptions{}), ProbeError);
}

TEST_CASE("probe_once gives positive latencies in every mode") {
    for (ProbeMode mode : {ProbeMode::FsyncOnly, ProbeMode::WriteFsync, ProbeMode::FtruncateFsync}) {
        CAPTURE(to_string(mode));
        TempFile f;
        ProbeHandle h(f.path, ProbeOptions{mode});
        CHECK(h.meta().warmup_samples == kWarmupSamples);
        std::int64_t prev_end = 0;
        for (int i = 0; i < 5; ++i) {
            const LatencySample s = h.probe_once();
            CHECK(s.latency_ns > 0);
            CHECK(s.timestamp_ns >= prev_end);
            prev_end = s.end_ns();
        }
        CHECK(h.meta().probe_mode == mode);
        // Warm-up still owed by this session.
        CHECK(h.meta().warmup_samples == kWarmupSamples - 5);
    }
}

TEST_CASE("ftruncate mode keeps the file within the configured size range") {
    TempFile f;
    ProbeOptions opts{ProbeMode::FtruncateFsync, 2048, 4096, 3};
    ProbeHandle h(f.path, opts);
    for (int i = 0; i < 10; ++i) {
        h.probe_once();
        const auto size = fs::file_size(f.path);
        CHECK(size >= 2048);
        CHECK(size <= 4096);
    }
}

TEST_CASE("probe_for and busy_fsync_for run for the requested time") {
    TempFile f;
    ProbeHandle h(f.path, ProbeOptions{});
    const LatencyTrace t = probe_for(h, 2000);
    CHECK(t.size() >= 1);
    CHECK(is_sequential(t));
    CHECK_THROWS_AS(probe_for(h, 0), std::invalid_argument);
    const auto start = h.now_ns();
    CHECK(busy_fsync_for(h, 1000) >= 1);
    CHECK(h.now_ns() - start >= 1'000'000);
}

TEST_CASE("handles move without double close") {
    TempFile f;
    ProbeHandle a(f.path, ProbeOptions{});
    ProbeHandle b(std::move(a));
    CHECK(b.probe_once().latency_ns > 0);
    ProbeHandle c(f.path, ProbeOptions{});
    c = std::move(b);
    CHECK(c.probe_once().latency_ns > 0);
}
