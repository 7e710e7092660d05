#pragma once

// Synthetic victim workloads replayed through the simulator. Each generator
// returns the attacker's trace together with the ground truth that produced
// it, so analyzers can be scored against known answers.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fsyncchan/analyzer.hpp"
#include "fsyncchan/simchan.hpp"
#include "fsyncchan/trace.hpp"

namespace fsc {

// Attacker fsync-only probe next to a victim whose flushes carry data and
// metadata, hence a much longer contended latency than sender-vs-receiver.
ContentionModel victim_model(std::int64_t contended_mean_ns, std::int64_t contended_std_ns);

struct VictimEvent {
    std::int64_t start_ns;
    std::int64_t end_ns;
    bool split = false;
    std::string label;
};

struct WorkloadReplay {
    LatencyTrace trace;
    ActivitySchedule victim;
    std::vector<VictimEvent> events;
};

struct InsertWorkload {
    std::size_t n_inserts = 400;
    std::size_t n_splits = 49;
    std::int64_t idle_min_ns = 4'000'000;
    std::int64_t idle_max_ns = 12'000'000;
    // Span of one insert transaction, first to last flush.
    LatencyDistribution normal_commit{550'000, 150'000, 150'000};
    LatencyDistribution split_commit{1'450'000, 300'000, 300'000};
    std::size_t fsyncs_per_insert = 3;
    std::int64_t intra_gap_min_ns = 10'000;
    std::int64_t intra_gap_max_ns = 40'000;
    ContentionModel model = victim_model(120'000, 20'000);
};

// n_inserts database inserts, n_splits of them B-tree node splits.
WorkloadReplay replay_inserts(const InsertWorkload& w, const NoiseProcess& noise, std::uint64_t seed);

struct RequestRateWorkload {
    std::vector<std::size_t> requests_per_bucket;
    std::int64_t bucket_ns = 60'000'000'000;
    // Attacker samples above threshold per victim request.
    std::size_t hits_per_request = 10;
    std::int64_t min_spacing_ns = 2'000'000;
    ContentionModel model = victim_model(80'000, 8'000);
};

WorkloadReplay replay_requests(const RequestRateWorkload& w, const NoiseProcess& noise, std::uint64_t seed);

// Inter-keystroke delays drawn around 200 ms, none below 100 ms.
std::vector<std::int64_t> sample_keystroke_delays(std::size_t n, std::uint64_t seed);

struct KeystrokeWorkload {
    std::vector<std::int64_t> delays_ns;
    std::int64_t first_key_ns = 20'000'000;
    // Time from the key press until the service program's flush.
    LatencyDistribution service_delay{3'000'000, 1'000'000, 200'000};
    LatencyDistribution flush_len{250'000, 50'000, 60'000};
    ContentionModel model = victim_model(90'000, 12'000);
};

// Events are the flushes, one per key press (delays.size() + 1 keys).
WorkloadReplay replay_keystrokes(const KeystrokeWorkload& w, const NoiseProcess& noise, std::uint64_t seed);

// The four classified database operations: bulk insert, count query,
// single-row update, bulk update.
enum class DbOperation { I1, Q1, U1, U2 };

inline constexpr DbOperation kDbOperations[] = {DbOperation::I1, DbOperation::Q1, DbOperation::U1, DbOperation::U2};

std::string_view to_string(DbOperation op);

WorkloadReplay replay_db_operation(DbOperation op, std::uint64_t seed);

// n_per_class traces of each operation, labeled I1/Q1/U1/U2, named
// "<label>_<index>.csv".
std::vector<LabeledTrace> db_operation_dataset(std::size_t n_per_class, std::uint64_t seed);

}  // namespace fsc
