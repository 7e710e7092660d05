#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "fsyncchan/bitstream.hpp"
#include "fsyncchan/config.hpp"
#include "fsyncchan/trace.hpp"

namespace fsc {

using Rng = std::mt19937_64;

// Independent, reproducible substream of a run seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

// Gaussian truncated below at floor_ns.
struct LatencyDistribution {
    std::int64_t mean_ns = 0;
    std::int64_t stddev_ns = 0;
    std::int64_t floor_ns = 1000;

    void validate() const;
    std::int64_t draw(Rng& rng) const;
};

enum class ModelMode { Empirical, Decomposed };

// Which part of a probe must coincide with competing activity for the probe
// to see contention.
enum class OverlapRule {
    IssueInstant,  // a competing commit is in flight when the fsync is issued
    FullInterval,  // competing activity touches any part of the probe
};

struct ContentionModel {
    ModelMode mode = ModelMode::Empirical;
    LatencyDistribution standalone;
    LatencyDistribution contended;

    // Decomposed mode: data flush + metadata blocks + device flush, plus a
    // wait for the previous committing transaction under contention.
    // standalone.stddev_ns doubles as service-time jitter.
    std::int64_t t_data_ns = 0;
    std::int64_t t_flush_ns = 0;
    std::int64_t t_meta_per_block_ns = 0;
    std::int64_t n_meta_blocks = 0;
    LatencyDistribution upsilon_prev;

    OverlapRule overlap = OverlapRule::IssueInstant;
    // Syscall and loop cost added between consecutive probes.
    std::int64_t probe_overhead_ns = 2000;

    std::int64_t base_commit_ns() const {
        return t_data_ns + n_meta_blocks * t_meta_per_block_ns + t_flush_ns;
    }

    void validate() const;

    std::int64_t draw_standalone(Rng& rng) const;
    std::int64_t draw_contended(Rng& rng) const;

    // fsync-only receiver vs fsync-only competitor on one SATA SSD.
    static ContentionModel sata_fsync_only();
    // Ext4 receiver vs XFS competitor on a second SSD (fsync-only rows).
    static ContentionModel cross_disk_fsync_only();
};

// Sorted, nonoverlapping half-open activity intervals.
class ActivitySchedule {
public:
    struct Interval {
        std::int64_t start_ns;
        std::int64_t end_ns;
    };

    ActivitySchedule() = default;
    // Throws std::invalid_argument unless sorted, nonempty and nonoverlapping.
    explicit ActivitySchedule(std::vector<Interval> intervals);

    bool active_at(std::int64_t t) const;
    bool overlaps(std::int64_t begin, std::int64_t end) const;
    std::span<const Interval> intervals() const { return intervals_; }
    std::int64_t end_ns() const { return intervals_.empty() ? 0 : intervals_.back().end_ns; }

private:
    std::vector<Interval> intervals_;
};

// One slot of length t_s per bit; '1' slots are active.
struct SenderSchedule {
    struct Slot {
        std::int64_t start_ns;
        std::int64_t end_ns;
        bool active;
    };

    std::vector<Slot> slots;

    static SenderSchedule from_bits(const BitStream& bits, std::int64_t symbol_ns, std::int64_t origin_ns = 0);

    std::int64_t end_ns() const { return slots.empty() ? 0 : slots.back().end_ns; }
    std::size_t active_count() const;
    // Adjacent active slots merged.
    ActivitySchedule activity() const;
};

enum class NoiseDegree { None, Low, Medium, High, Critical };

std::string_view to_string(NoiseDegree degree);
NoiseDegree parse_noise_degree(std::string_view text);
double default_burst_rate_hz(NoiseDegree degree);

// Background fsync bursts arriving as a Poisson process.
struct NoiseProcess {
    NoiseDegree degree = NoiseDegree::None;
    double burst_rate_hz = 0.0;
    LatencyDistribution burst_len;

    void validate() const;

    // Rate from the degree table, burst lengths shaped like a contended fsync.
    static NoiseProcess from_degree(NoiseDegree degree, const LatencyDistribution& burst_len);
    static NoiseProcess none() { return {}; }
};

// Lazily realized noise bursts; queried with nondecreasing probe start times.
class NoiseState {
public:
    NoiseState(const NoiseProcess& process, Rng rng);

    bool in_flight(std::int64_t t);
    bool overlaps(std::int64_t begin, std::int64_t end);
    std::size_t bursts_started() const { return started_; }

private:
    void generate_until(std::int64_t t);
    void prune(std::int64_t t);

    NoiseProcess process_;
    Rng rng_;
    std::int64_t next_arrival_ = 0;
    std::deque<ActivitySchedule::Interval> live_;
    std::size_t started_ = 0;
};

struct SimProbeResult {
    LatencySample sample;
    std::int64_t clock_ns;  // issue time of the next probe
    bool contended;
};

// One receiver fsync at virtual time clock_ns.
SimProbeResult sim_probe(std::int64_t clock_ns, const ActivitySchedule& competitor, const ContentionModel& model,
                         NoiseState& noise, Rng& rng);

struct TransmitOptions {
    // Idle time before the first symbol, available for calibration.
    std::int64_t lead_in_ns = 0;
    // Extra receiver time after the last symbol.
    std::int64_t tail_ns = 0;
};

// Receiver trace while a sender keys out `bits` on a t_s grid starting at
// opts.lead_in_ns. Pure function of its inputs and the seed.
LatencyTrace sim_transmit(const BitStream& bits, const ChannelConfig& cfg, const ContentionModel& model,
                          const NoiseProcess& noise, std::uint64_t seed, TransmitOptions opts = {});

// Receiver trace over [0, duration_ns) against arbitrary competing activity.
LatencyTrace sim_observe(const ActivitySchedule& competitor, std::int64_t duration_ns, const ContentionModel& model,
                         const NoiseProcess& noise, std::uint64_t seed);

struct CommitRecord {
    std::size_t id;
    std::int64_t arrival_ns;
    std::int64_t start_ns;
    std::int64_t completion_ns;
    std::int64_t service_ns;
    std::int64_t upsilon_prev_ns;  // wait for the in-flight commit

    std::int64_t latency_ns() const { return completion_ns - arrival_ns; }
};

// FIFO journal: each fsync commit waits for the one in flight ahead of it.
// arrivals must be nondecreasing; the log is in completion order.
std::vector<CommitRecord> simulate_journal(std::span<const std::int64_t> arrivals_ns, const ContentionModel& model,
                                           Rng& rng);

// Two fsyncs, the second arriving halfway through the first commit.
std::vector<CommitRecord> journal_serialization_check(const ContentionModel& model, Rng& rng);

// key=value simulator parameters; '#' starts a comment.
struct SimParams {
    ContentionModel model = ContentionModel::sata_fsync_only();
    NoiseProcess noise;
    std::optional<std::uint64_t> seed;
};

SimParams parse_sim_params(std::istream& in);
SimParams load_sim_params(const std::filesystem::path& path);

}  // namespace fsc
