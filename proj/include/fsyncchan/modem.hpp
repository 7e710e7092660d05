#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fsyncchan/bitstream.hpp"
#include "fsyncchan/config.hpp"
#include "fsyncchan/probe.hpp"
#include "fsyncchan/simchan.hpp"
#include "fsyncchan/trace.hpp"

namespace fsc {

// Where receiver latencies come from: real fsyncs, the live simulator, or a
// recorded trace. All times are nanoseconds on the source's session clock.
class SampleSource {
public:
    virtual ~SampleSource() = default;

    LatencySample probe() {
        ++issued_;
        return do_probe();
    }
    // Issue time of the next probe.
    virtual std::int64_t now_ns() const = 0;
    virtual bool exhausted() const { return false; }
    std::size_t probes_issued() const { return issued_; }

private:
    virtual LatencySample do_probe() = 0;

    std::size_t issued_ = 0;
};

class ProbeSource final : public SampleSource {
public:
    explicit ProbeSource(ProbeHandle& handle) : handle_(handle) {}
    std::int64_t now_ns() const override { return handle_.now_ns(); }

private:
    LatencySample do_probe() override { return handle_.probe_once(); }

    ProbeHandle& handle_;
};

// Receiver running inside the simulator against a competitor schedule.
class SimSource final : public SampleSource {
public:
    SimSource(ActivitySchedule competitor, ContentionModel model, const NoiseProcess& noise, std::uint64_t seed);
    std::int64_t now_ns() const override { return clock_; }

private:
    LatencySample do_probe() override;

    ActivitySchedule competitor_;
    ContentionModel model_;
    NoiseState noise_;
    Rng rng_;
    std::int64_t clock_ = 0;
};

// Replays a recorded trace as if probing live. The trace must outlive the source.
class ReplaySource final : public SampleSource {
public:
    explicit ReplaySource(std::span<const LatencySample> samples) : samples_(samples) {}
    std::int64_t now_ns() const override;
    bool exhausted() const override { return next_ >= samples_.size(); }

private:
    LatencySample do_probe() override;

    std::span<const LatencySample> samples_;
    std::size_t next_ = 0;
};

// Probes until duration_ns of source time has passed. The first
// kWarmupSamples probes of a session are marked warm-up in the meta.
LatencyTrace collect_quiet(SampleSource& source, std::int64_t duration_ns);

enum class ThresholdProvenance { Calibrated, Updated, Manual };

struct ThresholdState {
    std::int64_t theta_ns = 0;
    double quiet_mean_ns = 0.0;
    double quiet_std_ns = 0.0;
    ThresholdProvenance provenance = ThresholdProvenance::Manual;

    // Recent per-symbol statistics; the lower mode (those at or below theta)
    // re-derives the quiet level every update_period symbols.
    std::vector<std::int64_t> window;
    std::size_t window_capacity = 256;
    std::size_t update_period = 64;
    std::size_t since_update = 0;
    std::size_t window_next = 0;
    std::size_t updates = 0;

    void record(std::int64_t statistic);
};

inline constexpr std::size_t kMinCalibrationSamples = 64;

// quiet_mean + max(3 * quiet_std, quiet_mean / 2), kept above quiet_mean.
std::int64_t threshold_rule(double quiet_mean_ns, double quiet_std_ns);

// Profiles an uncontended trace. MeanThreshold works on raw latencies;
// StddevThreshold on the per-symbol sample stddev of t_s windows.
ThresholdState calibrate(const LatencyTrace& quiet_trace, const ChannelConfig& cfg);

// Fixed threshold: never re-derived from the received statistics.
ThresholdState manual_threshold(std::int64_t theta_ns);

struct SymbolDecision {
    std::uint8_t bit = 0;
    std::int64_t statistic_ns = 0;
    std::size_t n_samples = 0;
    std::size_t symbol_index = 0;
    std::int64_t theta_ns = 0;
};

// Mean latency or sample standard deviation of one symbol window.
std::int64_t symbol_statistic(std::span<const LatencySample> window, DecisionRule rule);

// Pure: the same window and threshold always give the same decision.
SymbolDecision decide_symbol(std::span<const LatencySample> window, DecisionRule rule, std::int64_t theta_ns,
                             std::size_t symbol_index);

// Free-running t_s grid anchored at origin_ns. Samples are attributed to the
// window in which they were issued; a window with no issued sample reuses the
// probe that spanned it.
class SymbolReceiver {
public:
    SymbolReceiver(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state, std::int64_t origin_ns);

    // Nullopt once the source runs dry.
    std::optional<SymbolDecision> next();

    // Hands over a sample probed by someone else on this grid (e.g. the edge
    // that anchored it).
    void carry(const LatencySample& sample);

    std::int64_t origin_ns() const { return origin_; }
    std::size_t symbols_decided() const { return index_; }

private:
    SampleSource& source_;
    const ChannelConfig& cfg_;
    ThresholdState& state_;
    std::int64_t origin_;
    std::size_t index_ = 0;
    std::optional<LatencySample> last_;
    std::optional<LatencySample> carry_;
    std::vector<LatencySample> buffer_;
};

// n_symbols decisions on a grid starting at the source's current time.
std::vector<SymbolDecision> receive_symbols(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state,
                                            std::size_t n_symbols);

BitStream decisions_to_bits(std::span<const SymbolDecision> decisions);

enum class SymbolAlignment {
    Grid,  // grid anchored at FrameSearch::origin_ns (or the source's current time)
    Edge,  // grid anchored at the first rising edge of contention
};

struct FrameSearch {
    SymbolAlignment alignment = SymbolAlignment::Grid;
    std::optional<std::int64_t> origin_ns;
    std::size_t max_symbols = std::numeric_limits<std::size_t>::max();
    std::int64_t deadline_ns = std::numeric_limits<std::int64_t>::max();
};

struct ReceivedFrame {
    BitStream payload;
    std::size_t header_symbol;  // index of the first header symbol on the grid
    std::size_t header_mismatches;
    std::int64_t grid_origin_ns;
};

// Streams decisions through header matching and returns the payload that
// follows the first match; nullopt when the budget, deadline or source ends.
std::optional<ReceivedFrame> receive_frame(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state,
                                           const FrameSearch& search = {});

// Sender side of the channel.
class SenderEndpoint {
public:
    virtual ~SenderEndpoint() = default;
    virtual std::int64_t now_ns() const = 0;
    // Keep fsyncing until the deadline; returns fsyncs issued.
    virtual std::int64_t send_one(std::int64_t deadline_ns) = 0;
    virtual void send_zero(std::int64_t deadline_ns) = 0;
};

class ProbeSender final : public SenderEndpoint {
public:
    explicit ProbeSender(ProbeHandle& handle) : handle_(handle) {}
    std::int64_t now_ns() const override { return handle_.now_ns(); }
    std::int64_t send_one(std::int64_t deadline_ns) override;
    void send_zero(std::int64_t deadline_ns) override;

private:
    ProbeHandle& handle_;
};

// Records the sender's activity as a simulator schedule.
class ScheduleBuilder final : public SenderEndpoint {
public:
    explicit ScheduleBuilder(const ContentionModel& model, std::int64_t origin_ns = 0)
        : model_(model), clock_(origin_ns) {}
    std::int64_t now_ns() const override { return clock_; }
    std::int64_t send_one(std::int64_t deadline_ns) override;
    void send_zero(std::int64_t deadline_ns) override;

    const SenderSchedule& schedule() const { return schedule_; }

private:
    ContentionModel model_;
    std::int64_t clock_;
    SenderSchedule schedule_;
};

struct SendReport {
    std::vector<std::int64_t> fsyncs_per_bit;

    std::int64_t total_fsyncs() const;
};

// One t_s slot per bit on a grid anchored at the endpoint's current time:
// busy fsync for '1', idle for '0'.
SendReport send_bits(const BitStream& bits, const ChannelConfig& cfg, SenderEndpoint& endpoint);

struct LoopbackResult {
    BitStream received;
    ThresholdState threshold;
    std::size_t probes = 0;
};

inline constexpr std::int64_t kDefaultLeadInNs = 20'000'000;

// Simulated sender and receiver sharing one clock: the receiver calibrates on
// the idle lead-in (unless cfg.theta_ns is set), then decides one symbol per
// bit on the sender's grid.
LoopbackResult sim_loopback(const BitStream& bits, const ChannelConfig& cfg, const ContentionModel& model,
                            const NoiseProcess& noise, std::uint64_t seed, std::int64_t lead_in_ns = kDefaultLeadInNs);

}  // namespace fsc
