#include "fsyncchan/simchan.hpp"

#include <stdexcept>
#include <string>

namespace fsc {

namespace {

constexpr std::uint64_t kLatencyStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

}  // namespace

SimProbeResult sim_probe(std::int64_t clock_ns, const ActivitySchedule& competitor, const ContentionModel& model,
                         NoiseState& noise, Rng& rng) {
    if (clock_ns < 0) throw std::invalid_argument("sim_probe: negative clock");

    bool contended = false;
    std::int64_t latency = 0;
    switch (model.overlap) {
        case OverlapRule::IssueInstant: {
            // Evaluate both sources so the noise stream advances identically
            // regardless of sender activity.
            const bool noisy = noise.in_flight(clock_ns);
            contended = competitor.active_at(clock_ns) || noisy;
            latency = contended ? model.draw_contended(rng) : model.draw_standalone(rng);
            break;
        }
        case OverlapRule::FullInterval: {
            latency = model.draw_standalone(rng);
            const bool noisy = noise.overlaps(clock_ns, clock_ns + latency);
            contended = competitor.overlaps(clock_ns, clock_ns + latency) || noisy;
            if (contended) latency = model.draw_contended(rng);
            break;
        }
    }
    return {LatencySample{clock_ns, latency}, clock_ns + latency + model.probe_overhead_ns, contended};
}

LatencyTrace sim_observe(const ActivitySchedule& competitor, std::int64_t duration_ns, const ContentionModel& model,
                         const NoiseProcess& noise, std::uint64_t seed) {
    model.validate();
    if (duration_ns <= 0) throw std::invalid_argument("sim_observe: duration must be positive");
    Rng rng = make_rng(seed, kLatencyStream);
    NoiseState noise_state(noise, make_rng(seed, kNoiseStream));

    LatencyTrace trace;
    trace.meta.probe_mode = ProbeMode::FsyncOnly;
    trace.meta.session_id = "sim-" + std::to_string(seed);
    trace.meta.clock_resolution_ns = 1;
    trace.meta.warmup_samples = kWarmupSamples;

    std::int64_t clock = 0;
    while (clock < duration_ns) {
        auto r = sim_probe(clock, competitor, model, noise_state, rng);
        trace.samples.push_back(r.sample);
        clock = r.clock_ns;
    }
    return trace;
}

LatencyTrace sim_transmit(const BitStream& bits, const ChannelConfig& cfg, const ContentionModel& model,
                          const NoiseProcess& noise, std::uint64_t seed, TransmitOptions opts) {
    cfg.validate();
    if (bits.empty()) throw std::invalid_argument("sim_transmit: empty bit stream");
    if (opts.lead_in_ns < 0 || opts.tail_ns < 0) throw std::invalid_argument("sim_transmit: negative lead-in or tail");
    const auto schedule = SenderSchedule::from_bits(bits, cfg.symbol_duration_ns(), opts.lead_in_ns);
    return sim_observe(schedule.activity(), schedule.end_ns() + opts.tail_ns, model, noise, seed);
}

std::vector<CommitRecord> simulate_journal(std::span<const std::int64_t> arrivals_ns, const ContentionModel& model,
                                           Rng& rng) {
    if (model.mode != ModelMode::Decomposed) {
        throw std::invalid_argument("simulate_journal: requires a decomposed contention model");
    }
    model.validate();
    std::vector<CommitRecord> log;
    log.reserve(arrivals_ns.size());
    std::int64_t journal_free_at = 0;
    for (std::size_t i = 0; i < arrivals_ns.size(); ++i) {
        const std::int64_t arrival = arrivals_ns[i];
        if (i > 0 && arrival < arrivals_ns[i - 1]) {
            throw std::invalid_argument("simulate_journal: arrivals must be nondecreasing");
        }
        const std::int64_t start = std::max(arrival, journal_free_at);
        const std::int64_t service = model.draw_standalone(rng);
        const std::int64_t completion = start + service;
        log.push_back(CommitRecord{i, arrival, start, completion, service, start - arrival});
        journal_free_at = completion;
    }
    return log;
}

std::vector<CommitRecord> journal_serialization_check(const ContentionModel& model, Rng& rng) {
    const std::int64_t arrivals[] = {0, model.base_commit_ns() / 2};
    return simulate_journal(arrivals, model, rng);
}

}  // namespace fsc
