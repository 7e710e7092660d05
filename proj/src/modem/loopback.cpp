#include <stdexcept>

#include "fsyncchan/modem.hpp"

namespace fsc {

LoopbackResult sim_loopback(const BitStream& bits, const ChannelConfig& cfg, const ContentionModel& model,
                            const NoiseProcess& noise, std::uint64_t seed, std::int64_t lead_in_ns) {
    cfg.validate();
    if (lead_in_ns <= 0) throw std::invalid_argument("sim_loopback: lead-in must be positive");
    const auto schedule = SenderSchedule::from_bits(bits, cfg.symbol_duration_ns(), lead_in_ns);
    SimSource source(schedule.activity(), model, noise, seed);

    LoopbackResult out;
    const LatencyTrace quiet = collect_quiet(source, lead_in_ns);
    out.threshold = cfg.theta_ns > 0 ? manual_threshold(cfg.theta_ns) : calibrate(quiet, cfg);

    // The lead-in usually overshoots by part of a probe; the grid stays put.
    SymbolReceiver rx(source, cfg, out.threshold, lead_in_ns);
    std::vector<std::uint8_t> received;
    received.reserve(bits.size());
    while (received.size() < bits.size()) {
        auto d = rx.next();
        if (!d) break;
        received.push_back(d->bit);
    }
    out.received = BitStream(std::move(received));
    out.probes = source.probes_issued();
    return out;
}

}  // namespace fsc
