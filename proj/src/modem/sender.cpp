#include <time.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fsyncchan/modem.hpp"

namespace fsc {

namespace {

constexpr std::int64_t kSpinWindowNs = 200'000;

std::int64_t expected_contended_ns(const ContentionModel& m) {
    return m.mode == ModelMode::Empirical ? m.contended.mean_ns : m.base_commit_ns() + m.upsilon_prev.mean_ns;
}

}  // namespace

std::int64_t ProbeSender::send_one(std::int64_t deadline_ns) { return busy_fsync_until(handle_, deadline_ns); }

void ProbeSender::send_zero(std::int64_t deadline_ns) {
    // Coarse sleep, then spin: nanosleep alone overshoots a 50 us slot.
    for (std::int64_t left = deadline_ns - handle_.now_ns(); left > 0; left = deadline_ns - handle_.now_ns()) {
        if (left > kSpinWindowNs) {
            const std::int64_t nap = left - kSpinWindowNs / 2;
            timespec ts{static_cast<time_t>(nap / 1'000'000'000), static_cast<long>(nap % 1'000'000'000)};
            ::nanosleep(&ts, nullptr);
        }
    }
}

std::int64_t ScheduleBuilder::send_one(std::int64_t deadline_ns) {
    const std::int64_t start = clock_;
    const std::int64_t end = std::max(deadline_ns, start + 1);
    schedule_.slots.push_back({start, end, true});
    clock_ = end;
    const std::int64_t per_fsync = expected_contended_ns(model_) + model_.probe_overhead_ns;
    return std::max<std::int64_t>(1, (end - start + per_fsync - 1) / per_fsync);
}

void ScheduleBuilder::send_zero(std::int64_t deadline_ns) {
    const std::int64_t start = clock_;
    const std::int64_t end = std::max(deadline_ns, start + 1);
    schedule_.slots.push_back({start, end, false});
    clock_ = end;
}

std::int64_t SendReport::total_fsyncs() const {
    return std::accumulate(fsyncs_per_bit.begin(), fsyncs_per_bit.end(), std::int64_t{0});
}

SendReport send_bits(const BitStream& bits, const ChannelConfig& cfg, SenderEndpoint& endpoint) {
    cfg.validate();
    SendReport report;
    report.fsyncs_per_bit.reserve(bits.size());
    const std::int64_t t_s = cfg.symbol_duration_ns();
    const std::int64_t origin = endpoint.now_ns();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const std::int64_t deadline = origin + static_cast<std::int64_t>(i + 1) * t_s;
        if (bits[i]) {
            report.fsyncs_per_bit.push_back(endpoint.send_one(deadline));
        } else {
            endpoint.send_zero(deadline);
            report.fsyncs_per_bit.push_back(0);
        }
    }
    return report;
}

}  // namespace fsc
