#include "fsyncchan/simchan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fsc {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

void LatencyDistribution::validate() const {
    if (mean_ns <= 0) throw std::invalid_argument("latency distribution: mean must be positive");
    if (stddev_ns < 0) throw std::invalid_argument("latency distribution: stddev must be nonnegative");
    if (floor_ns <= 0) throw std::invalid_argument("latency distribution: floor must be positive");
}

std::int64_t LatencyDistribution::draw(Rng& rng) const {
    if (stddev_ns == 0) return std::max(mean_ns, floor_ns);
    std::normal_distribution<double> dist(static_cast<double>(mean_ns), static_cast<double>(stddev_ns));
    const auto v = static_cast<std::int64_t>(std::llround(dist(rng)));
    return std::max(v, floor_ns);
}

void ContentionModel::validate() const {
    if (probe_overhead_ns < 0) throw std::invalid_argument("contention model: negative probe overhead");
    switch (mode) {
        case ModelMode::Empirical:
            standalone.validate();
            contended.validate();
            if (contended.mean_ns <= standalone.mean_ns) {
                throw std::invalid_argument("contention model: contended mean must exceed standalone mean");
            }
            break;
        case ModelMode::Decomposed:
            if (t_data_ns < 0 || t_flush_ns < 0 || t_meta_per_block_ns < 0 || n_meta_blocks < 0) {
                throw std::invalid_argument("contention model: negative decomposed component");
            }
            if (base_commit_ns() <= 0) throw std::invalid_argument("contention model: empty commit");
            if (standalone.stddev_ns < 0 || standalone.floor_ns <= 0) {
                throw std::invalid_argument("contention model: bad standalone jitter");
            }
            upsilon_prev.validate();
            break;
    }
}

namespace {

std::int64_t draw_commit(const ContentionModel& m, Rng& rng) {
    LatencyDistribution jittered{m.base_commit_ns(), m.standalone.stddev_ns, m.standalone.floor_ns};
    return jittered.draw(rng);
}

}  // namespace

std::int64_t ContentionModel::draw_standalone(Rng& rng) const {
    return mode == ModelMode::Empirical ? standalone.draw(rng) : draw_commit(*this, rng);
}

std::int64_t ContentionModel::draw_contended(Rng& rng) const {
    if (mode == ModelMode::Empirical) return contended.draw(rng);
    const std::int64_t commit = draw_commit(*this, rng);
    return commit + upsilon_prev.draw(rng);
}

ContentionModel ContentionModel::sata_fsync_only() {
    ContentionModel m;
    m.mode = ModelMode::Empirical;
    m.standalone = {21390, 2479, 1000};
    m.contended = {43134, 2522, 1000};
    return m;
}

ContentionModel ContentionModel::cross_disk_fsync_only() {
    ContentionModel m;
    m.mode = ModelMode::Empirical;
    m.standalone = {21046, 317, 1000};
    m.contended = {22253, 1611, 1000};
    return m;
}

ActivitySchedule::ActivitySchedule(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        if (intervals_[i].end_ns <= intervals_[i].start_ns) {
            throw std::invalid_argument("activity schedule: empty interval " + std::to_string(i));
        }
        if (i > 0 && intervals_[i].start_ns < intervals_[i - 1].end_ns) {
            throw std::invalid_argument("activity schedule: interval " + std::to_string(i) + " overlaps its predecessor");
        }
    }
}

bool ActivitySchedule::active_at(std::int64_t t) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                               [](std::int64_t v, const Interval& iv) { return v < iv.start_ns; });
    if (it == intervals_.begin()) return false;
    --it;
    return t < it->end_ns;
}

bool ActivitySchedule::overlaps(std::int64_t begin, std::int64_t end) const {
    if (end <= begin) return false;
    // First interval ending after begin.
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), begin,
                               [](std::int64_t v, const Interval& iv) { return v < iv.end_ns; });
    return it != intervals_.end() && it->start_ns < end;
}

SenderSchedule SenderSchedule::from_bits(const BitStream& bits, std::int64_t symbol_ns, std::int64_t origin_ns) {
    if (symbol_ns <= 0) throw std::invalid_argument("sender schedule: symbol duration must be positive");
    SenderSchedule s;
    s.slots.reserve(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const std::int64_t start = origin_ns + static_cast<std::int64_t>(i) * symbol_ns;
        s.slots.push_back(Slot{start, start + symbol_ns, bits[i] == 1});
    }
    return s;
}

std::size_t SenderSchedule::active_count() const {
    return static_cast<std::size_t>(std::count_if(slots.begin(), slots.end(), [](const Slot& s) { return s.active; }));
}

ActivitySchedule SenderSchedule::activity() const {
    std::vector<ActivitySchedule::Interval> out;
    for (const auto& slot : slots) {
        if (!slot.active) continue;
        if (!out.empty() && out.back().end_ns == slot.start_ns) {
            out.back().end_ns = slot.end_ns;
        } else {
            out.push_back({slot.start_ns, slot.end_ns});
        }
    }
    return ActivitySchedule(std::move(out));
}

std::string_view to_string(NoiseDegree degree) {
    switch (degree) {
        case NoiseDegree::None: return "none";
        case NoiseDegree::Low: return "low";
        case NoiseDegree::Medium: return "medium";
        case NoiseDegree::High: return "high";
        case NoiseDegree::Critical: return "critical";
    }
    return "unknown";
}

NoiseDegree parse_noise_degree(std::string_view text) {
    if (text == "none") return NoiseDegree::None;
    if (text == "low") return NoiseDegree::Low;
    if (text == "medium") return NoiseDegree::Medium;
    if (text == "high") return NoiseDegree::High;
    if (text == "critical") return NoiseDegree::Critical;
    throw std::invalid_argument("unknown noise degree '" + std::string(text) + "'");
}

double default_burst_rate_hz(NoiseDegree degree) {
    switch (degree) {
        case NoiseDegree::None: return 0.0;
        case NoiseDegree::Low: return 5.0;
        case NoiseDegree::Medium: return 50.0;
        case NoiseDegree::High: return 500.0;
        case NoiseDegree::Critical: return 5000.0;
    }
    return 0.0;
}

void NoiseProcess::validate() const {
    if (!(burst_rate_hz >= 0.0) || !std::isfinite(burst_rate_hz)) {
        throw std::invalid_argument("noise: burst rate must be finite and nonnegative");
    }
    if (degree == NoiseDegree::None && burst_rate_hz != 0.0) {
        throw std::invalid_argument("noise: degree none requires a zero burst rate");
    }
    if (burst_rate_hz > 0.0) burst_len.validate();
}

NoiseProcess NoiseProcess::from_degree(NoiseDegree degree, const LatencyDistribution& burst_len) {
    return NoiseProcess{degree, default_burst_rate_hz(degree), burst_len};
}

NoiseState::NoiseState(const NoiseProcess& process, Rng rng) : process_(process), rng_(std::move(rng)) {
    process_.validate();
    if (process_.burst_rate_hz > 0.0) {
        std::exponential_distribution<double> gap(process_.burst_rate_hz / 1e9);
        next_arrival_ = static_cast<std::int64_t>(gap(rng_));
    }
}

void NoiseState::generate_until(std::int64_t t) {
    if (process_.burst_rate_hz <= 0.0) return;
    std::exponential_distribution<double> gap(process_.burst_rate_hz / 1e9);
    while (next_arrival_ <= t) {
        const std::int64_t len = process_.burst_len.draw(rng_);
        live_.push_back({next_arrival_, next_arrival_ + len});
        ++started_;
        next_arrival_ += std::max<std::int64_t>(1, static_cast<std::int64_t>(gap(rng_)));
    }
}

void NoiseState::prune(std::int64_t t) {
    // Bursts may overlap, so drop only those finished before t, from any position.
    std::erase_if(live_, [t](const ActivitySchedule::Interval& b) { return b.end_ns <= t; });
}

bool NoiseState::in_flight(std::int64_t t) {
    generate_until(t);
    prune(t);
    return std::any_of(live_.begin(), live_.end(),
                       [t](const ActivitySchedule::Interval& b) { return b.start_ns <= t && t < b.end_ns; });
}

bool NoiseState::overlaps(std::int64_t begin, std::int64_t end) {
    if (end <= begin) return false;
    generate_until(end - 1);
    prune(begin);
    return std::any_of(live_.begin(), live_.end(),
                       [&](const ActivitySchedule::Interval& b) { return b.start_ns < end && begin < b.end_ns; });
}

}  // namespace fsc
