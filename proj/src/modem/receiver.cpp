#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "fsyncchan/error.hpp"
#include "fsyncchan/frame.hpp"
#include "fsyncchan/modem.hpp"

namespace fsc {

namespace {

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

template <typename Range, typename Proj>
Moments moments(const Range& values, Proj proj) {
    Moments m;
    const auto n = static_cast<double>(std::size(values));
    if (n == 0) return m;
    double sum = 0.0;
    for (const auto& v : values) sum += static_cast<double>(proj(v));
    m.mean = sum / n;
    if (n < 2) return m;
    double sq = 0.0;
    for (const auto& v : values) {
        const double d = static_cast<double>(proj(v)) - m.mean;
        sq += d * d;
    }
    m.stddev = std::sqrt(sq / (n - 1));
    return m;
}

constexpr auto kIdentity = [](auto v) { return v; };

}  // namespace

SimSource::SimSource(ActivitySchedule competitor, ContentionModel model, const NoiseProcess& noise, std::uint64_t seed)
    : competitor_(std::move(competitor)),
      model_(std::move(model)),
      noise_(noise, make_rng(seed, 2)),
      rng_(make_rng(seed, 1)) {
    model_.validate();
}

LatencySample SimSource::do_probe() {
    auto r = sim_probe(clock_, competitor_, model_, noise_, rng_);
    clock_ = r.clock_ns;
    return r.sample;
}

std::int64_t ReplaySource::now_ns() const {
    if (next_ < samples_.size()) return samples_[next_].timestamp_ns;
    return samples_.empty() ? 0 : samples_.back().end_ns();
}

LatencySample ReplaySource::do_probe() {
    if (next_ >= samples_.size()) throw std::out_of_range("ReplaySource: trace exhausted");
    return samples_[next_++];
}

LatencyTrace collect_quiet(SampleSource& source, std::int64_t duration_ns) {
    if (duration_ns <= 0) throw std::invalid_argument("collect_quiet: duration must be positive");
    LatencyTrace trace;
    const std::size_t before = source.probes_issued();
    trace.meta.warmup_samples = before < kWarmupSamples ? kWarmupSamples - before : 0;
    const std::int64_t deadline = source.now_ns() + duration_ns;
    while (!source.exhausted() && (trace.samples.empty() || source.now_ns() < deadline)) {
        trace.samples.push_back(source.probe());
    }
    return trace;
}

std::int64_t threshold_rule(double quiet_mean_ns, double quiet_std_ns) {
    const double theta = quiet_mean_ns + std::max(3.0 * quiet_std_ns, 0.5 * quiet_mean_ns);
    const auto rounded = static_cast<std::int64_t>(std::llround(theta));
    const auto floor = static_cast<std::int64_t>(std::floor(quiet_mean_ns)) + 1;
    return std::max(rounded, floor);
}

void ThresholdState::record(std::int64_t statistic) {
    if (window_capacity == 0) return;
    if (window.size() < window_capacity) {
        window.push_back(statistic);
    } else {
        window[window_next] = statistic;
    }
    window_next = (window_next + 1) % window_capacity;

    if (update_period == 0 || ++since_update < update_period) return;
    since_update = 0;
    std::vector<std::int64_t> lower;
    std::copy_if(window.begin(), window.end(), std::back_inserter(lower),
                 [this](std::int64_t s) { return s <= theta_ns; });
    if (lower.size() < std::max<std::size_t>(8, update_period / 8)) return;
    const Moments m = moments(lower, kIdentity);
    quiet_mean_ns = m.mean;
    quiet_std_ns = m.stddev;
    theta_ns = threshold_rule(m.mean, m.stddev);
    provenance = ThresholdProvenance::Updated;
    ++updates;
}

ThresholdState calibrate(const LatencyTrace& quiet_trace, const ChannelConfig& cfg) {
    cfg.validate();
    const std::size_t skip = std::min(quiet_trace.meta.warmup_samples, quiet_trace.samples.size());
    std::span<const LatencySample> usable(quiet_trace.samples.begin() + static_cast<std::ptrdiff_t>(skip),
                                          quiet_trace.samples.end());
    if (usable.size() < kMinCalibrationSamples) {
        throw CalibrationError("calibration needs at least " + std::to_string(kMinCalibrationSamples) +
                               " non-warm-up samples, got " + std::to_string(usable.size()));
    }

    Moments m;
    if (cfg.decision_rule == DecisionRule::MeanThreshold) {
        m = moments(usable, [](const LatencySample& s) { return s.latency_ns; });
    } else {
        const std::int64_t t_s = cfg.symbol_duration_ns();
        const std::int64_t origin = usable.front().timestamp_ns;
        std::vector<std::int64_t> per_window;
        std::size_t begin = 0;
        while (begin < usable.size()) {
            const std::int64_t index = (usable[begin].timestamp_ns - origin) / t_s;
            std::size_t end = begin;
            while (end < usable.size() && (usable[end].timestamp_ns - origin) / t_s == index) ++end;
            if (end - begin >= 2) {
                per_window.push_back(symbol_statistic(usable.subspan(begin, end - begin), DecisionRule::StddevThreshold));
            }
            begin = end;
        }
        if (per_window.size() < 2) {
            throw CalibrationError("stddev calibration needs at least two symbol windows with two samples each");
        }
        m = moments(per_window, kIdentity);
    }

    ThresholdState state;
    state.quiet_mean_ns = m.mean;
    state.quiet_std_ns = m.stddev;
    state.theta_ns = threshold_rule(m.mean, m.stddev);
    state.provenance = ThresholdProvenance::Calibrated;
    return state;
}

ThresholdState manual_threshold(std::int64_t theta_ns) {
    if (theta_ns <= 0) throw std::invalid_argument("manual threshold must be positive");
    ThresholdState state;
    state.theta_ns = theta_ns;
    state.provenance = ThresholdProvenance::Manual;
    state.update_period = 0;
    return state;
}

std::int64_t symbol_statistic(std::span<const LatencySample> window, DecisionRule rule) {
    if (window.empty()) throw std::invalid_argument("symbol_statistic: empty window");
    const Moments m = moments(window, [](const LatencySample& s) { return s.latency_ns; });
    return static_cast<std::int64_t>(std::llround(rule == DecisionRule::MeanThreshold ? m.mean : m.stddev));
}

SymbolDecision decide_symbol(std::span<const LatencySample> window, DecisionRule rule, std::int64_t theta_ns,
                             std::size_t symbol_index) {
    SymbolDecision d;
    d.statistic_ns = symbol_statistic(window, rule);
    d.bit = d.statistic_ns > theta_ns ? 1 : 0;
    d.n_samples = window.size();
    d.symbol_index = symbol_index;
    d.theta_ns = theta_ns;
    return d;
}

SymbolReceiver::SymbolReceiver(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state,
                               std::int64_t origin_ns)
    : source_(source), cfg_(cfg), state_(state), origin_(origin_ns) {
    cfg_.validate();
    if (state_.theta_ns <= 0) throw std::invalid_argument("SymbolReceiver: threshold not calibrated");
}

std::optional<SymbolDecision> SymbolReceiver::next() {
    const std::int64_t t_s = cfg_.symbol_duration_ns();
    const std::int64_t start = origin_ + static_cast<std::int64_t>(index_) * t_s;
    const std::int64_t end = start + t_s;

    buffer_.clear();
    if (carry_ && carry_->timestamp_ns >= start && carry_->timestamp_ns < end) buffer_.push_back(*carry_);
    carry_.reset();
    while (!source_.exhausted() && source_.now_ns() < end) {
        const LatencySample s = source_.probe();
        last_ = s;
        // Probes issued before the grid origin carry no symbol.
        if (s.timestamp_ns >= start) buffer_.push_back(s);
    }
    // A probe still running when the window opened is the only observation of it.
    if (buffer_.empty() && last_ && last_->end_ns() > start) buffer_.push_back(*last_);
    while (!source_.exhausted() && buffer_.size() < cfg_.samples_per_symbol_min) {
        last_ = source_.probe();
        buffer_.push_back(*last_);
    }
    if (buffer_.empty()) return std::nullopt;
    SymbolDecision d = decide_symbol(buffer_, cfg_.decision_rule, state_.theta_ns, index_);
    state_.record(d.statistic_ns);
    ++index_;
    return d;
}

void SymbolReceiver::carry(const LatencySample& sample) {
    carry_ = sample;
    last_ = sample;
}

std::vector<SymbolDecision> receive_symbols(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state,
                                            std::size_t n_symbols) {
    SymbolReceiver rx(source, cfg, state, source.now_ns());
    std::vector<SymbolDecision> out;
    out.reserve(n_symbols);
    while (out.size() < n_symbols) {
        auto d = rx.next();
        if (!d) break;
        out.push_back(*d);
    }
    return out;
}

BitStream decisions_to_bits(std::span<const SymbolDecision> decisions) {
    std::vector<std::uint8_t> bits;
    bits.reserve(decisions.size());
    for (const auto& d : decisions) bits.push_back(d.bit);
    return BitStream(std::move(bits));
}

namespace {

class FrameSearcher {
public:
    FrameSearcher(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state, const FrameSearch& search)
        : source_(source), cfg_(cfg), state_(state), search_(search) {}

    bool out_of_budget() const {
        return used_ >= search_.max_symbols || source_.now_ns() > search_.deadline_ns || source_.exhausted();
    }

    // Slides the header over up to `limit` decisions from rx.
    std::optional<ReceivedFrame> scan(SymbolReceiver& rx, std::size_t limit) {
        const BitStream& header = cfg_.header_pattern;
        std::deque<std::uint8_t> recent;
        for (std::size_t n = 0; n < limit && !out_of_budget(); ++n) {
            auto d = rx.next();
            ++used_;
            if (!d) return std::nullopt;
            recent.push_back(d->bit);
            if (recent.size() > header.size()) recent.pop_front();
            if (recent.size() < header.size()) continue;
            std::size_t mismatches = 0;
            for (std::size_t i = 0; i < header.size(); ++i) mismatches += recent[i] != header[i];
            if (mismatches > cfg_.header_max_mismatches) continue;

            ReceivedFrame frame;
            frame.header_symbol = d->symbol_index + 1 - header.size();
            frame.header_mismatches = mismatches;
            frame.grid_origin_ns = rx.origin_ns();
            while (frame.payload.size() < cfg_.payload_len) {
                auto p = rx.next();
                if (!p) return std::nullopt;
                frame.payload.push_back(p->bit);
            }
            return frame;
        }
        return std::nullopt;
    }

    std::optional<ReceivedFrame> run() {
        if (search_.alignment == SymbolAlignment::Grid || cfg_.decision_rule == DecisionRule::StddevThreshold) {
            SymbolReceiver rx(source_, cfg_, state_, search_.origin_ns.value_or(source_.now_ns()));
            return scan(rx, std::numeric_limits<std::size_t>::max());
        }
        while (!out_of_budget()) {
            auto edge = wait_for_edge();
            if (!edge) return std::nullopt;
            SymbolReceiver rx(source_, cfg_, state_, edge->first);
            rx.carry(edge->second);
            if (auto frame = scan(rx, 2 * cfg_.header_pattern.size())) return frame;
        }
        return std::nullopt;
    }

private:
    // Rising edge: a contended probe right after a quiet one. The sender's
    // first '1' began between the two issue times; take the midpoint.
    std::optional<std::pair<std::int64_t, LatencySample>> wait_for_edge() {
        std::optional<LatencySample> prev;
        while (!source_.exhausted() && source_.now_ns() <= search_.deadline_ns) {
            const LatencySample s = source_.probe();
            if (prev && prev->latency_ns <= state_.theta_ns && s.latency_ns > state_.theta_ns) {
                return std::pair{(prev->timestamp_ns + s.timestamp_ns) / 2, s};
            }
            prev = s;
        }
        return std::nullopt;
    }

    SampleSource& source_;
    const ChannelConfig& cfg_;
    ThresholdState& state_;
    const FrameSearch& search_;
    std::size_t used_ = 0;
};

}  // namespace

std::optional<ReceivedFrame> receive_frame(SampleSource& source, const ChannelConfig& cfg, ThresholdState& state,
                                           const FrameSearch& search) {
    cfg.validate();
    if (state.theta_ns <= 0) throw std::invalid_argument("receive_frame: threshold not calibrated");
    return FrameSearcher(source, cfg, state, search).run();
}

}  // namespace fsc
