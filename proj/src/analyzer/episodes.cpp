#include <algorithm>
#include <stdexcept>

#include "fsyncchan/analyzer.hpp"

namespace fsc {

std::int64_t default_max_gap(const LatencyTrace& trace) {
    const auto& s = trace.samples;
    if (s.size() < 2) return 0;
    std::vector<std::int64_t> gaps(s.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i) gaps[i - 1] = s[i].timestamp_ns - s[i - 1].timestamp_ns;
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    return 3 * *mid;
}

namespace {

// Calls fn(episode, index of its first member) for every episode in order.
template <class Fn>
void for_each_episode(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t max_gap_ns, Fn&& fn) {
    if (theta_ns <= 0) throw std::invalid_argument("extract_episodes: theta must be positive");
    if (max_gap_ns < 0) throw std::invalid_argument("extract_episodes: max_gap must be nonnegative");
    std::optional<Episode> cur;
    std::size_t first = 0;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const LatencySample& s = trace.samples[i];
        if (s.latency_ns <= theta_ns) continue;
        if (cur && s.timestamp_ns - cur->end_ns <= max_gap_ns) {
            cur->end_ns = std::max(cur->end_ns, s.end_ns());
            ++cur->n_samples;
            continue;
        }
        if (cur) {
            cur->est_latency_ns = cur->end_ns - cur->start_ns;
            fn(*cur, first);
        }
        cur = Episode{s.timestamp_ns, s.end_ns(), 0, 1};
        first = i;
    }
    if (cur) {
        cur->est_latency_ns = cur->end_ns - cur->start_ns;
        fn(*cur, first);
    }
}

}  // namespace

std::vector<Episode> extract_episodes(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t max_gap_ns) {
    std::vector<Episode> out;
    for_each_episode(trace, theta_ns, max_gap_ns, [&](const Episode& ep, std::size_t) { out.push_back(ep); });
    return out;
}

std::vector<Episode> extract_episodes(const LatencyTrace& trace, std::int64_t theta_ns) {
    return extract_episodes(trace, theta_ns, default_max_gap(trace));
}

std::vector<double> RateReport::estimated_requests(double samples_per_request) const {
    if (!(samples_per_request > 0.0)) throw std::invalid_argument("estimated_requests: factor must be positive");
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / samples_per_request;
    return out;
}

RateReport count_above(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t bucket_ns,
                       std::int64_t max_gap_ns) {
    if (bucket_ns <= 0) throw std::invalid_argument("count_above: bucket must be positive");
    RateReport report;
    report.bucket_ns = bucket_ns;
    if (trace.empty()) return report;
    report.counts.assign(static_cast<std::size_t>(trace.samples.back().timestamp_ns / bucket_ns) + 1, 0);
    for_each_episode(trace, theta_ns, max_gap_ns, [&](const Episode& ep, std::size_t) {
        report.counts[static_cast<std::size_t>(ep.start_ns / bucket_ns)] += ep.n_samples;
    });
    return report;
}

RateReport count_above(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t bucket_ns) {
    return count_above(trace, theta_ns, bucket_ns, default_max_gap(trace));
}

SplitClass classify_split(const Episode& ep, std::int64_t split_threshold_ns) {
    return ep.est_latency_ns > split_threshold_ns ? SplitClass::Split : SplitClass::NoSplit;
}

double BinaryScore::precision() const {
    const std::size_t d = true_pos + false_pos;
    return d == 0 ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(d);
}

double BinaryScore::recall() const {
    const std::size_t d = true_pos + false_neg;
    return d == 0 ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(d);
}

double BinaryScore::f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

BinaryScore score_splits(std::span<const Episode> detected_splits, std::span<const SplitTruth> truth) {
    std::vector<bool> used(truth.size(), false);
    BinaryScore score;
    for (const Episode& ep : detected_splits) {
        bool hit = false;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (!used[j] && ep.start_ns < truth[j].end_ns && truth[j].start_ns < ep.end_ns) {
                used[j] = true;
                hit = true;
                break;
            }
        }
        ++(hit ? score.true_pos : score.false_pos);
    }
    score.false_neg = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
    return score;
}

KeystrokeTimings keystroke_timings(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t min_spacing_ns) {
    if (min_spacing_ns <= 0) throw std::invalid_argument("keystroke_timings: min_spacing must be positive");
    KeystrokeTimings out;
    for (const Episode& ep : extract_episodes(trace, theta_ns)) {
        if (!out.events_ns.empty() && ep.start_ns - out.events_ns.back() < min_spacing_ns) continue;
        out.events_ns.push_back(ep.start_ns);
    }
    for (std::size_t i = 1; i < out.events_ns.size(); ++i) {
        out.deltas_ns.push_back(out.events_ns[i] - out.events_ns[i - 1]);
    }
    return out;
}

}  // namespace fsc
