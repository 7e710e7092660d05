#include "fsyncchan/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace fsc {

namespace {

constexpr std::uint64_t kWorkloadStream = 7;
constexpr std::uint64_t kTraceStream = 8;

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// Lays `span_ns` out as `bursts` flushes separated by short gaps.
void append_transaction(std::vector<ActivitySchedule::Interval>& out, std::int64_t start, std::int64_t span_ns,
                        std::size_t bursts, std::int64_t gap_min, std::int64_t gap_max, Rng& rng) {
    bursts = std::max<std::size_t>(bursts, 1);
    std::vector<std::int64_t> gaps(bursts - 1);
    for (auto& g : gaps) g = uniform(rng, gap_min, gap_max);
    const std::int64_t gap_total = std::accumulate(gaps.begin(), gaps.end(), std::int64_t{0});
    const std::int64_t busy = span_ns - gap_total;
    if (busy < static_cast<std::int64_t>(bursts) * 1000) {
        out.push_back({start, start + span_ns});
        return;
    }
    std::vector<double> weight(bursts);
    std::uniform_real_distribution<double> w(0.5, 1.5);
    for (auto& x : weight) x = w(rng);
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);

    std::int64_t t = start;
    std::int64_t used = 0;
    for (std::size_t i = 0; i < bursts; ++i) {
        std::int64_t len = i + 1 == bursts ? busy - used
                                           : std::max<std::int64_t>(1000, std::llround(busy * weight[i] / total));
        used += len;
        out.push_back({t, t + len});
        t += len;
        if (i < gaps.size()) t += gaps[i];
    }
}

LatencyTrace observe(const std::vector<ActivitySchedule::Interval>& victim, std::int64_t duration,
                     const ContentionModel& model, const NoiseProcess& noise, std::uint64_t seed,
                     ActivitySchedule& schedule_out) {
    schedule_out = ActivitySchedule(victim);
    return sim_observe(schedule_out, duration, model, noise, seed ^ (kTraceStream << 56));
}

}  // namespace

ContentionModel victim_model(std::int64_t contended_mean_ns, std::int64_t contended_std_ns) {
    ContentionModel m = ContentionModel::sata_fsync_only();
    m.contended = {contended_mean_ns, contended_std_ns, 1000};
    return m;
}

WorkloadReplay replay_inserts(const InsertWorkload& w, const NoiseProcess& noise, std::uint64_t seed) {
    if (w.n_splits > w.n_inserts) throw std::invalid_argument("replay_inserts: more splits than inserts");
    if (w.idle_min_ns <= 0 || w.idle_max_ns < w.idle_min_ns) throw std::invalid_argument("replay_inserts: bad idle range");
    Rng rng = make_rng(seed, kWorkloadStream);

    std::vector<bool> is_split(w.n_inserts, false);
    std::fill(is_split.begin(), is_split.begin() + static_cast<std::ptrdiff_t>(w.n_splits), true);
    std::shuffle(is_split.begin(), is_split.end(), rng);

    WorkloadReplay out;
    std::vector<ActivitySchedule::Interval> victim;
    std::int64_t t = uniform(rng, w.idle_min_ns, w.idle_max_ns);
    for (std::size_t i = 0; i < w.n_inserts; ++i) {
        const std::int64_t span = (is_split[i] ? w.split_commit : w.normal_commit).draw(rng);
        append_transaction(victim, t, span, w.fsyncs_per_insert, w.intra_gap_min_ns, w.intra_gap_max_ns, rng);
        out.events.push_back({t, t + span, is_split[i], is_split[i] ? "split" : "insert"});
        t += span + uniform(rng, w.idle_min_ns, w.idle_max_ns);
    }
    out.trace = observe(victim, t, w.model, noise, seed, out.victim);
    return out;
}

WorkloadReplay replay_requests(const RequestRateWorkload& w, const NoiseProcess& noise, std::uint64_t seed) {
    if (w.bucket_ns <= 0 || w.hits_per_request == 0) throw std::invalid_argument("replay_requests: bad workload");
    if (w.requests_per_bucket.empty()) throw std::invalid_argument("replay_requests: no buckets");
    w.model.validate();
    Rng rng = make_rng(seed, kWorkloadStream);

    // A request stays busy for hits_per_request contended probe periods,
    // trimmed by half a period so the phase of the first hit averages out.
    const std::int64_t period = w.model.contended.mean_ns + w.model.probe_overhead_ns;
    const std::int64_t busy = static_cast<std::int64_t>(w.hits_per_request) * period - period / 2;
    const std::int64_t slot = busy + w.min_spacing_ns;

    WorkloadReplay out;
    std::vector<ActivitySchedule::Interval> victim;
    for (std::size_t b = 0; b < w.requests_per_bucket.size(); ++b) {
        const std::size_t n = w.requests_per_bucket[b];
        const std::int64_t bucket_start = static_cast<std::int64_t>(b) * w.bucket_ns;
        const std::int64_t free = w.bucket_ns - static_cast<std::int64_t>(n) * slot;
        if (free < 0) throw std::invalid_argument("replay_requests: bucket too small for its request count");
        // n sorted offsets into the free time, then each request gets its slot.
        std::vector<std::int64_t> offsets(n);
        for (auto& o : offsets) o = uniform(rng, 0, free);
        std::sort(offsets.begin(), offsets.end());
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t start = bucket_start + offsets[i] + static_cast<std::int64_t>(i) * slot;
            victim.push_back({start, start + busy});
            out.events.push_back({start, start + busy, false, "request"});
        }
    }
    const std::int64_t duration = static_cast<std::int64_t>(w.requests_per_bucket.size()) * w.bucket_ns;
    out.trace = observe(victim, duration, w.model, noise, seed, out.victim);
    return out;
}

std::vector<std::int64_t> sample_keystroke_delays(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed, kWorkloadStream + 1);
    std::lognormal_distribution<double> dist(std::log(200e6), 0.35);
    std::vector<std::int64_t> out(n);
    for (auto& d : out) d = std::max<std::int64_t>(100'000'000, std::llround(dist(rng)));
    return out;
}

WorkloadReplay replay_keystrokes(const KeystrokeWorkload& w, const NoiseProcess& noise, std::uint64_t seed) {
    if (w.delays_ns.empty()) throw std::invalid_argument("replay_keystrokes: no delays");
    Rng rng = make_rng(seed, kWorkloadStream);

    WorkloadReplay out;
    std::vector<ActivitySchedule::Interval> victim;
    std::int64_t key_time = w.first_key_ns;
    for (std::size_t k = 0; k <= w.delays_ns.size(); ++k) {
        if (k > 0) key_time += w.delays_ns[k - 1];
        std::int64_t start = key_time + w.service_delay.draw(rng);
        if (!victim.empty()) start = std::max(start, victim.back().end_ns + 1);
        const std::int64_t end = start + w.flush_len.draw(rng);
        victim.push_back({start, end});
        out.events.push_back({start, end, false, "key"});
    }
    out.trace = observe(victim, victim.back().end_ns + 20'000'000, w.model, noise, seed, out.victim);
    return out;
}

std::string_view to_string(DbOperation op) {
    switch (op) {
        case DbOperation::I1: return "I1";
        case DbOperation::Q1: return "Q1";
        case DbOperation::U1: return "U1";
        case DbOperation::U2: return "U2";
    }
    return "unknown";
}

WorkloadReplay replay_db_operation(DbOperation op, std::uint64_t seed) {
    Rng rng = make_rng(seed, kWorkloadStream);
    const ContentionModel model = victim_model(70'000, 8'000);
    constexpr std::int64_t kLead = 2'000'000;
    constexpr std::int64_t kTail = 2'000'000;

    WorkloadReplay out;
    std::vector<ActivitySchedule::Interval> victim;
    std::int64_t t = kLead;
    auto commit = [&](const LatencyDistribution& span, std::size_t bursts) {
        const std::int64_t len = span.draw(rng);
        append_transaction(victim, t, len, bursts, 10'000, 30'000, rng);
        out.events.push_back({t, t + len, false, std::string(to_string(op))});
        t += len;
    };

    switch (op) {
        case DbOperation::I1: {
            // Bulk insert: one or two long commits, occasionally split-inflated.
            const std::size_t commits = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 2 : 1;
            for (std::size_t c = 0; c < commits; ++c) {
                commit({2'600'000, 700'000, 900'000}, 4);
                t += uniform(rng, 400'000, 1'200'000);
            }
            break;
        }
        case DbOperation::Q1:
            // Queries do not flush; now and then a stray metadata sync.
            if (std::uniform_int_distribution<int>(0, 9)(rng) < 3) commit({25'000, 8'000, 5'000}, 1);
            break;
        case DbOperation::U1:
            commit({170'000, 45'000, 40'000}, 2);
            break;
        case DbOperation::U2:
            commit({720'000, 180'000, 250'000}, 3);
            break;
    }
    out.trace = observe(victim, t + kTail, model, NoiseProcess::none(), seed, out.victim);
    return out;
}

std::vector<LabeledTrace> db_operation_dataset(std::size_t n_per_class, std::uint64_t seed) {
    std::vector<LabeledTrace> out;
    out.reserve(4 * n_per_class);
    for (DbOperation op : kDbOperations) {
        const std::string label(to_string(op));
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::uint64_t s = seed * 1'000'003 + static_cast<std::uint64_t>(op) * 100'000 + i;
            char name[32];
            std::snprintf(name, sizeof name, "%s_%04zu.csv", label.c_str(), i);
            out.push_back({name, label, replay_db_operation(op, s).trace});
        }
    }
    return out;
}

}  // namespace fsc
