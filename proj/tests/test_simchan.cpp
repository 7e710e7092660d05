#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fsyncchan/error.hpp"
#include "fsyncchan/simchan.hpp"
#include "fsyncchan/workload.hpp"

using namespace fsc;

namespace {

struct Stats {
    double mean;
    double stddev;
};

Stats stats(const std::vector<std::int64_t>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double sq = 0;
    for (auto x : v) sq += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
    return {mean, std::sqrt(sq / (n - 1))};
}

ContentionModel decomposed_model() {
    ContentionModel m;
    m.mode = ModelMode::Decomposed;
    m.t_data_ns = 6000;
    m.t_flush_ns = 9000;
    m.t_meta_per_block_ns = 2000;
    m.n_meta_blocks = 3;
    m.standalone = {0, 1500, 1000};
    m.upsilon_prev = {10000, 2000, 1000};
    return m;
}

}  // namespace

TEST_CASE("SATA presets reproduce their moments") {
    const ContentionModel m = ContentionModel::sata_fsync_only();
    CHECK(m.standalone.mean_ns == 21390);
    CHECK(m.standalone.stddev_ns == 2479);
    CHECK(m.contended.mean_ns == 43134);
    CHECK(m.contended.stddev_ns == 2522);
    const ContentionModel x = ContentionModel::cross_disk_fsync_only();
    CHECK(x.standalone.mean_ns == 21046);
    CHECK(x.standalone.stddev_ns == 317);
    CHECK(x.contended.mean_ns == 22253);
    CHECK(x.contended.stddev_ns == 1611);

    Rng rng = make_rng(1, 1);
    std::vector<std::int64_t> a(50000), b(50000);
    for (auto& v : a) v = m.draw_standalone(rng);
    for (auto& v : b) v = m.draw_contended(rng);
    const Stats sa = stats(a), sb = stats(b);
    CHECK(sa.mean == doctest::Approx(21390).epsilon(0.005));
    CHECK(sa.stddev == doctest::Approx(2479).epsilon(0.03));
    CHECK(sb.mean == doctest::Approx(43134).epsilon(0.005));
    CHECK(sb.stddev == doctest::Approx(2522).epsilon(0.03));
}

TEST_CASE("distribution draws respect the floor") {
    LatencyDistribution d{1500, 5000, 1000};
    Rng rng = make_rng(2, 0);
    for (int i = 0; i < 10000; ++i) CHECK(d.draw(rng) >= 1000);
    CHECK_THROWS_AS((LatencyDistribution{0, 1, 1}.validate()), std::invalid_argument);
    ContentionModel bad = ContentionModel::sata_fsync_only();
    bad.contended.mean_ns = 20000;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("substreams are reproducible and distinct") {
    Rng a = make_rng(9, 1), b = make_rng(9, 1), c = make_rng(9, 2), d = make_rng(10, 1);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("activity schedule lookups") {
    const ActivitySchedule s({{100, 200}, {300, 400}});
    CHECK_FALSE(s.active_at(99));
    CHECK(s.active_at(100));
    CHECK(s.active_at(199));
    CHECK_FALSE(s.active_at(200));
    CHECK(s.overlaps(150, 160));
    CHECK(s.overlaps(50, 101));
    CHECK_FALSE(s.overlaps(200, 300));
    CHECK(s.overlaps(399, 1000));
    CHECK_THROWS_AS(ActivitySchedule({{100, 200}, {150, 250}}), std::invalid_argument);
    CHECK_THROWS_AS(ActivitySchedule({{100, 100}}), std::invalid_argument);
}

TEST_CASE("sender schedule merges adjacent ones") {
    const auto s = SenderSchedule::from_bits(BitStream::from_string("0110101"), 50, 1000);
    CHECK(s.slots.size() == 7);
    CHECK(s.active_count() == 4);
    CHECK(s.end_ns() == 1350);
    const auto act = s.activity();
    REQUIRE(act.intervals().size() == 3);
    CHECK(act.intervals()[0].start_ns == 1050);
    CHECK(act.intervals()[0].end_ns == 1150);
    CHECK(act.intervals()[2].end_ns == 1350);
}

TEST_CASE("issue-instant contention looks only at the issue time") {
    const ContentionModel m = ContentionModel::sata_fsync_only();
    const ActivitySchedule s({{100000, 200000}});
    NoiseState quiet(NoiseProcess::none(), make_rng(1, 2));
    Rng rng = make_rng(1, 1);
    CHECK_FALSE(sim_probe(99999, s, m, quiet, rng).contended);
    CHECK(sim_probe(100000, s, m, quiet, rng).contended);
    CHECK(sim_probe(199999, s, m, quiet, rng).contended);
    CHECK_FALSE(sim_probe(200000, s, m, quiet, rng).contended);
    const auto r = sim_probe(150000, s, m, quiet, rng);
    CHECK(r.clock_ns == r.sample.end_ns() + m.probe_overhead_ns);
}

TEST_CASE("full-interval contention sees activity starting mid-probe") {
    ContentionModel m = ContentionModel::sata_fsync_only();
    m.overlap = OverlapRule::FullInterval;
    const ActivitySchedule s({{100000, 200000}});
    NoiseState quiet(NoiseProcess::none(), make_rng(1, 2));
    Rng rng = make_rng(1, 1);
    // Begins 1 us before the activity: any standalone draw above the floor overlaps.
    CHECK(sim_probe(99000, s, m, quiet, rng).contended);
    CHECK_FALSE(sim_probe(10000, s, m, quiet, rng).contended);
}

TEST_CASE("sim_observe is a pure function of its seed") {
    const ContentionModel m = ContentionModel::sata_fsync_only();
    const ActivitySchedule s({{1'000'000, 2'000'000}});
    const NoiseProcess noise = NoiseProcess::from_degree(NoiseDegree::High, m.contended);
    const auto a = sim_observe(s, 5'000'000, m, noise, 33);
    const auto b = sim_observe(s, 5'000'000, m, noise, 33);
    const auto c = sim_observe(s, 5'000'000, m, noise, 34);
    CHECK(a.samples == b.samples);
    CHECK_FALSE(a.samples == c.samples);
    CHECK(is_sequential(a));
    CHECK(a.meta.warmup_samples == kWarmupSamples);
    CHECK(a.samples.back().timestamp_ns < 5'000'000);
}

TEST_CASE("sim_transmit places symbols after the lead-in") {
    ChannelConfig cfg;
    const ContentionModel m = ContentionModel::sata_fsync_only();
    TransmitOptions opts{1'000'000, 0};
    const auto t = sim_transmit(BitStream::from_string("1"), cfg, m, NoiseProcess::none(), 4, opts);
    for (const auto& s : t.samples) {
        const bool inside = s.timestamp_ns >= 1'000'000 && s.timestamp_ns < 1'050'000;
        if (!inside) CHECK(s.latency_ns < 35000);
    }
    CHECK(t.samples.back().end_ns() >= 1'050'000);
    CHECK_THROWS_AS(sim_transmit(BitStream(), cfg, m, NoiseProcess::none(), 4), std::invalid_argument);
}

TEST_CASE("noise bursts arrive at the configured rate") {
    const double rate = 500.0;
    NoiseState n(NoiseProcess{NoiseDegree::High, rate, {40000, 0, 1000}}, make_rng(5, 2));
    const std::int64_t horizon = 20'000'000'000;  // 20 s
    std::int64_t busy_hits = 0, probes = 0;
    for (std::int64_t t = 0; t < horizon; t += 100'000) {
        busy_hits += n.in_flight(t) ? 1 : 0;
        ++probes;
    }
    const double expected = rate * 20.0;
    CHECK(static_cast<double>(n.bursts_started()) == doctest::Approx(expected).epsilon(0.05));
    // Fraction of time covered is about rate * burst length.
    CHECK(static_cast<double>(busy_hits) / static_cast<double>(probes) == doctest::Approx(0.02).epsilon(0.15));
    CHECK(default_burst_rate_hz(NoiseDegree::None) == 0.0);
    CHECK(default_burst_rate_hz(NoiseDegree::Critical) > default_burst_rate_hz(NoiseDegree::High));
    CHECK_THROWS_AS((NoiseProcess{NoiseDegree::None, 5.0, {1, 0, 1}}.validate()), std::invalid_argument);
}

TEST_CASE("journal commits are serialized in arrival order") {
    const ContentionModel m = decomposed_model();
    CHECK(m.base_commit_ns() == 21000);
    Rng rng = make_rng(7, 0);
    std::vector<std::int64_t> arrivals;
    std::int64_t t = 0;
    for (int i = 0; i < 500; ++i) arrivals.push_back(t += static_cast<std::int64_t>(rng() % 30000));
    const auto log = simulate_journal(arrivals, m, rng);
    REQUIRE(log.size() == arrivals.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].id == i);
        CHECK(log[i].start_ns >= log[i].arrival_ns);
        CHECK(log[i].upsilon_prev_ns == log[i].start_ns - log[i].arrival_ns);
        CHECK(log[i].completion_ns == log[i].start_ns + log[i].service_ns);
        if (i > 0) CHECK(log[i].start_ns == std::max(log[i].arrival_ns, log[i - 1].completion_ns));
    }

    const auto pair = journal_serialization_check(m, rng);
    REQUIRE(pair.size() == 2);
    CHECK(pair[1].arrival_ns == m.base_commit_ns() / 2);
    CHECK(pair[1].start_ns == pair[0].completion_ns);
    CHECK(pair[1].upsilon_prev_ns > 0);
    CHECK(pair[1].latency_ns() > pair[0].latency_ns());

    const std::int64_t unsorted[] = {10, 5};
    CHECK_THROWS_AS(simulate_journal(unsorted, m, rng), std::invalid_argument);
    const auto empirical = ContentionModel::sata_fsync_only();
    CHECK_THROWS_AS(simulate_journal(arrivals, empirical, rng), std::invalid_argument);
}

TEST_CASE("decomposed contended latency adds the wait for the previous commit") {
    const ContentionModel m = decomposed_model();
    Rng rng = make_rng(8, 0);
    std::vector<std::int64_t> a(20000), b(20000);
    for (auto& v : a) v = m.draw_standalone(rng);
    for (auto& v : b) v = m.draw_contended(rng);
    CHECK(stats(a).mean == doctest::Approx(21000).epsilon(0.01));
    CHECK(stats(b).mean == doctest::Approx(31000).epsilon(0.01));
}

TEST_CASE("sim params parse keys and report bad lines") {
    std::istringstream ok(
        "# SATA drive\n"
        "standalone.mean_ns = 21390\n"
        "standalone.std_ns=2479\n"
        "contended.mean_ns=43134  # contended\n"
        "contended.std_ns=2522\n"
        "model.overlap=interval\n"
        "noise.degree=medium\n"
        "seed=77\n");
    const SimParams p = parse_sim_params(ok);
    CHECK(p.model.standalone.mean_ns == 21390);
    CHECK(p.model.overlap == OverlapRule::FullInterval);
    CHECK(p.noise.degree == NoiseDegree::Medium);
    CHECK(p.noise.burst_rate_hz == default_burst_rate_hz(NoiseDegree::Medium));
    CHECK(p.noise.burst_len.mean_ns == 43134);
    REQUIRE(p.seed.has_value());
    CHECK(*p.seed == 77);

    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            parse_sim_params(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("seed=1\nbogus=2\n") == 2);
    CHECK(line_of("\n\nstandalone.mean_ns=abc\n") == 3);
    CHECK(line_of("novalue\n") == 1);
    CHECK(line_of("model.mode=weird\n") == 1);
    std::istringstream invalid("contended.mean_ns=100\n");
    CHECK_THROWS_AS(parse_sim_params(invalid), ValidationError);
}

TEST_CASE("insert workload ground truth") {
    const auto r = replay_inserts(InsertWorkload{}, NoiseProcess::none(), 3);
    CHECK(r.events.size() == 400);
    CHECK(std::count_if(r.events.begin(), r.events.end(), [](const VictimEvent& e) { return e.split; }) == 49);
    for (std::size_t i = 1; i < r.events.size(); ++i) CHECK(r.events[i].start_ns > r.events[i - 1].end_ns);
    CHECK(is_sequential(r.trace));
    const auto again = replay_inserts(InsertWorkload{}, NoiseProcess::none(), 3);
    CHECK(again.trace.samples == r.trace.samples);
}

TEST_CASE("keystroke delays never drop below 100 ms") {
    const auto d = sample_keystroke_delays(2000, 4);
    for (auto x : d) CHECK(x >= 100'000'000);
    const double med = [&] {
        auto c = d;
        std::nth_element(c.begin(), c.begin() + 1000, c.end());
        return static_cast<double>(c[1000]);
    }();
    CHECK(med == doctest::Approx(200e6).epsilon(0.05));
}

TEST_CASE("request workload keeps requests inside their buckets") {
    RequestRateWorkload w;
    w.bucket_ns = 1'000'000'000;
    w.requests_per_bucket = {3, 0, 7};
    const auto r = replay_requests(w, NoiseProcess::none(), 5);
    REQUIRE(r.events.size() == 10);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.events[i].end_ns <= 1'000'000'000);
    for (std::size_t i = 3; i < 10; ++i) CHECK(r.events[i].start_ns >= 2'000'000'000);
    w.requests_per_bucket = {1'000'000};
    CHECK_THROWS_AS(replay_requests(w, NoiseProcess::none(), 5), std::invalid_argument);
}
