#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "fsyncchan/error.hpp"
#include "fsyncchan/frame.hpp"
#include "fsyncchan/metrics.hpp"
#include "fsyncchan/modem.hpp"

using namespace fsc;

namespace {

LatencyTrace flat_trace(std::size_t n, std::int64_t latency, std::int64_t period) {
    LatencyTrace t;
    for (std::size_t i = 0; i < n; ++i) t.samples.push_back({static_cast<std::int64_t>(i) * period, latency});
    return t;
}

std::vector<LatencySample> window(std::initializer_list<std::int64_t> latencies) {
    std::vector<LatencySample> w;
    std::int64_t t = 0;
    for (auto l : latencies) {
        w.push_back({t, l});
        t += l;
    }
    return w;
}

}  // namespace

TEST_CASE("threshold rule on SATA quiet statistics") {
    // mean + max(3 sigma, mean / 2), evaluated by hand: 21390 + 10695.
    CHECK(threshold_rule(21390, 2479) == 32085);
    // Wide spread: the 3 sigma term dominates.
    CHECK(threshold_rule(20000, 5000) == 35000);
    CHECK(threshold_rule(0.4, 0.0) > 0.4);
}

TEST_CASE("symbol statistic is the mean or the n-1 sample stddev") {
    const auto w = window({10, 20, 30});
    CHECK(symbol_statistic(w, DecisionRule::MeanThreshold) == 20);
    CHECK(symbol_statistic(w, DecisionRule::StddevThreshold) == 10);
    CHECK(symbol_statistic(window({7}), DecisionRule::StddevThreshold) == 0);
    CHECK_THROWS_AS(symbol_statistic({}, DecisionRule::MeanThreshold), std::invalid_argument);
}

TEST_CASE("decide_symbol is pure and strict") {
    const auto w = window({40000, 44000});
    const auto a = decide_symbol(w, DecisionRule::MeanThreshold, 41999, 7);
    const auto b = decide_symbol(w, DecisionRule::MeanThreshold, 41999, 7);
    CHECK(a.bit == 1);
    CHECK(a.statistic_ns == 42000);
    CHECK(a.n_samples == 2);
    CHECK(a.symbol_index == 7);
    CHECK(a.bit == b.bit);
    CHECK(a.statistic_ns == b.statistic_ns);
    CHECK(decide_symbol(w, DecisionRule::MeanThreshold, 42000, 0).bit == 0);
}

TEST_CASE("calibration skips warm-up and needs enough samples") {
    ChannelConfig cfg;
    LatencyTrace t = flat_trace(200, 20000, 22000);
    for (std::size_t i = 0; i < kWarmupSamples; ++i) t.samples[i].latency_ns = 900000;
    t.meta.warmup_samples = kWarmupSamples;
    const ThresholdState st = calibrate(t, cfg);
    CHECK(st.quiet_mean_ns == doctest::Approx(20000));
    CHECK(st.theta_ns == 30000);
    CHECK(st.provenance == ThresholdProvenance::Calibrated);

    LatencyTrace few = flat_trace(kMinCalibrationSamples + kWarmupSamples - 1, 20000, 22000);
    few.meta.warmup_samples = kWarmupSamples;
    CHECK_THROWS_AS(calibrate(few, cfg), CalibrationError);
}

TEST_CASE("stddev calibration works on per-window spreads") {
    ChannelConfig cfg;
    cfg.decision_rule = DecisionRule::StddevThreshold;
    cfg.symbol_duration_us = 200;
    const ContentionModel m = ContentionModel::cross_disk_fsync_only();
    SimSource src(ActivitySchedule{}, m, NoiseProcess::none(), 3);
    const LatencyTrace quiet = collect_quiet(src, 20'000'000);
    const ThresholdState st = calibrate(quiet, cfg);
    // Sample stddev of quiet windows sits a little under the 317 ns population value.
    CHECK(st.quiet_mean_ns > 250);
    CHECK(st.quiet_mean_ns < 330);
    CHECK(st.theta_ns > st.quiet_mean_ns);
    CHECK(st.theta_ns < 1611);
}

TEST_CASE("manual thresholds stay fixed; calibrated ones follow the quiet level") {
    ThresholdState manual = manual_threshold(30000);
    for (int i = 0; i < 1000; ++i) manual.record(25000);
    CHECK(manual.theta_ns == 30000);
    CHECK(manual.updates == 0);
    CHECK_THROWS_AS(manual_threshold(0), std::invalid_argument);

    ThresholdState st;
    st.theta_ns = 30000;
    st.provenance = ThresholdProvenance::Calibrated;
    for (int i = 0; i < 63; ++i) st.record(i % 2 ? 22000 : 50000);
    CHECK(st.updates == 0);
    st.record(22000);
    CHECK(st.updates == 1);
    CHECK(st.provenance == ThresholdProvenance::Updated);
    CHECK(st.quiet_mean_ns == doctest::Approx(22000));
    CHECK(st.theta_ns == 33000);
}

TEST_CASE("collect_quiet marks the session warm-up") {
    const ContentionModel m = ContentionModel::sata_fsync_only();
    SimSource src(ActivitySchedule{}, m, NoiseProcess::none(), 1);
    const LatencyTrace a = collect_quiet(src, 1'000'000);
    CHECK(a.meta.warmup_samples == kWarmupSamples);
    CHECK(a.samples.back().timestamp_ns < 1'000'000);
    const LatencyTrace b = collect_quiet(src, 1'000'000);
    CHECK(b.meta.warmup_samples == 0);
    CHECK_THROWS_AS(collect_quiet(src, 0), std::invalid_argument);
}

TEST_CASE("sim source replays exactly what sim_observe records") {
    const ContentionModel m = ContentionModel::sata_fsync_only();
    const ActivitySchedule act({{100000, 400000}});
    const NoiseProcess noise = NoiseProcess::from_degree(NoiseDegree::High, m.contended);
    const LatencyTrace t = sim_observe(act, 2'000'000, m, noise, 12);
    SimSource src(act, m, noise, 12);
    for (const auto& s : t.samples) CHECK(src.probe() == s);
}

TEST_CASE("symbol receiver attributes samples by issue time") {
    ChannelConfig cfg;
    cfg.symbol_duration_us = 100;
    ThresholdState st = manual_threshold(30000);
    // Window 0 has two quiet probes; one long probe spans windows 1 and 2.
    LatencyTrace t;
    t.samples = {{0, 20000}, {50000, 20000}, {100000, 260000}, {360000, 20000}, {385000, 20000}};
    ReplaySource src(t.samples);
    SymbolReceiver rx(src, cfg, st, 0);
    auto d0 = rx.next();
    auto d1 = rx.next();
    auto d2 = rx.next();
    REQUIRE(d0);
    REQUIRE(d1);
    REQUIRE(d2);
    CHECK(d0->n_samples == 2);
    CHECK(d0->bit == 0);
    CHECK(d1->bit == 1);
    CHECK(d1->n_samples == 1);
    // Window 2 starts at 200 us, inside the long probe, and receives no issue.
    CHECK(d2->n_samples == 1);
    CHECK(d2->statistic_ns == 260000);
    auto d3 = rx.next();
    REQUIRE(d3);
    CHECK(d3->n_samples == 2);
    // The final probe ends at 405 us, so window 4 still sees it; window 5 has nothing.
    auto d4 = rx.next();
    REQUIRE(d4);
    CHECK(d4->n_samples == 1);
    CHECK_FALSE(rx.next().has_value());
}

TEST_CASE("noiseless loopback decodes at 50 us") {
    ChannelConfig cfg;
    const BitStream bits = prbs(1, 20000);
    const auto r = sim_loopback(bits, cfg, ContentionModel::sata_fsync_only(), NoiseProcess::none(), 2);
    REQUIRE(r.received.size() == bits.size());
    const ErrorReport rep = compare_bits(bits, r.received);
    CHECK(rep.p() <= 0.005);
    CHECK(r.threshold.theta_ns > 28000);
    CHECK(r.threshold.theta_ns < 36000);
}

TEST_CASE("loopback is reproducible from the seed") {
    ChannelConfig cfg;
    const BitStream bits = prbs(1, 5000);
    const auto noise = NoiseProcess::from_degree(NoiseDegree::Medium, ContentionModel::sata_fsync_only().contended);
    const auto a = sim_loopback(bits, cfg, ContentionModel::sata_fsync_only(), noise, 9);
    const auto b = sim_loopback(bits, cfg, ContentionModel::sata_fsync_only(), noise, 9);
    CHECK(a.received == b.received);
    CHECK(a.probes == b.probes);
}

TEST_CASE("full-interval overlap cannot carry 50 us symbols") {
    // With the contention window covering the whole probe, a quiet probe
    // issued late in a '0' slot runs into the next '1' and reads contended.
    ChannelConfig cfg;
    cfg.theta_ns = 32085;
    ContentionModel m = ContentionModel::sata_fsync_only();
    m.overlap = OverlapRule::FullInterval;
    const BitStream bits = prbs(1, 20000);
    const auto r = sim_loopback(bits, cfg, m, NoiseProcess::none(), 2);
    const ErrorReport rep = compare_bits(bits, r.received);
    CHECK(rep.p() > 0.05);
    CHECK(rep.rate_0to1() > rep.rate_1to0());
    cfg.symbol_duration_us = 400;
    const auto slow = sim_loopback(bits, cfg, m, NoiseProcess::none(), 2);
    CHECK(compare_bits(bits, slow.received).p() <= 0.001);
}

TEST_CASE("stddev decoding carries the cross-disk channel") {
    ChannelConfig cfg;
    cfg.decision_rule = DecisionRule::StddevThreshold;
    cfg.symbol_duration_us = 1000;
    const BitStream bits = prbs(4, 3000);
    const auto m = ContentionModel::cross_disk_fsync_only();
    const auto r = sim_loopback(bits, cfg, m, NoiseProcess::none(), 5);
    CHECK(compare_bits(bits, r.received).p() <= 0.005);
    // The mean barely moves across disks, so the mean rule cannot separate symbols.
    cfg.decision_rule = DecisionRule::MeanThreshold;
    const auto mean = sim_loopback(bits, cfg, m, NoiseProcess::none(), 5);
    CHECK(compare_bits(bits, mean.received).p() > 0.3);
}

TEST_CASE("send_bits keys one slot per bit on an absolute grid") {
    ChannelConfig cfg;
    const ContentionModel m = ContentionModel::sata_fsync_only();
    ScheduleBuilder sb(m, 1000);
    const BitStream bits = BitStream::from_string("1100101");
    const SendReport rep = send_bits(bits, cfg, sb);
    const auto& slots = sb.schedule().slots;
    const auto expected = SenderSchedule::from_bits(bits, cfg.symbol_duration_ns(), 1000);
    REQUIRE(slots.size() == expected.slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        CHECK(slots[i].start_ns == expected.slots[i].start_ns);
        CHECK(slots[i].end_ns == expected.slots[i].end_ns);
        CHECK(slots[i].active == expected.slots[i].active);
    }
    REQUIRE(rep.fsyncs_per_bit.size() == bits.size());
    // 50 us of back-to-back contended fsyncs (about 45 us each) takes two calls.
    CHECK(rep.fsyncs_per_bit[0] == 2);
    CHECK(rep.fsyncs_per_bit[2] == 0);
    CHECK(rep.total_fsyncs() == 8);
}

TEST_CASE("frame reception on a known grid") {
    ChannelConfig cfg;
    cfg.payload_len = 400;
    cfg.symbol_duration_us = 200;
    const ContentionModel m = ContentionModel::sata_fsync_only();
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const BitStream payload = prbs(rng(), 400);
        BitStream stream(std::vector<std::uint8_t>(rng() % 40, 0));
        stream.append(frames_to_stream(encode_frames(payload, cfg)));
        const auto trace = sim_transmit(stream, cfg, m, NoiseProcess::none(), rng(), {5'000'000, 400'000});
        ReplaySource src(trace.samples);
        ThresholdState st = calibrate(collect_quiet(src, 5'000'000), cfg);
        FrameSearch search;
        search.origin_ns = 5'000'000;
        const auto f = receive_frame(src, cfg, st, search);
        REQUIRE(f.has_value());
        CHECK(f->payload == payload);
        CHECK(f->header_symbol == stream.size() - 424);
    }
}

TEST_CASE("edge alignment finds a frame without knowing the grid") {
    ChannelConfig cfg;
    cfg.payload_len = 400;
    cfg.symbol_duration_us = 200;
    const ContentionModel m = ContentionModel::sata_fsync_only();
    const BitStream payload = prbs(77, 400);
    const BitStream stream = frames_to_stream(encode_frames(payload, cfg));
    // Lead-in that is not a whole number of symbols.
    const auto trace = sim_transmit(stream, cfg, m, NoiseProcess::none(), 6, {3'333'333, 400'000});
    ReplaySource src(trace.samples);
    ThresholdState st = calibrate(collect_quiet(src, 3'000'000), cfg);
    FrameSearch search;
    search.alignment = SymbolAlignment::Edge;
    const auto f = receive_frame(src, cfg, st, search);
    REQUIRE(f.has_value());
    CHECK(f->payload == payload);
    CHECK(std::llabs(f->grid_origin_ns - 3'333'333) < 50'000);
}

TEST_CASE("frame search gives up when the source ends or the budget runs out") {
    ChannelConfig cfg;
    const ContentionModel m = ContentionModel::sata_fsync_only();
    const auto quiet = sim_observe(ActivitySchedule{}, 30'000'000, m, NoiseProcess::none(), 1);
    {
        ReplaySource src(quiet.samples);
        ThresholdState st = calibrate(collect_quiet(src, 5'000'000), cfg);
        CHECK_FALSE(receive_frame(src, cfg, st).has_value());
        CHECK(src.exhausted());
    }
    {
        ReplaySource src(quiet.samples);
        ThresholdState st = manual_threshold(32085);
        FrameSearch search;
        search.max_symbols = 100;
        CHECK_FALSE(receive_frame(src, cfg, st, search).has_value());
        CHECK_FALSE(src.exhausted());
    }
    {
        ReplaySource src(quiet.samples);
        ThresholdState st = manual_threshold(32085);
        FrameSearch search;
        search.alignment = SymbolAlignment::Edge;
        search.deadline_ns = 10'000'000;
        CHECK_FALSE(receive_frame(src, cfg, st, search).has_value());
        CHECK(src.now_ns() <= 10'100'000);
    }
    ThresholdState uncal;
    CHECK_THROWS_AS(receive_symbols(*std::make_unique<ReplaySource>(quiet.samples), cfg, uncal, 1),
                    std::invalid_argument);
}
