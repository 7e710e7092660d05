// fsyncchan: covert channel and side-channel analyses over fsync latency.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
// 3 protocol timeout (no frame found).

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsyncchan/analyzer.hpp"
#include "fsyncchan/error.hpp"
#include "fsyncchan/frame.hpp"
#include "fsyncchan/metrics.hpp"
#include "fsyncchan/modem.hpp"
#include "fsyncchan/probe.hpp"
#include "fsyncchan/simchan.hpp"
#include "fsyncchan/workload.hpp"

namespace {

using namespace fsc;

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2, kTimeout = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProtocolTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degree-driven noise keeping the burst shape from the params file, or a
// contended fsync when the file gave none.
NoiseProcess noise_for(NoiseDegree d, const SimParams& p) {
    if (d == NoiseDegree::None) return NoiseProcess::none();
    const LatencyDistribution len = p.noise.burst_len.mean_ns > 0 ? p.noise.burst_len : p.model.contended;
    return NoiseProcess::from_degree(d, len);
}

// Options shared by the channel commands.
struct RunConfig {
    std::int64_t ts_us = 50;
    std::string mode = "fsync";
    std::string decision = "mean";
    std::int64_t theta_ns = 0;
    std::size_t payload_bits = kDefaultPayloadLen;
    std::size_t frames = 1;
    std::string sim_params;
    std::string noise;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool real = false;
    bool sim = false;
    std::string file;
    double lead_in_us = 20'000;

    ChannelConfig channel() const {
        ChannelConfig c;
        c.symbol_duration_us = ts_us;
        c.probe_mode = parse_probe_mode(mode);
        c.decision_rule = parse_decision_rule(decision);
        c.theta_ns = theta_ns;
        c.payload_len = payload_bits;
        c.validate();
        return c;
    }

    SimParams sim_setup() const {
        SimParams p = sim_params.empty() ? SimParams{} : load_sim_params(sim_params);
        if (!noise.empty()) p.noise = noise_for(parse_noise_degree(noise), p);
        if (seed) p.seed = seed;
        return p;
    }

    std::uint64_t require_seed(const SimParams& p) const {
        if (!p.seed) throw UsageError("simulation needs a seed (--seed or seed= in --sim-params)");
        return *p.seed;
    }

    std::int64_t lead_in_ns() const {
        if (!(lead_in_us > 0)) throw UsageError("--lead-in-us must be positive");
        return static_cast<std::int64_t>(lead_in_us * 1000.0);
    }
};

// "-" is stdout. The stream stays valid for the writer's lifetime.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_.open(path, std::ios::binary);
        if (!file_) throw Error("cannot open " + path + " for writing: " + std::strerror(errno));
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    void finish(const std::string& path) {
        stream().flush();
        if (!stream()) throw Error("write failed: " + (path.empty() ? std::string("stdout") : path));
    }

private:
    std::ofstream file_;
};

LatencyTrace read_trace_arg(const std::string& path) {
    if (path == "-") return trace_read(std::cin);
    return trace_read_file(path);
}

void write_text(const std::string& path, const std::string& text) {
    Output out(path);
    out.stream() << text;
    out.finish(path);
}

void require_exclusive_source(const RunConfig& rc) {
    if (rc.real && rc.sim) throw UsageError("choose one of --real and --sim");
    if (rc.real && rc.file.empty()) throw UsageError("--real needs --file PATH");
    if (!rc.real && !rc.file.empty()) throw UsageError("--file is only used with --real");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateArgs {
    double duration_ms = 100;
};

void cmd_calibrate(const RunConfig& rc, const CalibrateArgs& a) {
    require_exclusive_source(rc);
    if (!(a.duration_ms > 0)) throw UsageError("--duration-ms must be positive");
    const ChannelConfig cfg = rc.channel();
    const auto duration_ns = static_cast<std::int64_t>(a.duration_ms * 1e6);

    std::ostringstream report;
    LatencyTrace quiet;
    if (rc.real) {
        ProbeHandle h(rc.file, ProbeOptions{cfg.probe_mode});
        ProbeSource src(h);
        quiet = collect_quiet(src, duration_ns);
        report << "source=real\n";
    } else {
        const SimParams p = rc.sim_setup();
        SimSource src(ActivitySchedule{}, p.model, p.noise, rc.require_seed(p));
        quiet = collect_quiet(src, duration_ns);
        report << "source=sim\n";
        if (cfg.decision_rule == DecisionRule::MeanThreshold && p.model.mode == ModelMode::Empirical) {
            const auto& q = p.model.standalone;
            report << "model_theta_ns="
                   << threshold_rule(static_cast<double>(q.mean_ns), static_cast<double>(q.stddev_ns)) << '\n';
        }
    }
    const ThresholdState st = calibrate(quiet, cfg);
    char buf[128];
    report << "decision=" << to_string(cfg.decision_rule) << '\n';
    report << "ts_us=" << cfg.symbol_duration_us << '\n';
    report << "samples=" << quiet.size() << '\n';
    std::snprintf(buf, sizeof buf, "quiet_mean_ns=%.1f\nquiet_std_ns=%.1f\n", st.quiet_mean_ns, st.quiet_std_ns);
    report << buf;
    report << "theta_ns=" << st.theta_ns << '\n';
    std::cout << report.str();
    if (!rc.out.empty() && rc.out != "-") write_text(rc.out, report.str());
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
    std::string ts_list = "40,50,80,200,400,1200";
    std::string noise_list = "none";
    std::size_t bits = 80'000;
};

void cmd_bench(RunConfig rc, const BenchArgs& a) {
    if (rc.real) throw UsageError("bench runs on the simulator; real transmissions use send and recv");
    if (a.bits == 0) throw UsageError("--bits must be positive");
    const SimParams base = rc.sim_setup();
    const std::uint64_t seed = rc.require_seed(base);

    std::vector<std::int64_t> durations;
    for (const auto& s : split_list(a.ts_list)) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size() || v <= 0) throw std::invalid_argument(s);
            durations.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("bad symbol duration '" + s + "' in --ts-list");
        }
    }
    std::vector<NoiseDegree> degrees;
    for (const auto& s : split_list(a.noise_list)) degrees.push_back(parse_noise_degree(s));
    if (durations.empty() || degrees.empty()) throw UsageError("empty --ts-list or --noise-list");

    const BitStream bits = prbs(seed, a.bits);
    Output out(rc.out);
    out.stream() << "noise," << error_report_csv_header() << '\n';
    for (NoiseDegree d : degrees) {
        const NoiseProcess noise = noise_for(d, base);
        for (std::int64_t ts : durations) {
            rc.ts_us = ts;
            const ChannelConfig cfg = rc.channel();
            const auto r = sim_loopback(bits, cfg, base.model, noise, seed, rc.lead_in_ns());
            if (r.received.size() != bits.size()) throw Error("simulated receiver ran out of samples");
            const ErrorReport rep = compare_bits(bits, r.received);
            out.stream() << to_string(d) << ',' << error_report_csv_row(static_cast<double>(ts), rep) << '\n';
        }
    }
    out.finish(rc.out);
}

// ---- send / recv ----------------------------------------------------------

struct SendArgs {
    std::string payload;
};

BitStream load_payload(const RunConfig& rc, const SendArgs& a, const SimParams* p) {
    if (!a.payload.empty()) {
        std::ifstream in(a.payload, std::ios::binary);
        if (!in) throw Error("cannot open " + a.payload);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.empty()) throw UsageError("payload file is empty");
        return BitStream::from_bytes(bytes);
    }
    if (rc.frames == 0) throw UsageError("--frames must be positive");
    std::optional<std::uint64_t> seed = p ? p->seed : rc.seed;
    if (!seed) throw UsageError("a generated payload needs --seed (or pass --payload FILE)");
    return prbs(*seed, rc.frames * rc.payload_bits);
}

void cmd_send(const RunConfig& rc, const SendArgs& a) {
    require_exclusive_source(rc);
    if (!rc.real && !rc.sim) throw UsageError("send needs --sim or --real --file PATH");
    const ChannelConfig cfg = rc.channel();

    if (rc.sim) {
        const SimParams p = rc.sim_setup();
        const std::uint64_t seed = rc.require_seed(p);
        const BitStream payload = load_payload(rc, a, &p);
        const BitStream stream = frames_to_stream(encode_frames(payload, cfg));
        TransmitOptions opts;
        opts.lead_in_ns = rc.lead_in_ns();
        opts.tail_ns = 2 * cfg.symbol_duration_ns();
        const LatencyTrace trace = sim_transmit(stream, cfg, p.model, p.noise, seed, opts);
        Output out(rc.out);
        trace_write(trace, out.stream());
        out.finish(rc.out);
        std::cerr << "sent " << stream.size() << " symbols (" << payload.size() << " payload bits)\n";
        return;
    }

    const BitStream payload = load_payload(rc, a, nullptr);
    const BitStream stream = frames_to_stream(encode_frames(payload, cfg));
    ProbeHandle h(rc.file, ProbeOptions{cfg.probe_mode});
    ProbeSender sender(h);
    const SendReport report = send_bits(stream, cfg, sender);
    std::cout << "symbols=" << stream.size() << "\nfsyncs=" << report.total_fsyncs() << '\n';
}

struct RecvArgs {
    std::string trace;
    double timeout_s = 30;
    double calibrate_ms = 200;
};

// Decodes rc.frames consecutive frames; the first one anchors the rest.
std::vector<ReceivedFrame> receive_frames(SampleSource& src, const ChannelConfig& cfg, ThresholdState& st,
                                          std::size_t n_frames, FrameSearch search) {
    std::vector<ReceivedFrame> frames;
    const auto frame_len = static_cast<std::int64_t>(cfg.header_pattern.size() + cfg.payload_len);
    while (frames.size() < n_frames) {
        auto f = receive_frame(src, cfg, st, search);
        if (!f) break;
        const std::int64_t next =
            f->grid_origin_ns + (static_cast<std::int64_t>(f->header_symbol) + frame_len) * cfg.symbol_duration_ns();
        frames.push_back(std::move(*f));
        search.alignment = SymbolAlignment::Grid;
        search.origin_ns = next;
        search.max_symbols = 2 * cfg.header_pattern.size();
    }
    return frames;
}

void cmd_recv(const RunConfig& rc, const RecvArgs& a) {
    require_exclusive_source(rc);
    if (!rc.real && !rc.sim) throw UsageError("recv needs --sim --trace FILE or --real --file PATH");
    if (rc.frames == 0) throw UsageError("--frames must be positive");
    const ChannelConfig cfg = rc.channel();

    std::vector<ReceivedFrame> frames;
    ThresholdState st;
    if (rc.sim) {
        if (a.trace.empty()) throw UsageError("recv --sim needs --trace FILE (or - for stdin)");
        const LatencyTrace trace = read_trace_arg(a.trace);
        ReplaySource src(trace.samples);
        const std::int64_t lead_in = rc.lead_in_ns();
        const LatencyTrace quiet = collect_quiet(src, lead_in);
        st = cfg.theta_ns > 0 ? manual_threshold(cfg.theta_ns) : calibrate(quiet, cfg);
        FrameSearch search;
        search.origin_ns = lead_in;
        frames = receive_frames(src, cfg, st, rc.frames, search);
    } else {
        if (!(a.timeout_s > 0)) throw UsageError("--timeout-s must be positive");
        if (!(a.calibrate_ms > 0)) throw UsageError("--calibrate-ms must be positive");
        ProbeHandle h(rc.file, ProbeOptions{cfg.probe_mode});
        ProbeSource src(h);
        const LatencyTrace quiet = collect_quiet(src, static_cast<std::int64_t>(a.calibrate_ms * 1e6));
        st = cfg.theta_ns > 0 ? manual_threshold(cfg.theta_ns) : calibrate(quiet, cfg);
        std::cerr << "theta_ns=" << st.theta_ns << '\n';
        FrameSearch search;
        search.alignment = SymbolAlignment::Edge;
        search.deadline_ns = src.now_ns() + static_cast<std::int64_t>(a.timeout_s * 1e9);
        frames = receive_frames(src, cfg, st, rc.frames, search);
    }
    if (frames.empty()) throw ProtocolTimeout("no frame header found");

    BitStream payload;
    for (const auto& f : frames) {
        payload.append(f.payload);
        std::cerr << "frame at symbol " << f.header_symbol << ", header mismatches " << f.header_mismatches << '\n';
    }
    if (!rc.out.empty()) {
        const auto bytes = payload.to_bytes();
        Output out(rc.out);
        out.stream().write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.finish(rc.out);
    }
    if (rc.seed) {
        // Generated payloads can be checked against the shared seed.
        const BitStream expected = prbs(*rc.seed, rc.frames * rc.payload_bits).slice(0, payload.size());
        const ErrorReport rep = compare_bits(expected, payload);
        std::cout << error_report_csv_header() << '\n'
                  << error_report_csv_row(static_cast<double>(rc.ts_us), rep) << '\n';
    }
    if (frames.size() < rc.frames) {
        throw ProtocolTimeout("received " + std::to_string(frames.size()) + " of " + std::to_string(rc.frames) +
                              " frames");
    }
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
    std::string trace;
    std::string dataset;
    std::string truth;
    std::int64_t theta_ns = 0;
    std::int64_t max_gap_ns = -1;
    double bucket_s = 60;
    double factor = kDefaultSamplesPerRequest;
    std::int64_t split_ns = kDefaultSplitThresholdNs;
    std::size_t k = kDefaultK;
    double train_fraction = 0.7;
    double min_spacing_ms = 50;
    std::uint64_t seed = 1;
};

std::int64_t theta_or(const AnalyzeArgs& a, std::int64_t fallback) {
    const std::int64_t t = a.theta_ns > 0 ? a.theta_ns : fallback;
    return t;
}

std::vector<Episode> episodes_for(const LatencyTrace& trace, const AnalyzeArgs& a, std::int64_t theta) {
    return a.max_gap_ns >= 0 ? extract_episodes(trace, theta, a.max_gap_ns) : extract_episodes(trace, theta);
}

void cmd_episodes(const RunConfig& rc, const AnalyzeArgs& a) {
    const LatencyTrace trace = read_trace_arg(a.trace);
    Output out(rc.out);
    out.stream() << "start_ns,end_ns,est_latency_ns,n_samples\n";
    for (const Episode& ep : episodes_for(trace, a, theta_or(a, 50'000))) {
        out.stream() << ep.start_ns << ',' << ep.end_ns << ',' << ep.est_latency_ns << ',' << ep.n_samples << '\n';
    }
    out.finish(rc.out);
}

void cmd_rate(const RunConfig& rc, const AnalyzeArgs& a) {
    if (!(a.bucket_s > 0)) throw UsageError("--bucket-s must be positive");
    if (!(a.factor > 0)) throw UsageError("--factor must be positive");
    const LatencyTrace trace = read_trace_arg(a.trace);
    const auto bucket = static_cast<std::int64_t>(a.bucket_s * 1e9);
    const std::int64_t theta = theta_or(a, 50'000);
    const RateReport rep = a.max_gap_ns >= 0 ? count_above(trace, theta, bucket, a.max_gap_ns)
                                             : count_above(trace, theta, bucket);
    const auto est = rep.estimated_requests(a.factor);
    Output out(rc.out);
    out.stream() << "bucket,start_s,count,est_requests\n";
    char buf[96];
    for (std::size_t i = 0; i < rep.counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%g,%zu,%.2f", i, static_cast<double>(i) * a.bucket_s, rep.counts[i],
                      est[i]);
        out.stream() << buf << '\n';
    }
    out.finish(rc.out);
}

std::vector<SplitTruth> read_split_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != "start_ns,end_ns,split") {
        throw ParseError(1, "expected header 'start_ns,end_ns,split'", path);
    }
    std::vector<SplitTruth> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        long long s = 0, e = 0;
        int split = 0;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%lld,%lld,%d%c", &s, &e, &split, &tail) != 3 || e < s ||
            (split != 0 && split != 1)) {
            throw ParseError(lineno, "expected start_ns,end_ns,0|1", path);
        }
        if (split) out.push_back({s, e});
    }
    return out;
}

void cmd_splits(const RunConfig& rc, const AnalyzeArgs& a) {
    const LatencyTrace trace = read_trace_arg(a.trace);
    std::vector<Episode> splits;
    Output out(rc.out);
    out.stream() << "start_ns,end_ns,est_latency_ns,n_samples,class\n";
    for (const Episode& ep : episodes_for(trace, a, theta_or(a, 70'000))) {
        const bool split = classify_split(ep, a.split_ns) == SplitClass::Split;
        if (split) splits.push_back(ep);
        out.stream() << ep.start_ns << ',' << ep.end_ns << ',' << ep.est_latency_ns << ',' << ep.n_samples << ','
                     << (split ? "split" : "nosplit") << '\n';
    }
    out.finish(rc.out);
    std::cerr << "splits=" << splits.size() << '\n';
    if (!a.truth.empty()) {
        const BinaryScore s = score_splits(splits, read_split_truth(a.truth));
        char buf[128];
        std::snprintf(buf, sizeof buf, "recall=%.4f\nprecision=%.4f\nf1=%.4f\n", s.recall(), s.precision(), s.f1());
        std::cerr << buf;
    }
}

void cmd_classify(const RunConfig& rc, const AnalyzeArgs& a) {
    if (a.dataset.empty()) throw UsageError("classify needs --dataset DIR");
    if (!(a.train_fraction > 0 && a.train_fraction < 1)) throw UsageError("--train-fraction must be in (0, 1)");
    const auto samples = read_dataset(a.dataset);
    const auto edges = log_bin_edges();
    const std::int64_t theta = theta_or(a, 50'000);
    std::vector<FeatureVector> vectors;
    vectors.reserve(samples.size());
    for (const auto& s : samples) vectors.push_back(trace_feature(s.trace, theta, edges, s.label));
    const Split split = stratified_split(vectors, a.train_fraction, a.seed);
    if (split.train.size() < a.k) throw UsageError("training set smaller than k");
    const KnnModel model = knn_train(split.train, a.k);
    const ClassificationReport rep = evaluate(model, split.test);
    std::ostringstream csv;
    write_report_csv(rep, csv);
    std::cout << csv.str();
    if (!rc.out.empty() && rc.out != "-") write_text(rc.out, csv.str());
}

void cmd_keystrokes(const RunConfig& rc, const AnalyzeArgs& a) {
    if (!(a.min_spacing_ms > 0)) throw UsageError("--min-spacing-ms must be positive");
    const LatencyTrace trace = read_trace_arg(a.trace);
    const KeystrokeTimings k =
        keystroke_timings(trace, theta_or(a, 54'000), static_cast<std::int64_t>(a.min_spacing_ms * 1e6));
    Output out(rc.out);
    out.stream() << "index,event_ns,delta_ns\n";
    for (std::size_t i = 0; i < k.events_ns.size(); ++i) {
        out.stream() << i << ',' << k.events_ns[i] << ',';
        if (i > 0) out.stream() << k.deltas_ns[i - 1];
        out.stream() << '\n';
    }
    out.finish(rc.out);
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string truth_out;
    std::string rpm = "30,120,60";
    double bucket_s = 60;
    std::size_t keys = 200;
    std::size_t per_class = 100;
};

void write_trace_out(const std::string& path, const LatencyTrace& trace) {
    Output out(path);
    trace_write(trace, out.stream());
    out.finish(path);
}

std::uint64_t synth_seed(const RunConfig& rc) {
    if (!rc.seed) throw UsageError("synth needs --seed");
    return *rc.seed;
}

NoiseProcess synth_noise(const RunConfig& rc, const ContentionModel& model) {
    return rc.noise.empty() ? NoiseProcess::none()
                            : NoiseProcess::from_degree(parse_noise_degree(rc.noise), model.contended);
}

void cmd_synth_splits(const RunConfig& rc, const SynthArgs& a) {
    InsertWorkload w;
    const WorkloadReplay r = replay_inserts(w, synth_noise(rc, w.model), synth_seed(rc));
    write_trace_out(rc.out, r.trace);
    if (!a.truth_out.empty()) {
        Output t(a.truth_out);
        t.stream() << "start_ns,end_ns,split\n";
        for (const auto& e : r.events) t.stream() << e.start_ns << ',' << e.end_ns << ',' << (e.split ? 1 : 0) << '\n';
        t.finish(a.truth_out);
    }
}

void cmd_synth_rate(const RunConfig& rc, const SynthArgs& a) {
    if (!(a.bucket_s > 0)) throw UsageError("--bucket-s must be positive");
    RequestRateWorkload w;
    w.bucket_ns = static_cast<std::int64_t>(a.bucket_s * 1e9);
    for (const auto& s : split_list(a.rpm)) {
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            w.requests_per_bucket.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("bad request count '" + s + "' in --requests");
        }
    }
    const WorkloadReplay r = replay_requests(w, synth_noise(rc, w.model), synth_seed(rc));
    write_trace_out(rc.out, r.trace);
}

void cmd_synth_keystrokes(const RunConfig& rc, const SynthArgs& a) {
    if (a.keys < 2) throw UsageError("--keys must be at least 2");
    KeystrokeWorkload w;
    w.delays_ns = sample_keystroke_delays(a.keys - 1, synth_seed(rc));
    const WorkloadReplay r = replay_keystrokes(w, synth_noise(rc, w.model), synth_seed(rc));
    write_trace_out(rc.out, r.trace);
    if (!a.truth_out.empty()) {
        Output t(a.truth_out);
        t.stream() << "index,delta_ns\n";
        for (std::size_t i = 0; i < w.delays_ns.size(); ++i) t.stream() << i + 1 << ',' << w.delays_ns[i] << '\n';
        t.finish(a.truth_out);
    }
}

void cmd_synth_dataset(const RunConfig& rc, const SynthArgs& a) {
    if (rc.out.empty() || rc.out == "-") throw UsageError("synth dataset needs --out DIR");
    if (a.per_class == 0) throw UsageError("--per-class must be positive");
    const auto samples = db_operation_dataset(a.per_class, synth_seed(rc));
    write_dataset(rc.out, samples);
}

// ---- wiring ---------------------------------------------------------------

void add_channel_flags(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--ts-us", rc.ts_us, "Symbol duration in microseconds")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", rc.mode, "Probe mode")->check(CLI::IsMember({"fsync", "write", "ftruncate"}));
    cmd->add_option("--decision", rc.decision, "Decision rule")->check(CLI::IsMember({"mean", "stddev"}));
    cmd->add_option("--theta-ns", rc.theta_ns, "Fixed threshold; calibrate when omitted")->check(CLI::PositiveNumber);
    cmd->add_option("--payload-bits", rc.payload_bits, "Payload bits per frame")->check(CLI::PositiveNumber);
    cmd->add_option("--sim-params", rc.sim_params, "Simulator parameters (key=value file)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", rc.seed, "Run seed");
    cmd->add_option("--out", rc.out, "Output file (- for stdout)");
    cmd->add_option("--lead-in-us", rc.lead_in_us, "Idle lead-in before the first symbol (simulation)");
}

void add_source_flags(CLI::App* cmd, RunConfig& rc, bool with_sim) {
    cmd->add_flag("--real", rc.real, "Probe a real file instead of simulating");
    cmd->add_option("--file", rc.file, "Probe file for --real (must exist)");
    if (with_sim) cmd->add_flag("--sim", rc.sim, "Use the simulator");
}

void add_noise_flag(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--noise", rc.noise, "Background noise degree")
        ->check(CLI::IsMember({"none", "low", "medium", "high", "critical"}));
}

int run(int argc, char** argv) {
    CLI::App app{"fsync latency covert channel and side-channel analysis"};
    app.require_subcommand(1);
    RunConfig rc;
    std::function<void()> action;

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Profile the quiet latency and derive a threshold");
    add_channel_flags(c, rc);
    add_source_flags(c, rc, false);
    add_noise_flag(c, rc);
    c->add_option("--duration-ms", cal.duration_ms, "Calibration duration");
    c->callback([&] { action = [&] { cmd_calibrate(rc, cal); }; });

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Simulated loopback BER and capacity table");
    add_channel_flags(b, rc);
    add_source_flags(b, rc, false);
    b->add_option("--ts-list", bench.ts_list, "Comma-separated symbol durations in microseconds");
    b->add_option("--noise-list", bench.noise_list, "Comma-separated noise degrees");
    b->add_option("--bits", bench.bits, "Bits per loopback run");
    b->callback([&] { action = [&] { cmd_bench(rc, bench); }; });

    SendArgs send;
    auto* s = app.add_subcommand("send", "Transmit framed payload");
    add_channel_flags(s, rc);
    add_source_flags(s, rc, true);
    add_noise_flag(s, rc);
    s->add_option("--payload", send.payload, "Payload file; a seeded PRBS payload when omitted");
    s->add_option("--frames", rc.frames, "Frames of generated payload");
    s->callback([&] { action = [&] { cmd_send(rc, send); }; });

    RecvArgs recv;
    auto* r = app.add_subcommand("recv", "Calibrate, synchronize on the header and decode frames");
    add_channel_flags(r, rc);
    add_source_flags(r, rc, true);
    r->add_option("--trace", recv.trace, "Receiver trace for --sim (- for stdin)");
    r->add_option("--frames", rc.frames, "Frames to receive");
    r->add_option("--timeout-s", recv.timeout_s, "Give up without a header after this long (--real)");
    r->add_option("--calibrate-ms", recv.calibrate_ms, "Quiet profiling time before listening (--real)");
    r->callback([&] { action = [&] { cmd_recv(rc, recv); }; });

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "Side-channel analyses over latency traces");
    a->require_subcommand(1);
    auto trace_cmd = [&](const char* name, const char* help, void (*fn)(const RunConfig&, const AnalyzeArgs&)) {
        auto* sub = a->add_subcommand(name, help);
        sub->add_option("--trace", an.trace, "Trace CSV (- for stdin)")->required();
        sub->add_option("--theta-ns", an.theta_ns, "Latency threshold")->check(CLI::PositiveNumber);
        sub->add_option("--max-gap-ns", an.max_gap_ns, "Episode gap; 3x the median probe period when omitted")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--out", rc.out, "Report CSV (- for stdout)");
        sub->callback([&, fn] { action = [&, fn] { fn(rc, an); }; });
        return sub;
    };
    trace_cmd("episodes", "Contention episodes and their estimated latency", cmd_episodes);
    auto* rate = trace_cmd("rate", "Above-threshold samples per time bucket", cmd_rate);
    rate->add_option("--bucket-s", an.bucket_s, "Bucket length in seconds");
    rate->add_option("--factor", an.factor, "Samples per victim request");
    auto* splits = trace_cmd("splits", "Classify episodes as node splits", cmd_splits);
    splits->add_option("--split-ns", an.split_ns, "Split when the estimated latency exceeds this");
    splits->add_option("--truth", an.truth, "Ground truth CSV (start_ns,end_ns,split) to score against");
    auto* keys = trace_cmd("keystrokes", "Keystroke events and inter-keystroke delays", cmd_keystrokes);
    keys->add_option("--min-spacing-ms", an.min_spacing_ms, "Minimum spacing between keystroke events");
    auto* cls = a->add_subcommand("classify", "k-NN over episode latency histograms of a labeled dataset");
    cls->add_option("--dataset", an.dataset, "Dataset directory with labels.csv")->required();
    cls->add_option("--theta-ns", an.theta_ns, "Latency threshold")->check(CLI::PositiveNumber);
    cls->add_option("--k", an.k, "Neighbors")->check(CLI::PositiveNumber);
    cls->add_option("--train-fraction", an.train_fraction, "Training share of each class");
    cls->add_option("--seed", an.seed, "Split seed");
    cls->add_option("--out", rc.out, "Report CSV");
    cls->callback([&] { action = [&] { cmd_classify(rc, an); }; });

    SynthArgs sy;
    auto* syn = app.add_subcommand("synth", "Synthetic victim traces with ground truth");
    syn->require_subcommand(1);
    auto synth_cmd = [&](const char* name, const char* help, void (*fn)(const RunConfig&, const SynthArgs&)) {
        auto* sub = syn->add_subcommand(name, help);
        sub->add_option("--seed", rc.seed, "Run seed")->required();
        sub->add_option("--out", rc.out, "Output trace (- for stdout)");
        sub->callback([&, fn] { action = [&, fn] { fn(rc, sy); }; });
        return sub;
    };
    auto* ss = synth_cmd("splits", "400 inserts with 49 node splits", cmd_synth_splits);
    ss->add_option("--truth-out", sy.truth_out, "Ground truth CSV");
    add_noise_flag(ss, rc);
    auto* sr = synth_cmd("rate", "Request bursts at given counts per bucket", cmd_synth_rate);
    sr->add_option("--requests", sy.rpm, "Comma-separated requests per bucket");
    sr->add_option("--bucket-s", sy.bucket_s, "Bucket length in seconds");
    add_noise_flag(sr, rc);
    auto* sk = synth_cmd("keystrokes", "Keystroke flushes", cmd_synth_keystrokes);
    sk->add_option("--keys", sy.keys, "Number of key presses");
    sk->add_option("--truth-out", sy.truth_out, "Ground truth delays CSV");
    add_noise_flag(sk, rc);
    auto* sd = synth_cmd("dataset", "Labeled database-operation traces", cmd_synth_dataset);
    sd->add_option("--per-class", sy.per_class, "Traces per operation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc_code = app.exit(e);
        return rc_code == 0 ? kOk : kUsage;
    }

    try {
        action();
        return kOk;
    } catch (const ProtocolTimeout& e) {
        std::cerr << "fsyncchan: " << e.what() << '\n';
        return kTimeout;
    } catch (const UsageError& e) {
        std::cerr << "fsyncchan: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "fsyncchan: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "fsyncchan: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "fsyncchan: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "fsyncchan: " << e.what() << '\n';
        return kRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
