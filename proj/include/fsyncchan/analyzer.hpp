#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsyncchan/trace.hpp"

namespace fsc {

// A run of above-threshold samples: the victim's activity as seen by the probe.
struct Episode {
    std::int64_t start_ns = 0;  // timestamp of the first member
    std::int64_t end_ns = 0;    // last member's timestamp + latency
    std::int64_t est_latency_ns = 0;
    std::size_t n_samples = 0;

    friend bool operator==(const Episode&, const Episode&) = default;
};

// 3x the median spacing of consecutive sample timestamps; 0 for traces with
// fewer than two samples.
std::int64_t default_max_gap(const LatencyTrace& trace);

// Above-theta samples join the current episode while the quiet time between
// the previous member's end and their start is at most max_gap_ns.
std::vector<Episode> extract_episodes(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t max_gap_ns);
std::vector<Episode> extract_episodes(const LatencyTrace& trace, std::int64_t theta_ns);

inline constexpr double kDefaultSamplesPerRequest = 10.0;

struct RateReport {
    std::int64_t bucket_ns = 0;
    // Above-theta samples per bucket. Bucket i covers [i * bucket, (i + 1) * bucket)
    // of session time; an episode counts in the bucket holding its first sample.
    std::vector<std::size_t> counts;

    std::vector<double> estimated_requests(double samples_per_request = kDefaultSamplesPerRequest) const;
};

RateReport count_above(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t bucket_ns);
RateReport count_above(const LatencyTrace& trace, std::int64_t theta_ns, std::int64_t bucket_ns,
                       std::int64_t max_gap_ns);

inline constexpr std::int64_t kDefaultSplitThresholdNs = 1'000'000;

enum class SplitClass { NoSplit, Split };

SplitClass classify_split(const Episode& ep, std::int64_t split_threshold_ns = kDefaultSplitThresholdNs);

struct BinaryScore {
    std::size_t true_pos = 0;
    std::size_t false_pos = 0;
    std::size_t false_neg = 0;

    double precision() const;
    double recall() const;
    double f1() const;
};

// Matches detected split episodes to ground-truth split intervals: a detection
// is a hit when it overlaps an unmatched truth interval.
struct SplitTruth {
    std::int64_t start_ns;
    std::int64_t end_ns;
};
BinaryScore score_splits(std::span<const Episode> detected_splits, std::span<const SplitTruth> truth);

// Log-spaced latency bin edges, n_bins + 1 of them from lo_ns to hi_ns.
std::vector<double> log_bin_edges(double lo_ns = 10'000.0, double hi_ns = 10'000'000.0, std::size_t n_bins = 32);

struct FeatureVector {
    std::vector<std::uint64_t> histogram;
    std::uint64_t total = 0;
    std::optional<std::string> label;
    std::vector<double> edges;
};

// Values outside the edges fall into the first or last bin.
FeatureVector make_feature(std::span<const std::int64_t> values_ns, const std::vector<double>& edges,
                           std::optional<std::string> label = {});

// Histogram of episode estimated latencies. A trace with no episode
// contributes a single estimated latency of zero.
FeatureVector trace_feature(const LatencyTrace& trace, std::int64_t theta_ns, const std::vector<double>& edges,
                            std::optional<std::string> label = {});

inline constexpr std::size_t kDefaultK = 5;

struct KnnModel {
    std::vector<FeatureVector> training;
    std::size_t k = kDefaultK;
};

// Squared Euclidean distance between the count-normalized histograms.
double normalized_distance2(const FeatureVector& a, const FeatureVector& b);

KnnModel knn_train(std::vector<FeatureVector> vectors, std::size_t k = kDefaultK);

// Majority label among the k nearest (distance, then training order); among
// classes tied on votes, the one owning the nearest neighbor wins.
std::string knn_classify(const KnnModel& model, const FeatureVector& query);

struct Split {
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> test;
};

// Per-class seeded shuffle; the first round(fraction * n) of each class train.
Split stratified_split(const std::vector<FeatureVector>& vectors, double train_fraction, std::uint64_t seed);

struct ClassScore {
    std::size_t support = 0;
    BinaryScore score;
};

struct ClassificationReport {
    std::map<std::string, ClassScore> classes;
    std::size_t correct = 0;
    std::size_t total = 0;

    double accuracy() const;
};

ClassificationReport evaluate(const KnnModel& model, std::span<const FeatureVector> test);

// class,support,precision,recall,f1 rows followed by an accuracy row.
void write_report_csv(const ClassificationReport& report, std::ostream& out);

inline constexpr std::int64_t kDefaultKeystrokeSpacingNs = 50'000'000;

struct KeystrokeTimings {
    std::vector<std::int64_t> events_ns;
    std::vector<std::int64_t> deltas_ns;
};

KeystrokeTimings keystroke_timings(const LatencyTrace& trace, std::int64_t theta_ns,
                                   std::int64_t min_spacing_ns = kDefaultKeystrokeSpacingNs);

// Labeled dataset directory: one trace CSV per sample and labels.csv with a
// "file,label" header.
struct LabeledTrace {
    std::string file;
    std::string label;
    LatencyTrace trace;
};

void write_dataset(const std::filesystem::path& dir, std::span<const LabeledTrace> samples);
std::vector<LabeledTrace> read_dataset(const std::filesystem::path& dir);

}  // namespace fsc
