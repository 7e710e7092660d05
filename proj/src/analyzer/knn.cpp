#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "fsyncchan/analyzer.hpp"
#include "fsyncchan/error.hpp"

namespace fsc {

std::vector<double> log_bin_edges(double lo_ns, double hi_ns, std::size_t n_bins) {
    if (!(lo_ns > 0.0) || !(hi_ns > lo_ns) || n_bins == 0) throw std::invalid_argument("log_bin_edges: bad range");
    std::vector<double> edges(n_bins + 1);
    const double step = std::log(hi_ns / lo_ns) / static_cast<double>(n_bins);
    for (std::size_t i = 0; i <= n_bins; ++i) edges[i] = lo_ns * std::exp(step * static_cast<double>(i));
    edges.back() = hi_ns;
    return edges;
}

FeatureVector make_feature(std::span<const std::int64_t> values_ns, const std::vector<double>& edges,
                           std::optional<std::string> label) {
    if (edges.size() < 2) throw std::invalid_argument("make_feature: need at least one bin");
    FeatureVector v;
    v.edges = edges;
    v.label = std::move(label);
    v.histogram.assign(edges.size() - 1, 0);
    for (std::int64_t x : values_ns) {
        // upper_bound - 1 is the bin whose lower edge is <= x.
        auto it = std::upper_bound(edges.begin(), edges.end(), static_cast<double>(x));
        std::ptrdiff_t bin = it - edges.begin() - 1;
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(v.histogram.size()) - 1);
        ++v.histogram[static_cast<std::size_t>(bin)];
        ++v.total;
    }
    return v;
}

FeatureVector trace_feature(const LatencyTrace& trace, std::int64_t theta_ns, const std::vector<double>& edges,
                            std::optional<std::string> label) {
    std::vector<std::int64_t> est;
    for (const Episode& ep : extract_episodes(trace, theta_ns)) est.push_back(ep.est_latency_ns);
    if (est.empty()) est.push_back(0);
    return make_feature(est, edges, std::move(label));
}

namespace {

void require_same_edges(const FeatureVector& a, const FeatureVector& b) {
    if (a.edges != b.edges) throw ValidationError("feature vectors use different bin edges");
    if (a.histogram.size() + 1 != a.edges.size() || b.histogram.size() + 1 != b.edges.size()) {
        throw ValidationError("feature histogram does not match its bin edges");
    }
}

// Squared distance of the normalized histograms as num / den, exact, so that
// equal distances tie and fall back to training order.
struct ExactDistance {
    boost::multiprecision::cpp_int num;
    boost::multiprecision::cpp_int den;

    bool operator<(const ExactDistance& o) const { return num * o.den < o.num * den; }
};

ExactDistance exact_distance2(const FeatureVector& a, const FeatureVector& b) {
    using boost::multiprecision::cpp_int;
    // A zero-total histogram is all zeros; a unit scale keeps it the zero vector.
    const cpp_int ta = a.total == 0 ? 1 : a.total;
    const cpp_int tb = b.total == 0 ? 1 : b.total;
    ExactDistance d{0, ta * ta * tb * tb};
    for (std::size_t i = 0; i < a.histogram.size(); ++i) {
        const cpp_int x = cpp_int(a.histogram[i]) * tb - cpp_int(b.histogram[i]) * ta;
        d.num += x * x;
    }
    return d;
}

}  // namespace

double normalized_distance2(const FeatureVector& a, const FeatureVector& b) {
    require_same_edges(a, b);
    const double na = a.total == 0 ? 0.0 : 1.0 / static_cast<double>(a.total);
    const double nb = b.total == 0 ? 0.0 : 1.0 / static_cast<double>(b.total);
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.histogram.size(); ++i) {
        const double d = static_cast<double>(a.histogram[i]) * na - static_cast<double>(b.histogram[i]) * nb;
        d2 += d * d;
    }
    return d2;
}

KnnModel knn_train(std::vector<FeatureVector> vectors, std::size_t k) {
    if (vectors.empty()) throw std::invalid_argument("knn_train: empty training set");
    if (k == 0 || k > vectors.size()) throw std::invalid_argument("knn_train: k must be in [1, training size]");
    for (const auto& v : vectors) {
        if (!v.label) throw ValidationError("knn_train: unlabeled training vector");
        require_same_edges(vectors.front(), v);
        const auto sum = std::accumulate(v.histogram.begin(), v.histogram.end(), std::uint64_t{0});
        if (sum != v.total) throw ValidationError("knn_train: histogram total mismatch");
    }
    return KnnModel{std::move(vectors), k};
}

std::string knn_classify(const KnnModel& model, const FeatureVector& query) {
    const std::size_t n = model.training.size();
    std::vector<std::pair<ExactDistance, std::size_t>> ranked;
    ranked.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        require_same_edges(query, model.training[i]);
        ranked.emplace_back(exact_distance2(query, model.training[i]), i);
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(model.k), ranked.end(),
                      [](const auto& x, const auto& y) {
                          if (x.first < y.first) return true;
                          if (y.first < x.first) return false;
                          return x.second < y.second;
                      });

    // votes and rank of the nearest member, per label
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
    for (std::size_t r = 0; r < model.k; ++r) {
        const std::string& label = *model.training[ranked[r].second].label;
        ++tally.try_emplace(label, 0, r).first->second.first;
    }
    auto best = tally.begin();
    for (auto it = tally.begin(); it != tally.end(); ++it) {
        const auto [votes, nearest] = it->second;
        if (votes > best->second.first || (votes == best->second.first && nearest < best->second.second)) best = it;
    }
    return best->first;
}

Split stratified_split(const std::vector<FeatureVector>& vectors, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
        throw std::invalid_argument("stratified_split: fraction outside [0, 1]");
    }
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (!vectors[i].label) throw ValidationError("stratified_split: unlabeled vector");
        by_class[*vectors[i].label].push_back(i);
    }
    std::mt19937_64 rng(seed);
    Split out;
    for (auto& [label, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < idx.size(); ++j) (j < n_train ? out.train : out.test).push_back(vectors[idx[j]]);
    }
    return out;
}

double ClassificationReport::accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

ClassificationReport evaluate(const KnnModel& model, std::span<const FeatureVector> test) {
    ClassificationReport rep;
    for (const auto& v : model.training) rep.classes.try_emplace(*v.label);
    for (const auto& v : test) {
        if (!v.label) throw ValidationError("evaluate: unlabeled test vector");
        const std::string predicted = knn_classify(model, v);
        const std::string& truth = *v.label;
        ++rep.classes[truth].support;
        ++rep.total;
        if (predicted == truth) {
            ++rep.correct;
            ++rep.classes[truth].score.true_pos;
        } else {
            ++rep.classes[truth].score.false_neg;
            ++rep.classes[predicted].score.false_pos;
        }
    }
    return rep;
}

void write_report_csv(const ClassificationReport& report, std::ostream& out) {
    char buf[160];
    out << "class,support,precision,recall,f1\n";
    for (const auto& [label, cs] : report.classes) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f", cs.support, cs.score.precision(), cs.score.recall(),
                      cs.score.f1());
        out << label << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "accuracy,%zu,,,%.6f", report.total, report.accuracy());
    out << buf << '\n';
}

}  // namespace fsc
