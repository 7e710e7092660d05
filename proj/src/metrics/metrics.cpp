#include "fsyncchan/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace fsc {

double ErrorReport::rate_1to0() const {
    return sent_ones == 0 ? 0.0 : static_cast<double>(err_1to0) / static_cast<double>(sent_ones);
}

double ErrorReport::rate_0to1() const {
    return sent_zeros == 0 ? 0.0 : static_cast<double>(err_0to1) / static_cast<double>(sent_zeros);
}

double ErrorReport::p() const {
    return n_bits == 0 ? 0.0 : static_cast<double>(errors()) / static_cast<double>(n_bits);
}

ErrorReport compare_bits(const BitStream& sent, const BitStream& received) {
    if (sent.size() != received.size()) {
        throw std::invalid_argument("compare_bits: length mismatch (" + std::to_string(sent.size()) + " vs " +
                                    std::to_string(received.size()) + ")");
    }
    ErrorReport r;
    r.n_bits = sent.size();
    for (std::size_t i = 0; i < sent.size(); ++i) {
        if (sent[i]) {
            ++r.sent_ones;
            r.err_1to0 += received[i] == 0;
        } else {
            ++r.sent_zeros;
            r.err_0to1 += received[i] == 1;
        }
    }
    return r;
}

namespace {

// x * log2(1/x) with the 0 * log(1/0) = 0 convention.
double plog(double x) { return x <= 0.0 ? 0.0 : -x * std::log2(x); }

}  // namespace

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binary_entropy: p outside [0, 1]");
    return plog(p) + plog(1.0 - p);
}

double bsc_efficiency(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bsc_efficiency: p outside [0, 1]");
    const double x = p - 0.5;  // exact for p in [0.25, 1]
    if (std::abs(x) < 0.125) {
        // 1 - H(1/2 + x) = (1/ln 2) * sum_{n>=1} (2x)^(2n) / (2n (2n - 1))
        const double y = 4.0 * x * x;
        double term = y;
        double sum = 0.0;
        for (int n = 1; n < 60 && term != 0.0; ++n) {
            sum += term / (2.0 * n * (2.0 * n - 1.0));
            term *= y;
        }
        return sum / std::numbers::ln2;
    }
    return 1.0 - binary_entropy(p);
}

CapacityResult capacity(double t_s_us, double p) {
    if (!(t_s_us > 0.0) || !std::isfinite(t_s_us)) throw std::invalid_argument("capacity: t_s must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("capacity: p outside [0, 1]");
    CapacityResult r;
    r.bandwidth_bps = 1e6 / t_s_us;
    r.p = p;
    r.raw_capacity_bps = r.bandwidth_bps * bsc_efficiency(p);
    r.capacity_bps = p >= 0.5 ? 0.0 : r.raw_capacity_bps;
    return r;
}

std::string error_report_csv_header() { return "t_s_us,n_bits,err_1to0,err_0to1,p,B_bps,C_bps"; }

std::string error_report_csv_row(double t_s_us, const ErrorReport& report) {
    const CapacityResult c = capacity(t_s_us, report.p());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%g,%zu,%zu,%zu,%.8f,%.3f,%.3f", t_s_us, report.n_bits, report.err_1to0,
                  report.err_0to1, report.p(), c.bandwidth_bps, c.capacity_bps);
    return buf;
}

}  // namespace fsc
