#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "fsyncchan/bitstream.hpp"

namespace fsc {

struct ErrorReport {
    std::size_t n_bits = 0;
    std::size_t sent_ones = 0;
    std::size_t sent_zeros = 0;
    std::size_t err_1to0 = 0;
    std::size_t err_0to1 = 0;

    // Per-direction rates are relative to the sent bits of that value.
    double rate_1to0() const;
    double rate_0to1() const;
    // Overall symbol error rate: all errors over all bits.
    double p() const;
    std::size_t errors() const { return err_1to0 + err_0to1; }
};

// Throws std::invalid_argument when the lengths differ.
ErrorReport compare_bits(const BitStream& sent, const BitStream& received);

// Binary entropy in bits.
double binary_entropy(double p);

// 1 - H(p), accurate near p = 1/2 where the direct form cancels.
double bsc_efficiency(double p);

struct CapacityResult {
    double bandwidth_bps = 0.0;  // B = 1 / t_s
    double p = 0.0;
    double raw_capacity_bps = 0.0;  // B * (1 - H(p)), before clamping
    double capacity_bps = 0.0;      // 0 whenever p >= 0.5
};

// Binary symmetric channel capacity at symbol duration t_s_us and error rate p.
CapacityResult capacity(double t_s_us, double p);

// "t_s_us,n_bits,err_1to0,err_0to1,p,B_bps,C_bps"
std::string error_report_csv_header();
std::string error_report_csv_row(double t_s_us, const ErrorReport& report);

}  // namespace fsc
