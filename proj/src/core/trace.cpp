#include "fsyncchan/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "fsyncchan/error.hpp"

namespace fsc {

namespace {

constexpr std::string_view kHeader = "timestamp_ns,latency_ns";

std::int64_t parse_field(std::string_view field, std::size_t line, const char* name) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

void check_ordered(const LatencyTrace& trace) {
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        if (s.latency_ns <= 0) {
            throw ValidationError("sample " + std::to_string(i) + ": latency must be positive");
        }
        if (s.timestamp_ns < 0) {
            throw ValidationError("sample " + std::to_string(i) + ": negative timestamp");
        }
        if (i > 0 && s.timestamp_ns < trace.samples[i - 1].timestamp_ns) {
            throw ValidationError("sample " + std::to_string(i) + ": timestamp decreases");
        }
    }
}

bool is_sequential(const LatencyTrace& trace) {
    for (std::size_t i = 1; i < trace.samples.size(); ++i) {
        if (trace.samples[i].timestamp_ns < trace.samples[i - 1].end_ns()) return false;
    }
    return true;
}

void trace_write(const LatencyTrace& trace, std::ostream& sink) {
    sink << kHeader << '\n';
    for (const auto& s : trace.samples) sink << s.timestamp_ns << ',' << s.latency_ns << '\n';
    if (!sink) throw Error("trace_write: sink not writable");
}

LatencyTrace trace_read(std::istream& source) {
    LatencyTrace trace;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(source, line)) throw ParseError(1, "missing header row");
    ++lineno;
    if (line != kHeader) throw ParseError(lineno, "expected header '" + std::string(kHeader) + "'");

    while (std::getline(source, line)) {
        ++lineno;
        if (line.empty()) {
            // A blank final line is tolerated; anything after it is not.
            if (source.peek() == std::char_traits<char>::eof()) break;
            throw ParseError(lineno, "empty row");
        }
        auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError(lineno, "expected two comma-separated fields");
        }
        std::string_view view(line);
        LatencySample s{parse_field(view.substr(0, comma), lineno, "timestamp"),
                        parse_field(view.substr(comma + 1), lineno, "latency")};
        if (s.latency_ns <= 0) throw ParseError(lineno, "latency must be positive");
        if (s.timestamp_ns < 0) throw ParseError(lineno, "timestamp must be nonnegative");
        if (!trace.samples.empty() && s.timestamp_ns < trace.samples.back().timestamp_ns) {
            throw ValidationError("line " + std::to_string(lineno) + ": timestamp decreases");
        }
        trace.samples.push_back(s);
    }
    return trace;
}

void trace_write_file(const LatencyTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    trace_write(trace, out);
}

LatencyTrace trace_read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return trace_read(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace fsc
