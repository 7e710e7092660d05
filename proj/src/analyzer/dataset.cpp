#include <fstream>
#include <set>
#include <string>

#include "fsyncchan/analyzer.hpp"
#include "fsyncchan/error.hpp"

namespace fsc {

namespace {

constexpr const char* kLabelsFile = "labels.csv";
constexpr const char* kLabelsHeader = "file,label";

bool plain_name(const std::string& name) {
    return !name.empty() && name.find_first_of("/\\,") == std::string::npos && name != "." && name != ".." &&
           name != kLabelsFile;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, std::span<const LabeledTrace> samples) {
    std::filesystem::create_directories(dir);
    std::set<std::string> seen;
    std::ofstream labels(dir / kLabelsFile, std::ios::binary);
    if (!labels) throw Error("cannot open " + (dir / kLabelsFile).string() + " for writing");
    labels << kLabelsHeader << '\n';
    for (const auto& s : samples) {
        if (!plain_name(s.file)) throw std::invalid_argument("write_dataset: bad file name '" + s.file + "'");
        if (s.label.empty() || s.label.find_first_of(",\n") != std::string::npos) {
            throw std::invalid_argument("write_dataset: bad label '" + s.label + "'");
        }
        if (!seen.insert(s.file).second) throw std::invalid_argument("write_dataset: duplicate file " + s.file);
        trace_write_file(s.trace, dir / s.file);
        labels << s.file << ',' << s.label << '\n';
    }
    if (!labels) throw Error("write failed: " + (dir / kLabelsFile).string());
}

std::vector<LabeledTrace> read_dataset(const std::filesystem::path& dir) {
    const auto path = dir / kLabelsFile;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != kLabelsHeader) {
        throw ParseError(1, std::string("expected header '") + kLabelsHeader + "'", path.string());
    }
    std::vector<LabeledTrace> out;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError(lineno, "expected file,label", path.string());
        }
        LabeledTrace s{line.substr(0, comma), line.substr(comma + 1), {}};
        if (!plain_name(s.file)) throw ParseError(lineno, "bad file name '" + s.file + "'", path.string());
        if (s.label.empty()) throw ParseError(lineno, "empty label", path.string());
        if (!seen.insert(s.file).second) throw ParseError(lineno, "duplicate file " + s.file, path.string());
        s.trace = trace_read_file(dir / s.file);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace fsc
