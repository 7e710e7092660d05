#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>

#include "fsyncchan/error.hpp"
#include "fsyncchan/simchan.hpp"

namespace fsc {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::string_view key) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line, "invalid value '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

}  // namespace

SimParams parse_sim_params(std::istream& in) {
    SimParams p;
    std::optional<double> rate_override;
    bool burst_len_set = false;

    using Setter = std::function<void(std::string_view, std::size_t, std::string_view)>;
    auto i64 = [](std::int64_t& field) -> Setter {
        return [&field](std::string_view v, std::size_t line, std::string_view key) {
            field = parse_number<std::int64_t>(v, line, key);
        };
    };
    const std::map<std::string, Setter, std::less<>> setters = {
        {"model.mode",
         [&](std::string_view v, std::size_t line, std::string_view) {
             if (v == "empirical") {
                 p.model.mode = ModelMode::Empirical;
             } else if (v == "decomposed") {
                 p.model.mode = ModelMode::Decomposed;
             } else {
                 throw ParseError(line, "model.mode must be empirical or decomposed");
             }
         }},
        {"model.overlap",
         [&](std::string_view v, std::size_t line, std::string_view) {
             if (v == "issue") {
                 p.model.overlap = OverlapRule::IssueInstant;
             } else if (v == "interval") {
                 p.model.overlap = OverlapRule::FullInterval;
             } else {
                 throw ParseError(line, "model.overlap must be issue or interval");
             }
         }},
        {"standalone.mean_ns", i64(p.model.standalone.mean_ns)},
        {"standalone.std_ns", i64(p.model.standalone.stddev_ns)},
        {"standalone.floor_ns", i64(p.model.standalone.floor_ns)},
        {"contended.mean_ns", i64(p.model.contended.mean_ns)},
        {"contended.std_ns", i64(p.model.contended.stddev_ns)},
        {"contended.floor_ns", i64(p.model.contended.floor_ns)},
        {"decomposed.t_data_ns", i64(p.model.t_data_ns)},
        {"decomposed.t_flush_ns", i64(p.model.t_flush_ns)},
        {"decomposed.t_meta_per_block_ns", i64(p.model.t_meta_per_block_ns)},
        {"decomposed.n_meta_blocks", i64(p.model.n_meta_blocks)},
        {"upsilon.mean_ns", i64(p.model.upsilon_prev.mean_ns)},
        {"upsilon.std_ns", i64(p.model.upsilon_prev.stddev_ns)},
        {"probe.overhead_ns", i64(p.model.probe_overhead_ns)},
        {"noise.degree",
         [&](std::string_view v, std::size_t line, std::string_view) {
             try {
                 p.noise.degree = parse_noise_degree(v);
             } catch (const std::invalid_argument& e) {
                 throw ParseError(line, e.what());
             }
         }},
        {"noise.burst_rate_hz",
         [&](std::string_view v, std::size_t line, std::string_view key) {
             rate_override = parse_number<double>(v, line, key);
         }},
        {"noise.burst_mean_ns",
         [&](std::string_view v, std::size_t line, std::string_view key) {
             p.noise.burst_len.mean_ns = parse_number<std::int64_t>(v, line, key);
             burst_len_set = true;
         }},
        {"noise.burst_std_ns",
         [&](std::string_view v, std::size_t line, std::string_view key) {
             p.noise.burst_len.stddev_ns = parse_number<std::int64_t>(v, line, key);
             burst_len_set = true;
         }},
        {"seed",
         [&](std::string_view v, std::size_t line, std::string_view key) {
             p.seed = parse_number<std::uint64_t>(v, line, key);
         }},
    };

    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(lineno, "expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) throw ParseError(lineno, "unknown key '" + std::string(key) + "'");
        it->second(value, lineno, key);
    }

    if (!burst_len_set) {
        if (p.model.mode == ModelMode::Decomposed) {
            p.noise.burst_len = {p.model.base_commit_ns() + p.model.upsilon_prev.mean_ns, p.model.upsilon_prev.stddev_ns,
                                 1000};
        } else {
            p.noise.burst_len = p.model.contended;
        }
    }
    p.noise.burst_rate_hz = rate_override.value_or(default_burst_rate_hz(p.noise.degree));
    try {
        p.model.validate();
        p.noise.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("sim params: ") + e.what());
    }
    return p;
}

SimParams load_sim_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return parse_sim_params(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

}  // namespace fsc
