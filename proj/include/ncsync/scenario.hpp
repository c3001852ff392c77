#pragma once

// Scenario files: INI-style sections of key = value pairs.
//
//   [frame]    n_fft, n_cp, n_symbols, n_empty_prefix, subcarrier_spacing_hz,
//              occupied (comma list of k or lo..hi ranges)
//   [channel]  model = cost207_tu | flat
//   [nbi]      kind, frequency, offset_hz (lo, hi), bandwidth_hz, message_hz, deviation_hz
//   [cfo]      range_hz (lo, hi)
//   [grid]     snr_db, sir_db, bandwidths_hz (comma lists; "inf" allowed for snr/sir)
//   [run]      name, algorithms, timing_rule, trials, seed

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "ncsync/impairments.hpp"
#include "ncsync/ofdm.hpp"
#include "ncsync/sync.hpp"
#include "ncsync/types.hpp"

namespace ncsync::harness {

enum class ChannelModel { cost207_tu, flat };

inline std::string_view to_string(ChannelModel m) { return m == ChannelModel::flat ? "flat" : "cost207_tu"; }

struct Scenario {
    std::string name = "scenario";
    std::size_t n_fft = 256;
    std::size_t n_cp = 32;
    std::size_t n_symbols = 11;
    std::size_t n_empty_prefix = 3;
    double sc_spacing_hz = 15e3;
    std::vector<int> occupied = ofdm::index_ranges({{-100, -1}, {1, 3}, {46, 100}});
    ChannelModel channel = ChannelModel::cost207_tu;
    impair::NbiSpec nbi{};
    double nbi_offset_min_hz = -14e3;
    double nbi_offset_max_hz = 14e3;
    double cfo_min_hz = -10.5e3;
    double cfo_max_hz = 10.5e3;
    std::vector<double> snr_grid{20.0};
    std::vector<double> sir_grid{0.0};
    std::vector<double> bandwidths_hz;
    std::vector<sync::Algorithm> algorithms{sync::Algorithm::sc, sync::Algorithm::nirs};
    sync::TimingRule timing_rule = sync::TimingRule::argmax;
    std::size_t n_trials = 2000;
    std::uint64_t master_seed = 1;

    [[nodiscard]] double sample_rate_hz() const { return static_cast<double>(n_fft) * sc_spacing_hz; }

    [[nodiscard]] ofdm::FrameSpec frame_spec() const {
        return {ofdm::SubcarrierMap(n_fft, occupied), n_cp, n_symbols, n_empty_prefix};
    }

    void validate() const {
        if (n_trials < 1) throw ConfigError("[run] trials: must be at least 1");
        if (snr_grid.empty()) throw ConfigError("[grid] snr_db: must list at least one value");
        if (sir_grid.empty()) throw ConfigError("[grid] sir_db: must list at least one value");
        if (algorithms.empty()) throw ConfigError("[run] algorithms: must list at least one algorithm");
        if (!(sc_spacing_hz > 0.0)) throw ConfigError("[frame] subcarrier_spacing_hz: must be positive");
        if (cfo_min_hz > cfo_max_hz) throw ConfigError("[cfo] range_hz: lower bound exceeds upper bound");
        if (std::max(std::abs(cfo_min_hz), std::abs(cfo_max_hz)) >= sc_spacing_hz)
            throw ConfigError("[cfo] range_hz: |CFO| must stay below one subcarrier spacing");
        if (nbi_offset_min_hz > nbi_offset_max_hz) throw ConfigError("[nbi] offset_hz: lower bound exceeds upper bound");
        for (double b : bandwidths_hz)
            if (b <= 2.0 * nbi.message_hz) throw ConfigError("[grid] bandwidths_hz: each must exceed 2*message_hz");
        try {
            (void)frame_spec();
            if (nbi.kind != impair::NbiKind::ideal_tone && !(nbi.effective_deviation_hz() > 0.0))
                throw std::invalid_argument("FM deviation must be positive");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid scenario: ") + e.what());
        }
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ConfigError(where + ": '" + s + "' is not a number");
    return v;
}

template <typename Int>
Int parse_int(const std::string& s, const std::string& where) {
    Int v{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ConfigError(where + ": '" + s + "' is not a valid integer");
    return v;
}

inline std::vector<int> parse_index_list(const std::string& s, const std::string& where) {
    std::vector<int> out;
    for (const auto& item : split_list(s)) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_int<int>(item, where));
            continue;
        }
        const int lo = parse_int<int>(trim(item.substr(0, dots)), where);
        const int hi = parse_int<int>(trim(item.substr(dots + 2)), where);
        if (hi < lo) throw ConfigError(where + ": empty range '" + item + "'");
        for (int k = lo; k <= hi; ++k) out.push_back(k);
    }
    return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& where) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_double(item, where));
    return out;
}

inline std::pair<double, double> parse_bounds(const std::string& s, const std::string& where) {
    const auto v = parse_double_list(s, where);
    if (v.size() != 2) throw ConfigError(where + ": expected 'lo, hi'");
    return {v[0], v[1]};
}

}  // namespace detail

/// Parse a scenario; unknown sections or keys are rejected.
inline Scenario parse_scenario(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
    }

    static const std::map<std::string, std::set<std::string>> known{
        {"frame", {"n_fft", "n_cp", "n_symbols", "n_empty_prefix", "subcarrier_spacing_hz", "occupied"}},
        {"channel", {"model"}},
        {"nbi", {"kind", "frequency", "offset_hz", "bandwidth_hz", "message_hz", "deviation_hz"}},
        {"cfo", {"range_hz"}},
        {"grid", {"snr_db", "sir_db", "bandwidths_hz"}},
        {"run", {"name", "algorithms", "timing_rule", "trials", "seed"}},
    };

    Scenario s;
    for (const auto& [section, body] : tree) {
        const auto sec = known.find(section);
        if (sec == known.end()) {
            if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            const std::string where = "[" + section + "] " + key;
            if (!sec->second.contains(key)) throw ConfigError(where + ": unknown key");
            const std::string v = detail::trim(node.get_value<std::string>());
            try {
                if (section == "frame") {
                    if (key == "n_fft") s.n_fft = detail::parse_int<std::size_t>(v, where);
                    else if (key == "n_cp") s.n_cp = detail::parse_int<std::size_t>(v, where);
                    else if (key == "n_symbols") s.n_symbols = detail::parse_int<std::size_t>(v, where);
                    else if (key == "n_empty_prefix") s.n_empty_prefix = detail::parse_int<std::size_t>(v, where);
                    else if (key == "subcarrier_spacing_hz") s.sc_spacing_hz = detail::parse_double(v, where);
                    else if (key == "occupied") s.occupied = detail::parse_index_list(v, where);
                } else if (section == "channel") {
                    if (v == "cost207_tu") s.channel = ChannelModel::cost207_tu;
                    else if (v == "flat") s.channel = ChannelModel::flat;
                    else throw ConfigError(where + ": expected cost207_tu or flat, got '" + v + "'");
                } else if (section == "nbi") {
                    if (key == "kind") s.nbi.kind = impair::parse_nbi_kind(v);
                    else if (key == "frequency") s.nbi.frequency = detail::parse_double(v, where);
                    else if (key == "offset_hz") std::tie(s.nbi_offset_min_hz, s.nbi_offset_max_hz) = detail::parse_bounds(v, where);
                    else if (key == "bandwidth_hz") s.nbi.bandwidth_hz = detail::parse_double(v, where);
                    else if (key == "message_hz") s.nbi.message_hz = detail::parse_double(v, where);
                    else if (key == "deviation_hz") s.nbi.deviation_hz = detail::parse_double(v, where);
                } else if (section == "cfo") {
                    std::tie(s.cfo_min_hz, s.cfo_max_hz) = detail::parse_bounds(v, where);
                } else if (section == "grid") {
                    if (key == "snr_db") s.snr_grid = detail::parse_double_list(v, where);
                    else if (key == "sir_db") s.sir_grid = detail::parse_double_list(v, where);
                    else if (key == "bandwidths_hz") s.bandwidths_hz = detail::parse_double_list(v, where);
                } else if (section == "run") {
                    if (key == "name") s.name = v;
                    else if (key == "algorithms") {
                        s.algorithms.clear();
                        for (const auto& a : detail::split_list(v)) s.algorithms.push_back(sync::parse_algorithm(a));
                    } else if (key == "timing_rule") s.timing_rule = sync::parse_timing_rule(v);
                    else if (key == "trials") s.n_trials = detail::parse_int<std::size_t>(v, where);
                    else if (key == "seed") s.master_seed = detail::parse_int<std::uint64_t>(v, where);
                }
            } catch (const std::invalid_argument& e) {
                throw ConfigError(where + ": " + e.what());
            }
        }
    }
    s.nbi.sc_spacing_hz = s.sc_spacing_hz;
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    try {
        return parse_scenario(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// 64-bit FNV-1a, used to fingerprint scenario files in run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ncsync::harness
