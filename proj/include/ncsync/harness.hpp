#pragma once

// Monte-Carlo orchestration: per-trial frame generation, impairment,
// detection and classification, with deterministic per-trial seeding.

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include "ncsync/appendix.hpp"
#include "ncsync/evaluate.hpp"
#include "ncsync/impairments.hpp"
#include "ncsync/ofdm.hpp"
#include "ncsync/scenario.hpp"
#include "ncsync/sync.hpp"

namespace ncsync::harness {

inline constexpr const char* kVersion = "0.1.0";

/// Seed for one trial of one grid cell; distinct (cell, trial) tuples give
/// unrelated generator streams.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell_a, std::uint64_t cell_b,
                                std::uint64_t trial) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(master), hi(master), lo(cell_a), hi(cell_a), lo(cell_b), hi(cell_b), lo(trial), hi(trial)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

/// Runs body(i) for i in [0, count) on up to `threads` workers.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

/// Everything one trial produces before detection.
struct TrialSignal {
    TimeSignal received;
    impair::ChannelRealization channel;
    std::vector<std::uint8_t> preamble_bits;
    double nu = 0.0;
};

inline TrialSignal simulate_trial(const Scenario& s, const ofdm::FrameSpec& spec, const impair::NbiSpec& nbi_base,
                                  double snr_db, double sir_db, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TrialSignal out;

    ofdm::QpskStream preamble_src(rng());
    ofdm::SymbolGrid grid(spec.map, spec.n_symbols);
    grid.set_column(0, ofdm::generate_preamble(spec.map, preamble_src));
    out.preamble_bits = preamble_src.bits();
    ofdm::QpskStream data_src(rng());
    for (std::size_t p = 1; p < spec.n_symbols; ++p)
        for (int k : spec.map.occupied()) grid.set(p, k, data_src());
    const TimeSignal frame = ofdm::build_frame(grid, spec);

    out.channel = s.channel == ChannelModel::flat ? impair::ChannelRealization::flat()
                                                  : impair::draw_channel_cost207tu(rng, s.sample_rate_hz());
    const TimeSignal y = impair::apply_multipath(frame, out.channel);

    impair::NbiSpec nbi = nbi_base;
    nbi.sc_spacing_hz = s.sc_spacing_hz;
    nbi.freq_offset_hz = std::uniform_real_distribution<double>(s.nbi_offset_min_hz, s.nbi_offset_max_hz)(rng);
    nbi.phase0 = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
    const TimeSignal interferer = impair::gen_nbi(nbi, y.size(), spec.n_fft(), rng);

    out.nu = std::uniform_real_distribution<double>(s.cfo_min_hz, s.cfo_max_hz)(rng) / s.sc_spacing_hz;
    const impair::MixSpec mix{snr_db, sir_db, out.nu, rng()};
    out.received = impair::calibrate_and_mix(y, interferer, mix, spec.n_fft(), spec.active_region()).received;
    return out;
}

/// Detect, classify and count preamble bit errors for one algorithm.
inline eval::TrialOutcome evaluate_trial(const TrialSignal& t, const ofdm::FrameSpec& spec, sync::Algorithm algorithm,
                                         sync::TimingRule rule) {
    const auto trace = sync::compute_trace(t.received, spec.n_fft(), algorithm);
    const auto result = sync::detect(trace, algorithm, rule);
    auto outcome = eval::classify(result, {0, t.nu}, spec.n_cp);
    const auto ber = eval::ber_preamble(t.received, result, t.channel, t.preamble_bits, spec.map);
    outcome.bit_errors = ber.bit_errors;
    outcome.bits_total = ber.bits_total;
    return outcome;
}

struct CellResult {
    double snr_db = 0.0;
    double sir_db = 0.0;
    double bandwidth_hz = 0.0;  // only set by the bandwidth sweep
    sync::Algorithm algorithm = sync::Algorithm::sc;
    impair::NbiKind nbi_kind = impair::NbiKind::ideal_tone;
    eval::Summary summary;
};

struct RunOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
};

namespace detail {

// All algorithms see the same frames within a cell; outcomes are reduced in
// trial order so the thread count never changes the numbers.
inline std::vector<eval::Accumulator> run_cell(const Scenario& s, const ofdm::FrameSpec& spec,
                                               const impair::NbiSpec& nbi, double snr_db, double sir_db,
                                               std::uint64_t cell_a, std::uint64_t cell_b, const RunOptions& opt) {
    const std::size_t n_alg = s.algorithms.size();
    std::vector<eval::TrialOutcome> outcomes(s.n_trials * n_alg);
    parallel_for(s.n_trials, opt.threads, [&](std::size_t trial) {
        const auto sig = simulate_trial(s, spec, nbi, snr_db, sir_db, trial_seed(s.master_seed, cell_a, cell_b, trial));
        for (std::size_t a = 0; a < n_alg; ++a)
            outcomes[trial * n_alg + a] = evaluate_trial(sig, spec, s.algorithms[a], s.timing_rule);
    });
    std::vector<eval::Accumulator> acc(n_alg);
    for (std::size_t trial = 0; trial < s.n_trials; ++trial)
        for (std::size_t a = 0; a < n_alg; ++a) acc[a].add(outcomes[trial * n_alg + a]);
    return acc;
}

}  // namespace detail

/// Every (snr, sir) cell of the scenario grid, one row per algorithm.
inline std::vector<CellResult> run_scenario(const Scenario& s, const RunOptions& opt = {}) {
    s.validate();
    const auto spec = s.frame_spec();
    std::vector<CellResult> rows;
    for (std::size_t i = 0; i < s.snr_grid.size(); ++i) {
        for (std::size_t j = 0; j < s.sir_grid.size(); ++j) {
            const auto acc = detail::run_cell(s, spec, s.nbi, s.snr_grid[i], s.sir_grid[j], i, j, opt);
            for (std::size_t a = 0; a < s.algorithms.size(); ++a)
                rows.push_back({s.snr_grid[i], s.sir_grid[j], 0.0, s.algorithms[a], s.nbi.kind, acc[a].summary()});
        }
    }
    return rows;
}

/// FM interferer of each Carson bandwidth (1 kHz message by default), at the
/// first SNR of the grid and every SIR.
inline std::vector<CellResult> run_nbi_bandwidth_sweep(const Scenario& s, const RunOptions& opt = {}) {
    s.validate();
    if (s.bandwidths_hz.empty()) throw ConfigError("[grid] bandwidths_hz: sweep needs at least one bandwidth");
    const auto spec = s.frame_spec();
    const double snr_db = s.snr_grid.front();
    std::vector<CellResult> rows;
    for (std::size_t b = 0; b < s.bandwidths_hz.size(); ++b) {
        impair::NbiSpec nbi = s.nbi;
        nbi.kind = impair::NbiKind::fm_carson;
        nbi.deviation_hz = impair::carson_deviation(s.bandwidths_hz[b], nbi.message_hz);
        for (std::size_t j = 0; j < s.sir_grid.size(); ++j) {
            const auto acc = detail::run_cell(s, spec, nbi, snr_db, s.sir_grid[j], 1000 + b, j, opt);
            for (std::size_t a = 0; a < s.algorithms.size(); ++a)
                rows.push_back({snr_db, s.sir_grid[j], s.bandwidths_hz[b], s.algorithms[a], nbi.kind, acc[a].summary()});
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Metric traces

/// Full NIRS trace (both metrics) of trial `trial` in cell (snr, sir).
inline sync::MetricTrace emit_trace(const Scenario& s, double snr_db, double sir_db, std::uint64_t trial = 0) {
    const auto spec = s.frame_spec();
    const auto sig = simulate_trial(s, spec, s.nbi, snr_db, sir_db, trial_seed(s.master_seed, 2000, 2000, trial));
    return sync::compute_trace(sig.received, spec.n_fft(), sync::Algorithm::nirs);
}

struct PercentileTrace {
    std::int64_t n_first = 0;
    // [index][0..2] = 10th, 50th, 90th percentile
    std::vector<std::array<double, 3>> sc;
    std::vector<std::array<double, 3>> nirs;
};

/// Per-index 10/50/90th percentiles of both metrics over `n_trials` frames,
/// restricted to frame indices [n_lo, n_hi] (clipped to the search window).
inline PercentileTrace emit_percentile_trace(const Scenario& s, double snr_db, double sir_db, std::size_t n_trials,
                                             std::int64_t n_lo, std::int64_t n_hi, const RunOptions& opt = {}) {
    if (n_trials == 0) throw std::invalid_argument("percentile trace needs at least one trial");
    const auto spec = s.frame_spec();
    // every trial has the same buffer length, so one probe fixes the window
    const auto probe = simulate_trial(s, spec, s.nbi, snr_db, sir_db, 0);
    const auto [lo_w, hi_w] = sync::search_window(probe.received, spec.n_fft());
    const std::int64_t lo = std::max(n_lo, lo_w);
    const std::int64_t hi = std::min(n_hi, hi_w);
    if (hi < lo) throw std::invalid_argument("requested index range does not intersect the search window");
    const auto width = static_cast<std::size_t>(hi - lo + 1);

    std::vector<float> sc(width * n_trials), nirs(width * n_trials);
    parallel_for(n_trials, opt.threads, [&](std::size_t trial) {
        const auto sig =
            simulate_trial(s, spec, s.nbi, snr_db, sir_db, trial_seed(s.master_seed, 3000, 3000, trial));
        const auto t = sync::compute_trace(sig.received, spec.n_fft(), sync::Algorithm::nirs, lo, hi);
        for (std::size_t i = 0; i < width; ++i) {
            sc[i * n_trials + trial] = static_cast<float>(t.metric_sc[i]);
            nirs[i * n_trials + trial] = static_cast<float>(t.metric_nirs[i]);
        }
    });

    auto pct = [n_trials](std::vector<float>& v, std::size_t i) {
        const auto first = v.begin() + static_cast<std::ptrdiff_t>(i * n_trials);
        std::array<double, 3> out{};
        const double q[3] = {0.1, 0.5, 0.9};
        for (int j = 0; j < 3; ++j) {
            const auto k = static_cast<std::ptrdiff_t>(std::llround(q[j] * static_cast<double>(n_trials - 1)));
            std::nth_element(first, first + k, first + static_cast<std::ptrdiff_t>(n_trials));
            out[j] = first[k];
        }
        return out;
    };
    PercentileTrace out;
    out.n_first = lo;
    for (std::size_t i = 0; i < width; ++i) {
        out.sc.push_back(pct(sc, i));
        out.nirs.push_back(pct(nirs, i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {
inline std::ostream& num(std::ostream& os) { return os << std::setprecision(10); }
inline std::string fmt_db(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss << std::setprecision(10) << v;
    return ss.str();
}
}  // namespace detail

/// snr_db, sir_db, algorithm, nbi_kind, p_sync_error, ci_halfwidth, mse_time, mse_freq, ber, n_trials
inline void write_results_csv(std::ostream& os, const std::vector<CellResult>& rows) {
    os << "snr_db,sir_db,algorithm,nbi_kind,p_sync_error,ci_halfwidth,mse_time,mse_freq,ber,n_trials\n";
    detail::num(os);
    for (const auto& r : rows)
        os << detail::fmt_db(r.snr_db) << ',' << detail::fmt_db(r.sir_db) << ',' << sync::to_string(r.algorithm) << ','
           << impair::to_string(r.nbi_kind) << ',' << r.summary.p_sync_error << ',' << r.summary.ci_halfwidth << ','
           << r.summary.mse_time << ',' << r.summary.mse_freq << ',' << r.summary.ber << ',' << r.summary.n_trials
           << '\n';
}

/// bandwidth_hz, sir_db, algorithm, p_sync_error, ci_halfwidth
inline void write_bandwidth_csv(std::ostream& os, const std::vector<CellResult>& rows) {
    os << "bandwidth_hz,sir_db,algorithm,p_sync_error,ci_halfwidth\n";
    detail::num(os);
    for (const auto& r : rows)
        os << r.bandwidth_hz << ',' << detail::fmt_db(r.sir_db) << ',' << sync::to_string(r.algorithm) << ','
           << r.summary.p_sync_error << ',' << r.summary.ci_halfwidth << '\n';
}

inline void write_percentile_csv(std::ostream& os, const PercentileTrace& p) {
    os << "n,sc_p10,sc_p50,sc_p90,nirs_p10,nirs_p50,nirs_p90\n";
    detail::num(os);
    for (std::size_t i = 0; i < p.sc.size(); ++i)
        os << p.n_first + static_cast<std::int64_t>(i) << ',' << p.sc[i][0] << ',' << p.sc[i][1] << ',' << p.sc[i][2]
           << ',' << p.nirs[i][0] << ',' << p.nirs[i][1] << ',' << p.nirs[i][2] << '\n';
}

struct CrossPowerRow {
    int notch_scs = 0;
    double sir_db = 0.0;
    appendix::TimingPosition timing = appendix::TimingPosition::optimal;
    appendix::RatioEstimate estimate;
};

/// notch_scs, sir_db, timing, ratio, ci_low, ci_high
inline void write_cross_power_csv(std::ostream& os, const std::vector<CrossPowerRow>& rows) {
    os << "notch_scs,sir_db,timing,ratio,ci_low,ci_high\n";
    detail::num(os);
    for (const auto& r : rows)
        os << r.notch_scs << ',' << detail::fmt_db(r.sir_db) << ',' << appendix::to_string(r.timing) << ','
           << r.estimate.ratio << ',' << r.estimate.ci_low << ',' << r.estimate.ci_high << '\n';
}

}  // namespace ncsync::harness
