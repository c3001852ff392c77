#pragma once

// Cross-term analysis of the autocorrelation under an ideal tone interferer:
// the phase-rotated partial DFT b(n) in direct and closed form, the exact
// G/Q decompositions, and the relative power of the neglected G cross term
// as a function of the spectral notch around the interferer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ncsync/impairments.hpp"
#include "ncsync/ofdm.hpp"
#include "ncsync/types.hpp"

namespace ncsync::appendix {

/// sum_{m=0}^{N/2-1} y(n+m) e^{-j2pi (f-nu)(n+m)/N}
inline cplx b_direct(const TimeSignal& y, double f, double nu, std::int64_t n, std::size_t n_fft) {
    const auto half = static_cast<std::int64_t>(n_fft / 2);
    if (!y.contains(n) || !y.contains(n + half - 1)) throw std::out_of_range("b(n) window outside the signal");
    const double n_f = static_cast<double>(n_fft);
    cplx acc{};
    for (std::int64_t m = 0; m < half; ++m) {
        const double t = static_cast<double>(n + m);
        acc += y.at(n + m) * std::polar(1.0, -2.0 * kPi * (f - nu) * t / n_f);
    }
    return acc;
}

enum class WindowCase { leading_edge, inside, trailing_edge };

/// Which part of symbol 0 the N/2 window starting at n overlaps.
inline WindowCase classify_window(std::int64_t n, std::size_t n_fft, std::size_t n_cp) {
    const auto N = static_cast<std::int64_t>(n_fft);
    const auto cp = static_cast<std::int64_t>(n_cp);
    if (n >= -N / 2 - cp + 1 && n <= -cp - 1) return WindowCase::leading_edge;
    if (n >= -cp && n <= N / 2) return WindowCase::inside;
    if (n >= N / 2 + 1 && n <= N - 1) return WindowCase::trailing_edge;
    throw std::invalid_argument("window at n=" + std::to_string(n) + " does not overlap symbol 0");
}

/// b(n) of symbol 0 alone on a flat channel, evaluated per subcarrier as
/// sin(pi*len*delta/N) / (e^{-j pi delta c} sin(pi delta/N)), delta = k - f + nu,
/// with len the overlap length and c the case's phase centre. Where delta is
/// a multiple of N the ratio is replaced by its limit, len.
inline cplx b_closed_form(std::span<const cplx> column, double f, double nu, std::int64_t n,
                          const ofdm::FrameSpec& spec) {
    const std::size_t n_fft = spec.n_fft();
    if (column.size() != n_fft) throw std::invalid_argument("column length must equal n_fft");
    const double N = static_cast<double>(n_fft);
    const double cp = static_cast<double>(spec.n_cp);
    const double nd = static_cast<double>(n);

    double len = 0.0;
    double centre = 0.0;
    switch (classify_window(n, n_fft, spec.n_cp)) {
        case WindowCase::leading_edge:
            len = cp + nd + N / 2.0;
            centre = (nd - cp - 1.0) / N + 0.5;
            break;
        case WindowCase::inside:
            len = N / 2.0;
            centre = (2.0 * nd - 1.0) / N + 0.5;
            break;
        case WindowCase::trailing_edge:
            len = N - nd;
            centre = (nd + N - 1.0) / N;
            break;
    }

    const double scale = 1.0 / std::sqrt(N);
    const int half = static_cast<int>(n_fft / 2);
    cplx acc{};
    for (int k = -half; k < half; ++k) {
        const cplx d = column[static_cast<std::size_t>(k + half)];
        if (d == cplx{}) continue;
        const double delta = static_cast<double>(k) - f + nu;
        const double cycles = delta / N;
        if (cycles == std::round(cycles)) {
            // every rotation factor is 1
            acc += d * scale * len;
            continue;
        }
        const cplx ratio = std::polar(1.0, kPi * delta * centre) * (std::sin(kPi * len * delta / N) /
                                                                    std::sin(kPi * delta / N));
        acc += d * scale * ratio;
    }
    return acc;
}

/// b(n) of symbol 0 alone, zero where the window misses the symbol.
inline cplx b_symbol0(std::span<const cplx> column, double f, double nu, std::int64_t n, const ofdm::FrameSpec& spec) {
    const auto N = static_cast<std::int64_t>(spec.n_fft());
    const auto cp = static_cast<std::int64_t>(spec.n_cp);
    if (n < -N / 2 - cp + 1 || n > N - 1) return {};
    return b_closed_form(column, f, nu, n, spec);
}

/// b(n) of symbol 0 through an L-tap channel: each path contributes
/// h(l) e^{-j2pi (f-nu) l/N} b_flat(n-l).
inline cplx b_multipath(std::span<const cplx> column, const impair::ChannelRealization& ch, double f, double nu,
                        std::int64_t n, const ofdm::FrameSpec& spec) {
    const double N = static_cast<double>(spec.n_fft());
    cplx acc{};
    for (std::size_t l = 0; l < ch.length(); ++l) {
        if (ch.taps[l] == cplx{}) continue;
        const auto li = static_cast<std::int64_t>(l);
        acc += ch.taps[l] * std::polar(1.0, -2.0 * kPi * (f - nu) * static_cast<double>(l) / N) *
               b_symbol0(column, f, nu, n - li, spec);
    }
    return acc;
}

/// sqrt(sigma_i^2) e^{j(2pi f n/N + phase)}, n in frame time.
struct Tone {
    double amplitude = 1.0;
    double f = 0.0;
    double phase = 0.0;

    [[nodiscard]] cplx at(std::int64_t n, std::size_t n_fft) const {
        const double N = static_cast<double>(n_fft);
        return std::polar(amplitude, 2.0 * kPi * (std::fmod(f * static_cast<double>(n), N) / N) + phase);
    }
};

/// r(n) = y(n) e^{j2pi nu n/N} + tone(n), noiseless.
inline TimeSignal compose_received(const TimeSignal& y, const Tone& tone, double nu, std::size_t n_fft) {
    TimeSignal r = impair::apply_cfo(y, nu, n_fft);
    for (std::size_t i = 0; i < r.size(); ++i)
        r.samples[i] += tone.at(static_cast<std::int64_t>(i) - r.origin, n_fft);
    return r;
}

struct DecompositionRecord {
    cplx g_y, g_i, g_cross;
    cplx q_i, q_y, q_cross;

    [[nodiscard]] cplx g() const { return g_y + g_i + g_cross; }
    [[nodiscard]] cplx q() const { return q_i + q_y + q_cross; }
};

/// Splits G(n) and Q(n) of compose_received(y, tone, nu) into signal,
/// interference and cross parts; the cross parts go through b(n).
inline DecompositionRecord decompose(const TimeSignal& y, const Tone& tone, double nu, std::int64_t n,
                                     std::size_t n_fft) {
    const auto N = static_cast<std::int64_t>(n_fft);
    const std::int64_t h = N / 2;
    const std::int64_t q4 = N / 4;
    const double s = tone.amplitude;
    const double s2 = s * s;
    const double f = tone.f;
    const cplx ph = std::polar(1.0, tone.phase);

    DecompositionRecord d{};
    cplx sy{};
    for (std::int64_t m = 0; m < h; ++m) sy += std::conj(y.at(n + m)) * y.at(n + m + h);
    d.g_y = std::polar(1.0, kPi * nu) * sy;
    d.g_i = static_cast<double>(h) * s2 * std::polar(1.0, kPi * f);

    const cplx b0 = b_direct(y, f, nu, n, n_fft);
    const cplx b4 = b_direct(y, f, nu, n + q4, n_fft);
    const cplx b2 = b_direct(y, f, nu, n + h, n_fft);
    d.g_cross = s * std::polar(1.0, kPi * f) * (ph * std::conj(b0) + std::conj(ph) * b2);

    cplx qy{};
    for (std::int64_t m = 0; m < q4; ++m)
        qy += std::conj(y.at(n + m)) * y.at(n + m + q4) + 2.0 * std::conj(y.at(n + m + q4)) * y.at(n + m + h) +
              std::conj(y.at(n + m + h)) * y.at(n + m + 3 * q4);
    d.q_y = 0.5 * std::polar(1.0, kPi * nu / 2.0) * qy;
    d.q_i = static_cast<double>(h) * s2 * std::polar(1.0, kPi * f / 2.0);
    d.q_cross = 0.5 * s * std::polar(1.0, kPi * f / 2.0) *
                (std::conj(b0) * ph + b4 * std::conj(ph) + std::conj(b4) * ph + b2 * std::conj(ph));
    return d;
}

// ---------------------------------------------------------------------------
// Relative power of G_cross vs notch width

enum class TimingPosition { optimal, random_data };

inline std::string_view to_string(TimingPosition t) { return t == TimingPosition::optimal ? "optimal" : "random_data"; }

/// Removes every subcarrier within width/2 of `centre` from `base`.
inline ofdm::SubcarrierMap notched_map(const ofdm::SubcarrierMap& base, double centre, int width) {
    std::vector<int> kept;
    for (int k : base.occupied())
        if (!(std::abs(static_cast<double>(k) - centre) < width / 2.0)) kept.push_back(k);
    return {base.n_fft(), std::move(kept)};
}

struct CrossPowerConfig {
    std::size_t n_fft = 256;
    std::size_t n_cp = 32;
    std::size_t n_symbols = 11;
    double nbi_frequency = 24.5;
    double max_cfo = 0.7;  // |nu| bound, subcarrier spacings
    std::vector<int> base_occupied = ofdm::index_ranges({{-100, -1}, {1, 100}});
    std::size_t bootstrap_resamples = 400;
    double confidence = 0.99;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct RatioEstimate {
    double ratio = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Monte-Carlo E|G_cross|^2 / (E|G_y|^2 + E|G_i|^2) on a flat channel with
/// random QPSK frames, random CFO and tone phase, and a notch of
/// `notch_width` subcarriers centred on the tone. Percentile bootstrap CI.
inline RatioEstimate relative_cross_power(int notch_width, double sir_db, TimingPosition timing, std::size_t n_trials,
                                          const CrossPowerConfig& cfg = {}) {
    if (n_trials == 0) throw std::invalid_argument("need at least one trial");
    if (std::isinf(sir_db) && sir_db > 0.0) return {};

    const ofdm::SubcarrierMap base(cfg.n_fft, cfg.base_occupied);
    const ofdm::FrameSpec spec(notched_map(base, cfg.nbi_frequency, notch_width), cfg.n_cp, cfg.n_symbols, 0);
    const auto sym_len = static_cast<std::int64_t>(spec.symbol_length());
    const auto cp = static_cast<std::int64_t>(cfg.n_cp);
    const auto N = static_cast<std::int64_t>(cfg.n_fft);

    std::mt19937_64 rng(cfg.seed ^ (static_cast<std::uint64_t>(notch_width) * 0x100000001b3ULL) ^
                        static_cast<std::uint64_t>(timing == TimingPosition::optimal ? 1 : 2));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> cross(n_trials), signal(n_trials), interf(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t) {
        ofdm::SymbolGrid grid(spec.map, spec.n_symbols);
        ofdm::QpskStream qpsk(rng());
        grid.set_column(0, ofdm::generate_preamble(spec.map, qpsk));
        for (std::size_t p = 1; p < spec.n_symbols; ++p)
            for (int k : spec.map.occupied()) grid.set(p, k, qpsk());
        const TimeSignal y = ofdm::build_frame(grid, spec);

        const double nu = cfg.max_cfo * (2.0 * unit(rng) - 1.0);
        const double ps = mean_power(y.samples, spec.active_region());
        const Tone tone{std::sqrt(ps / db_to_linear(sir_db)), cfg.nbi_frequency, 2.0 * kPi * unit(rng)};

        std::int64_t n = 0;
        if (timing == TimingPosition::optimal) {
            n = -cp + static_cast<std::int64_t>(unit(rng) * static_cast<double>(cp + 1));
        } else {
            const auto p_max = static_cast<std::int64_t>(spec.n_symbols) - 2;
            if (p_max < 1) throw std::invalid_argument("random_data timing needs at least 3 symbols");
            const std::int64_t p = 1 + static_cast<std::int64_t>(unit(rng) * static_cast<double>(p_max));
            const std::int64_t u = -cp + static_cast<std::int64_t>(unit(rng) * static_cast<double>(N + cp));
            n = p * sym_len + u;
        }
        const auto rec = decompose(y, tone, nu, n, cfg.n_fft);
        cross[t] = std::norm(rec.g_cross);
        signal[t] = std::norm(rec.g_y);
        interf[t] = std::norm(rec.g_i);
    }

    auto ratio_of = [&](auto&& index) {
        double c = 0.0, s = 0.0, i = 0.0;
        for (std::size_t t = 0; t < n_trials; ++t) {
            const std::size_t j = index(t);
            c += cross[j];
            s += signal[j];
            i += interf[j];
        }
        const double den = s + i;
        return den > 0.0 ? c / den : 0.0;
    };

    RatioEstimate est;
    est.ratio = ratio_of([](std::size_t t) { return t; });
    std::vector<double> boot(cfg.bootstrap_resamples);
    std::uniform_int_distribution<std::size_t> pick(0, n_trials - 1);
    for (auto& b : boot) {
        std::vector<std::size_t> idx(n_trials);
        for (auto& v : idx) v = pick(rng);
        b = ratio_of([&](std::size_t t) { return idx[t]; });
    }
    std::sort(boot.begin(), boot.end());
    if (!boot.empty()) {
        const double tail = (1.0 - cfg.confidence) / 2.0;
        const auto last = static_cast<double>(boot.size() - 1);
        est.ci_low = boot[static_cast<std::size_t>(std::floor(tail * last))];
        est.ci_high = boot[static_cast<std::size_t>(std::ceil((1.0 - tail) * last))];
    } else {
        est.ci_low = est.ci_high = est.ratio;
    }
    return est;
}

}  // namespace ncsync::appendix
