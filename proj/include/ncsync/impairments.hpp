#pragma once

// Receiver-input impairments: quasi-static multipath, CFO, narrowband
// interference and AWGN, mixed at calibrated SIR/SNR.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ncsync/types.hpp"

namespace ncsync::impair {

struct ChannelRealization {
    cvec taps;  // h(l) at integer sample delays l = 0..L-1

    [[nodiscard]] std::size_t length() const { return taps.size(); }
    static ChannelRealization flat() { return {cvec{cplx{1.0, 0.0}}}; }
};

/// y(n) = sum_l x(n-l) h(l); output grows by L-1 samples, origin unchanged.
inline TimeSignal apply_multipath(const TimeSignal& x, const ChannelRealization& ch) {
    if (ch.taps.empty()) throw std::invalid_argument("channel must have at least one tap");
    TimeSignal y;
    y.origin = x.origin;
    if (x.samples.empty()) return y;
    y.samples.assign(x.size() + ch.length() - 1, cplx{});
    for (std::size_t l = 0; l < ch.length(); ++l) {
        const cplx h = ch.taps[l];
        if (h == cplx{}) continue;
        for (std::size_t i = 0; i < x.size(); ++i) y.samples[i + l] += x.samples[i] * h;
    }
    return y;
}

/// Multiplies frame-index sample n by e^{j2pi nu n / N}.
inline TimeSignal apply_cfo(const TimeSignal& x, double nu, std::size_t n_fft) {
    TimeSignal out = x;
    const double n_f = static_cast<double>(n_fft);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double n = static_cast<double>(static_cast<std::int64_t>(i) - x.origin);
        // reduce nu*n modulo N before scaling so whole-cycle ramps stay exact
        const double turns = std::fmod(nu * n, n_f) / n_f;
        out.samples[i] *= std::polar(1.0, 2.0 * kPi * turns);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Narrowband interference

enum class NbiKind { ideal_tone, fm_wideband, fm_carson };

inline std::string_view to_string(NbiKind k) {
    switch (k) {
        case NbiKind::ideal_tone: return "ideal_tone";
        case NbiKind::fm_wideband: return "fm_wideband";
        case NbiKind::fm_carson: return "fm_carson";
    }
    return "unknown";
}

inline NbiKind parse_nbi_kind(std::string_view s) {
    if (s == "ideal_tone") return NbiKind::ideal_tone;
    if (s == "fm_wideband") return NbiKind::fm_wideband;
    if (s == "fm_carson") return NbiKind::fm_carson;
    throw std::invalid_argument("unknown NBI kind '" + std::string(s) + "'");
}

/// Frequency deviation giving Carson bandwidth B = 2(deviation + message).
inline double carson_deviation(double bandwidth_hz, double message_hz) {
    if (message_hz <= 0.0) throw std::invalid_argument("FM message frequency must be positive");
    if (bandwidth_hz <= 2.0 * message_hz)
        throw std::invalid_argument("Carson bandwidth must exceed twice the message frequency");
    return bandwidth_hz / 2.0 - message_hz;
}

inline double carson_bandwidth(double deviation_hz, double message_hz) { return 2.0 * (deviation_hz + message_hz); }

/// Constant-envelope interferer.
///
/// ideal_tone:  e^{j(2pi f n/N + phase0)}
/// fm_carson:   tone plus single-tone FM, deviation_hz around the carrier at message_hz
/// fm_wideband: fm_carson with deviation chosen so the Carson bandwidth equals bandwidth_hz
///              (surrogate for a wireless-microphone signal)
/// f = frequency + freq_offset_hz / sc_spacing_hz, in subcarrier spacings.
struct NbiSpec {
    NbiKind kind = NbiKind::ideal_tone;
    double frequency = 24.5;
    double phase0 = 0.0;
    double freq_offset_hz = 0.0;
    double sc_spacing_hz = 15e3;
    double bandwidth_hz = 200e3;
    double message_hz = 1e3;
    double deviation_hz = 0.0;

    [[nodiscard]] double normalized_frequency() const { return frequency + freq_offset_hz / sc_spacing_hz; }

    [[nodiscard]] double effective_deviation_hz() const {
        switch (kind) {
            case NbiKind::ideal_tone: return 0.0;
            case NbiKind::fm_wideband: return carson_deviation(bandwidth_hz, message_hz);
            case NbiKind::fm_carson: return deviation_hz;
        }
        return 0.0;
    }
};

/// Unit-magnitude interferer of `length` samples, referenced to sample 0.
/// FM kinds draw their message phase from `rng`.
template <typename Rng>
TimeSignal gen_nbi(const NbiSpec& spec, std::size_t length, std::size_t n_fft, Rng& rng) {
    if (length == 0) throw std::invalid_argument("NBI length must be positive");
    if (spec.sc_spacing_hz <= 0.0) throw std::invalid_argument("subcarrier spacing must be positive");
    const double f = spec.normalized_frequency();
    const double n_f = static_cast<double>(n_fft);

    double beta = 0.0;
    double omega = 0.0;
    double theta = 0.0;
    if (spec.kind != NbiKind::ideal_tone) {
        const double dev = spec.effective_deviation_hz();
        if (!(dev > 0.0)) throw std::invalid_argument("FM deviation must be positive");
        if (spec.message_hz <= 0.0) throw std::invalid_argument("FM message frequency must be positive");
        const double fs = n_f * spec.sc_spacing_hz;
        beta = dev / spec.message_hz;
        omega = 2.0 * kPi * spec.message_hz / fs;
        theta = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
    }

    TimeSignal out;
    out.samples.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double n = static_cast<double>(i);
        double phase = 2.0 * kPi * (std::fmod(f * n, n_f) / n_f) + spec.phase0;
        if (beta != 0.0) phase += beta * std::sin(omega * n + theta);
        out.samples[i] = std::polar(1.0, phase);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibrated mixing

inline constexpr double kInfDb = std::numeric_limits<double>::infinity();

struct MixSpec {
    double snr_db = kInfDb;
    double sir_db = kInfDb;
    double cfo_norm = 0.0;  // nu, in subcarrier spacings
    std::uint64_t seed = 0;
};

/// Output of calibrate_and_mix; components are kept for measurement.
struct MixedSignal {
    TimeSignal received;  // r(n)
    cvec interference;    // scaled NBI, aligned with received.samples
    cvec noise;           // AWGN, aligned with received.samples
    double signal_power = 0.0;
};

/// r(n) = y(n) e^{j2pi nu n/N} + sigma_i i(n) + w(n).
///
/// Signal power is measured on `active_region` of y only; interference and
/// noise cover the whole buffer, empty prefix included.
inline MixedSignal calibrate_and_mix(const TimeSignal& y, const TimeSignal& nbi, const MixSpec& mix, std::size_t n_fft,
                                     IndexRange active_region) {
    if (std::abs(mix.cfo_norm) >= 1.0) throw std::invalid_argument("|cfo| must be below one subcarrier spacing");
    if (active_region.end > y.size() || active_region.empty())
        throw std::invalid_argument("active region must be a non-empty range inside the signal");
    const double ps = mean_power(y.samples, active_region);
    if (!(ps > 0.0)) throw std::invalid_argument("signal power over the active region is zero");

    MixedSignal out;
    out.signal_power = ps;
    out.received = apply_cfo(y, mix.cfo_norm, n_fft);
    const std::size_t len = y.size();
    out.interference.assign(len, cplx{});
    out.noise.assign(len, cplx{});

    if (std::isnan(mix.sir_db) || std::isnan(mix.snr_db) || mix.sir_db == -kInfDb || mix.snr_db == -kInfDb)
        throw std::invalid_argument("SIR/SNR must be finite or +inf");
    if (mix.sir_db != kInfDb) {
        if (nbi.size() < len) throw std::invalid_argument("NBI shorter than the signal");
        const double amp = std::sqrt(ps / db_to_linear(mix.sir_db));
        for (std::size_t i = 0; i < len; ++i) out.interference[i] = amp * nbi.samples[i];
    }
    if (mix.snr_db != kInfDb) {
        std::mt19937_64 rng(mix.seed);
        const double sigma = std::sqrt(ps / db_to_linear(mix.snr_db) / 2.0);
        std::normal_distribution<double> gauss(0.0, sigma);
        for (auto& w : out.noise) w = {gauss(rng), gauss(rng)};
    }
    for (std::size_t i = 0; i < len; ++i) out.received.samples[i] += out.interference[i] + out.noise[i];
    return out;
}

// ---------------------------------------------------------------------------
// COST 207 Typical Urban, 6 paths

struct PathProfile {
    double delay_us;
    double power_db;
};

inline constexpr std::array<PathProfile, 6> kCost207TypicalUrban{{
    {0.0, -3.0},
    {0.2, 0.0},
    {0.5, -2.0},
    {1.6, -6.0},
    {2.3, -8.0},
    {5.0, -10.0},
}};

/// Tap delay of each path in samples, rounded to the sample grid.
inline std::array<std::size_t, 6> cost207tu_delays(double sample_rate_hz) {
    std::array<std::size_t, 6> d{};
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = static_cast<std::size_t>(std::llround(kCost207TypicalUrban[i].delay_us * 1e-6 * sample_rate_hz));
    return d;
}

/// Mean tap powers normalized to unit sum.
inline std::array<double, 6> cost207tu_powers() {
    std::array<double, 6> p{};
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = db_to_linear(kCost207TypicalUrban[i].power_db);
    for (auto& v : p) v /= total;
    return p;
}

/// One quasi-static Rayleigh realization of the TU profile.
template <typename Rng>
ChannelRealization draw_channel_cost207tu(Rng& rng, double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
    const auto delays = cost207tu_delays(sample_rate_hz);
    const auto powers = cost207tu_powers();
    ChannelRealization ch;
    ch.taps.assign(*std::max_element(delays.begin(), delays.end()) + 1, cplx{});
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const double s = std::sqrt(powers[i] / 2.0);
        ch.taps[delays[i]] += cplx{s * gauss(rng), s * gauss(rng)};
    }
    return ch;
}

}  // namespace ncsync::impair
