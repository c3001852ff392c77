#pragma once

// Per-trial error classification, preamble BER under perfect-CSI
// zero-forcing, and aggregate statistics.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ncsync/dft.hpp"
#include "ncsync/impairments.hpp"
#include "ncsync/ofdm.hpp"
#include "ncsync/sync.hpp"
#include "ncsync/types.hpp"

namespace ncsync::eval {

inline constexpr double kMaxCfoError = 0.5;  // subcarrier spacings

struct TrialOutcome {
    std::int64_t timing_error = 0;
    double cfo_error = 0.0;
    bool is_sync_error = false;
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_total = 0;
};

struct Truth {
    std::int64_t origin = 0;  // true frame start, frame index
    double nu = 0.0;
};

/// Gross error when |timing error| > N_CP or |CFO error| > 0.5 (both strict).
inline TrialOutcome classify(const sync::SyncResult& result, const Truth& truth, std::size_t n_cp) {
    TrialOutcome out;
    out.timing_error = result.n_hat - truth.origin;
    out.cfo_error = result.nu_hat - truth.nu;
    out.is_sync_error = std::llabs(out.timing_error) > static_cast<long long>(n_cp) ||
                        std::abs(out.cfo_error) > kMaxCfoError;
    return out;
}

struct BerCount {
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_total = 0;
    std::size_t skipped_bins = 0;  // bins where H vanishes (relative to sum |h|)
};

/// H_k = sum_l h(l) e^{-j2pi lk/N}
inline cplx channel_response(const impair::ChannelRealization& ch, int k, std::size_t n_fft) {
    cplx h{};
    for (std::size_t l = 0; l < ch.length(); ++l)
        h += ch.taps[l] * std::polar(1.0, -2.0 * kPi * static_cast<double>(l) * k / static_cast<double>(n_fft));
    return h;
}

/// Demodulate the preamble at the estimated timing and CFO and count errors.
///
/// The estimated CFO ramp is removed, the DFT window starts at n_hat, and each
/// even occupied bin is divided by H_k e^{j2pi k n_hat/N}: the true channel
/// plus the linear phase a window offset of n_hat produces.
/// `preamble_bits` holds two bits per even occupied subcarrier, ascending k.
inline BerCount ber_preamble(const TimeSignal& received, const sync::SyncResult& sync_result,
                             const impair::ChannelRealization& channel, std::span<const std::uint8_t> preamble_bits,
                             const ofdm::SubcarrierMap& map) {
    const std::size_t n = map.n_fft();
    const auto even = map.even_occupied();
    if (preamble_bits.size() != 2 * even.size())
        throw std::invalid_argument("preamble bit count does not match the even occupied subcarriers");

    cvec window(n);
    for (std::size_t m = 0; m < n; ++m) {
        const std::int64_t idx = sync_result.n_hat + static_cast<std::int64_t>(m);
        window[m] = received.at(idx);
    }
    TimeSignal w{window, -sync_result.n_hat};
    w = impair::apply_cfo(w, -sync_result.nu_hat, n);
    cvec spectrum(n);
    dft_for(n).forward(w.samples, spectrum);

    double tap_sum = 0.0;
    for (const auto& t : channel.taps) tap_sum += std::abs(t);
    const double floor = 1e-12 * tap_sum;

    BerCount out;
    for (std::size_t j = 0; j < even.size(); ++j) {
        const int k = even[j];
        const cplx h = channel_response(channel, k, n) *
                       std::polar(1.0, 2.0 * kPi * static_cast<double>(k) * static_cast<double>(sync_result.n_hat) /
                                           static_cast<double>(n));
        if (std::abs(h) <= floor) {
            ++out.skipped_bins;
            continue;
        }
        const cplx eq = spectrum[map.bin(k)] / h;
        const auto bits = ofdm::demap_qpsk(std::span<const cplx>(&eq, 1));
        out.bit_errors += (bits[0] != preamble_bits[2 * j]) + (bits[1] != preamble_bits[2 * j + 1]);
        out.bits_total += 2;
    }
    return out;
}

struct Summary {
    std::uint64_t n_trials = 0;
    double p_sync_error = 0.0;
    double ci_halfwidth = 0.0;  // 95% Wilson score interval half-width
    double mse_time = 0.0;      // samples^2, all trials
    double mse_freq = 0.0;      // (subcarrier spacings)^2, all trials
    double ber = 0.0;
};

/// Wilson score 95% half-width for k successes out of n.
inline double wilson_halfwidth(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054) {
    if (n == 0) return 0.0;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    return z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / (1.0 + z * z / nn);
}

/// Partial sums; merging is associative so trials can be reduced in any grouping.
struct Accumulator {
    std::uint64_t trials = 0;
    std::uint64_t sync_errors = 0;
    double sum_time_sq = 0.0;
    double sum_freq_sq = 0.0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_total = 0;

    void add(const TrialOutcome& o) {
        ++trials;
        sync_errors += o.is_sync_error ? 1 : 0;
        sum_time_sq += static_cast<double>(o.timing_error) * static_cast<double>(o.timing_error);
        sum_freq_sq += o.cfo_error * o.cfo_error;
        bit_errors += o.bit_errors;
        bits_total += o.bits_total;
    }

    Accumulator& merge(const Accumulator& o) {
        trials += o.trials;
        sync_errors += o.sync_errors;
        sum_time_sq += o.sum_time_sq;
        sum_freq_sq += o.sum_freq_sq;
        bit_errors += o.bit_errors;
        bits_total += o.bits_total;
        return *this;
    }

    [[nodiscard]] Summary summary() const {
        if (trials == 0) throw std::invalid_argument("cannot aggregate zero outcomes");
        const auto n = static_cast<double>(trials);
        Summary s;
        s.n_trials = trials;
        s.p_sync_error = static_cast<double>(sync_errors) / n;
        s.ci_halfwidth = wilson_halfwidth(sync_errors, trials);
        s.mse_time = sum_time_sq / n;
        s.mse_freq = sum_freq_sq / n;
        s.ber = bits_total > 0 ? static_cast<double>(bit_errors) / static_cast<double>(bits_total) : 0.0;
        return s;
    }
};

inline Summary aggregate(std::span<const TrialOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("cannot aggregate zero outcomes");
    Accumulator acc;
    for (const auto& o : outcomes) acc.add(o);
    return acc.summary();
}

}  // namespace ncsync::eval
