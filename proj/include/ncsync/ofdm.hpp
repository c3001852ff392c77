#pragma once

// NC-OFDM transmit side: subcarrier allocation, symbol modulation,
// Schmidl&Cox-style half-periodic preamble and frame assembly.

#include <algorithm>
#include <concepts>
#include <numbers>
#include <type_traits>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncsync/dft.hpp"
#include "ncsync/types.hpp"

namespace ncsync::ofdm {

/// Occupied subcarrier indices k in [-N/2, N/2-1] of an N-point spectrum.
class SubcarrierMap {
public:
    SubcarrierMap(std::size_t n_fft, std::vector<int> occupied) : n_fft_(n_fft), occupied_(std::move(occupied)) {
        if (n_fft_ < 4 || n_fft_ % 4 != 0)
            throw std::invalid_argument("n_fft must be a positive multiple of 4, got " + std::to_string(n_fft_));
        std::sort(occupied_.begin(), occupied_.end());
        if (std::adjacent_find(occupied_.begin(), occupied_.end()) != occupied_.end())
            throw std::invalid_argument("occupied subcarrier indices must be unique");
        if (occupied_.empty()) throw std::invalid_argument("at least one subcarrier must be occupied");
        const int half = static_cast<int>(n_fft_ / 2);
        if (occupied_.front() < -half || occupied_.back() > half - 1)
            throw std::invalid_argument("occupied index outside [-N/2, N/2-1]");
    }

    [[nodiscard]] std::size_t n_fft() const { return n_fft_; }
    [[nodiscard]] const std::vector<int>& occupied() const { return occupied_; }
    [[nodiscard]] std::size_t active_count() const { return occupied_.size(); }

    [[nodiscard]] bool contains(int k) const { return std::binary_search(occupied_.begin(), occupied_.end(), k); }

    /// Occupied indices with k mod 2 == 0; these carry the preamble.
    [[nodiscard]] std::vector<int> even_occupied() const {
        std::vector<int> out;
        std::copy_if(occupied_.begin(), occupied_.end(), std::back_inserter(out), [](int k) { return k % 2 == 0; });
        return out;
    }

    /// Position of subcarrier k in a centred column (k = -N/2 at 0).
    [[nodiscard]] std::size_t column_index(int k) const { return static_cast<std::size_t>(k + static_cast<int>(n_fft_ / 2)); }

    /// DFT bin of subcarrier k.
    [[nodiscard]] std::size_t bin(int k) const {
        const int n = static_cast<int>(n_fft_);
        return static_cast<std::size_t>(((k % n) + n) % n);
    }

private:
    std::size_t n_fft_;
    std::vector<int> occupied_;
};

/// Contiguous index ranges lo..hi, e.g. {{-100,-1},{1,3},{46,100}}.
inline std::vector<int> index_ranges(std::initializer_list<std::pair<int, int>> ranges) {
    std::vector<int> out;
    for (auto [lo, hi] : ranges)
        for (int k = lo; k <= hi; ++k) out.push_back(k);
    return out;
}

struct FrameSpec {
    SubcarrierMap map;
    std::size_t n_cp = 0;
    std::size_t n_symbols = 1;       // P, preamble included
    std::size_t n_empty_prefix = 0;  // all-zero symbol slots before the frame

    FrameSpec(SubcarrierMap m, std::size_t cp, std::size_t symbols, std::size_t empty = 0)
        : map(std::move(m)), n_cp(cp), n_symbols(symbols), n_empty_prefix(empty) {
        if (n_cp > map.n_fft()) throw std::invalid_argument("n_cp must not exceed n_fft");
        if (n_symbols < 1) throw std::invalid_argument("a frame needs at least one symbol");
    }

    [[nodiscard]] std::size_t n_fft() const { return map.n_fft(); }
    [[nodiscard]] std::size_t symbol_length() const { return map.n_fft() + n_cp; }
    [[nodiscard]] std::size_t frame_length() const { return (n_empty_prefix + n_symbols) * symbol_length(); }
    /// Buffer index of frame index 0 in a built frame.
    [[nodiscard]] std::int64_t origin() const {
        return static_cast<std::int64_t>(n_empty_prefix * symbol_length() + n_cp);
    }
    /// Buffer range holding non-empty symbols.
    [[nodiscard]] IndexRange active_region() const {
        return {n_empty_prefix * symbol_length(), frame_length()};
    }
};

/// Per-symbol frequency-domain content; zero outside the map.
class SymbolGrid {
public:
    SymbolGrid(const SubcarrierMap& map, std::size_t n_symbols)
        : map_(map), columns_(n_symbols, cvec(map.n_fft(), cplx{})) {}

    [[nodiscard]] std::size_t n_symbols() const { return columns_.size(); }
    [[nodiscard]] const SubcarrierMap& map() const { return map_; }
    [[nodiscard]] std::span<const cplx> column(std::size_t p) const { return columns_.at(p); }

    void set(std::size_t p, int k, cplx value) {
        if (!map_.contains(k)) throw std::invalid_argument("subcarrier " + std::to_string(k) + " is not occupied");
        columns_.at(p)[map_.column_index(k)] = value;
    }

    [[nodiscard]] cplx get(std::size_t p, int k) const { return columns_.at(p)[map_.column_index(k)]; }

    /// Replace a whole column; entries off the map must be zero.
    void set_column(std::size_t p, std::span<const cplx> values) {
        if (values.size() != map_.n_fft()) throw std::invalid_argument("column length must equal n_fft");
        const int half = static_cast<int>(map_.n_fft() / 2);
        for (int k = -half; k < half; ++k)
            if (values[map_.column_index(k)] != cplx{} && !map_.contains(k))
                throw std::invalid_argument("nonzero value on released subcarrier " + std::to_string(k));
        columns_.at(p).assign(values.begin(), values.end());
    }

private:
    SubcarrierMap map_;
    std::vector<cvec> columns_;
};

// Gray-mapped QPSK, unit power: bit 0 selects the sign of I, bit 1 the sign of Q,
// a zero bit maps to the positive half-axis. 00 -> (1+j)/sqrt2.
inline cvec map_qpsk(std::span<const std::uint8_t> bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("QPSK mapping needs an even number of bits");
    const double a = 1.0 / std::numbers::sqrt2;
    cvec out;
    out.reserve(bits.size() / 2);
    for (std::size_t i = 0; i < bits.size(); i += 2)
        out.emplace_back(bits[i] ? -a : a, bits[i + 1] ? -a : a);
    return out;
}

inline std::vector<std::uint8_t> demap_qpsk(std::span<const cplx> symbols) {
    std::vector<std::uint8_t> bits;
    bits.reserve(2 * symbols.size());
    for (const auto& s : symbols) {
        bits.push_back(s.real() < 0.0 ? 1 : 0);
        bits.push_back(s.imag() < 0.0 ? 1 : 0);
    }
    return bits;
}

/// Seeded source of random QPSK symbols that keeps the bits it emitted.
class QpskStream {
public:
    explicit QpskStream(std::uint64_t seed) : rng_(seed) {}

    cplx operator()() {
        const std::uint8_t pair[2] = {static_cast<std::uint8_t>(rng_() & 1u), static_cast<std::uint8_t>(rng_() & 1u)};
        bits_.push_back(pair[0]);
        bits_.push_back(pair[1]);
        return map_qpsk(pair).front();
    }

    [[nodiscard]] const std::vector<std::uint8_t>& bits() const { return bits_; }

private:
    std::mt19937_64 rng_;
    std::vector<std::uint8_t> bits_;
};

/// One symbol with cyclic prefix: N_CP + N samples, origin at the first body sample.
inline TimeSignal modulate_symbol(std::span<const cplx> column, const FrameSpec& spec) {
    const std::size_t n = spec.n_fft();
    if (column.size() != n) throw std::invalid_argument("symbol column length must equal n_fft");
    cvec bins(n);
    const int half = static_cast<int>(n / 2);
    for (int k = -half; k < half; ++k) bins[spec.map.bin(k)] = column[spec.map.column_index(k)];
    cvec body(n);
    dft_for(n).inverse(bins, body);

    TimeSignal out;
    out.samples.reserve(spec.symbol_length());
    out.samples.insert(out.samples.end(), body.end() - static_cast<std::ptrdiff_t>(spec.n_cp), body.end());
    out.samples.insert(out.samples.end(), body.begin(), body.end());
    out.origin = static_cast<std::int64_t>(spec.n_cp);
    return out;
}

/// Preamble column: symbols from `source` on even occupied subcarriers, scaled
/// so its mean power matches a unit-power data symbol on the full map.
template <typename Source>
    requires std::invocable<Source&> && std::convertible_to<std::invoke_result_t<Source&>, cplx>
cvec generate_preamble(const SubcarrierMap& map, Source&& source) {
    const auto even = map.even_occupied();
    if (even.empty()) throw UnsatisfiablePreamble("no even subcarrier index is occupied");
    const double gain = std::sqrt(static_cast<double>(map.active_count()) / static_cast<double>(even.size()));
    cvec column(map.n_fft(), cplx{});
    for (int k : even) column[map.column_index(k)] = gain * cplx(source());
    return column;
}

/// Concatenate the empty prefix and all symbols of `grid` (column 0 = preamble).
inline TimeSignal build_frame(const SymbolGrid& grid, const FrameSpec& spec) {
    if (grid.n_symbols() != spec.n_symbols)
        throw std::invalid_argument("grid has " + std::to_string(grid.n_symbols()) + " symbols, frame expects " +
                                    std::to_string(spec.n_symbols));
    if (grid.map().n_fft() != spec.n_fft()) throw std::invalid_argument("grid and frame disagree on n_fft");
    TimeSignal frame;
    frame.samples.assign(spec.n_empty_prefix * spec.symbol_length(), cplx{});
    frame.samples.reserve(spec.frame_length());
    for (std::size_t p = 0; p < spec.n_symbols; ++p) {
        const auto sym = modulate_symbol(grid.column(p), spec);
        frame.samples.insert(frame.samples.end(), sym.samples.begin(), sym.samples.end());
    }
    frame.origin = spec.origin();
    return frame;
}

}  // namespace ncsync::ofdm
