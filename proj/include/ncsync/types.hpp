#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncsync {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;

/// Base class for domain failures that are not plain argument errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No even occupied subcarrier exists, so no half-periodic preamble can be built.
class UnsatisfiablePreamble : public Error {
public:
    using Error::Error;
};

/// Energy term is zero over the whole search window.
class NoSignal : public Error {
public:
    using Error::Error;
};

/// Scenario file problem; message carries the offending section/key or line.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Half-open range of buffer indices.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const { return end > begin ? end - begin : 0; }
    [[nodiscard]] bool empty() const { return size() == 0; }
};

/// Complex baseband samples with a time origin.
///
/// `origin` is the buffer index of frame time n = 0, i.e. the first sample
/// after the cyclic prefix of the preamble. Frame index n lives at
/// samples[origin + n]; origin may lie outside the buffer.
struct TimeSignal {
    cvec samples;
    std::int64_t origin = 0;

    [[nodiscard]] std::size_t size() const { return samples.size(); }

    [[nodiscard]] bool contains(std::int64_t n) const {
        const std::int64_t i = origin + n;
        return i >= 0 && i < static_cast<std::int64_t>(samples.size());
    }

    /// Sample at frame index n; throws std::out_of_range outside the buffer.
    [[nodiscard]] const cplx& at(std::int64_t n) const {
        if (!contains(n)) throw std::out_of_range("frame index " + std::to_string(n) + " outside signal");
        return samples[static_cast<std::size_t>(origin + n)];
    }

    [[nodiscard]] std::int64_t first_index() const { return -origin; }
    [[nodiscard]] std::int64_t last_index() const { return static_cast<std::int64_t>(samples.size()) - 1 - origin; }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double mean_power(const cvec& x, IndexRange r) {
    if (r.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) acc += std::norm(x[i]);
    return acc / static_cast<double>(r.size());
}

}  // namespace ncsync
