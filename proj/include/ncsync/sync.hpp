#pragma once

// Streaming Schmidl&Cox and NIRS timing metrics with per-sample
// operation accounting, plus frame-start / CFO decisions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ncsync/types.hpp"

namespace ncsync::sync {

enum class Algorithm { sc, nirs };
enum class TimingRule { argmax, midpoint90 };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::sc ? "sc" : "nirs"; }
inline std::string_view to_string(TimingRule t) { return t == TimingRule::argmax ? "argmax" : "midpoint90"; }

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "sc") return Algorithm::sc;
    if (s == "nirs") return Algorithm::nirs;
    throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

inline TimingRule parse_timing_rule(std::string_view s) {
    if (s == "argmax") return TimingRule::argmax;
    if (s == "midpoint90") return TimingRule::midpoint90;
    throw std::invalid_argument("unknown timing rule '" + std::string(s) + "'");
}

/// Real arithmetic issued by the iterative updates. Square roots are kept
/// apart from the add/mul tallies.
struct OpCounters {
    std::uint64_t real_add_sub = 0;
    std::uint64_t real_mul_div = 0;
    std::uint64_t sqrt_ops = 0;

    OpCounters& operator+=(const OpCounters& o) {
        real_add_sub += o.real_add_sub;
        real_mul_div += o.real_mul_div;
        sqrt_ops += o.sqrt_ops;
        return *this;
    }
    bool operator==(const OpCounters&) const = default;
};

struct OpsPerSample {
    double add_sub = 0.0;
    double mul_div = 0.0;
    double sqrt_ops = 0.0;
};

inline OpsPerSample count_report(const OpCounters& ops, std::uint64_t n_samples) {
    if (n_samples == 0) throw std::invalid_argument("operation report needs at least one sample");
    const auto n = static_cast<double>(n_samples);
    return {static_cast<double>(ops.real_add_sub) / n, static_cast<double>(ops.real_mul_div) / n,
            static_cast<double>(ops.sqrt_ops) / n};
}

/// G - |Q| e^{j2 arg Q}, via Q^2/|Q|. Q == 0 leaves G untouched.
inline cplx g_nirs(cplx g, cplx q) {
    const double mag = std::abs(q);
    if (mag == 0.0) return g;
    return g - q * q / mag;
}

/// Sliding-window G(n), M(n) and, for NIRS, Q(n) over a sample buffer.
///
/// reset() evaluates the sums directly at the first index; every step()
/// afterwards is O(1) and charges the counters with exactly one sample's
/// worth of arithmetic (10/10 for S&C, 24/24 plus one sqrt for NIRS).
/// Initialization is not charged.
class Correlator {
public:
    Correlator(std::size_t n_fft, Algorithm algorithm)
        : n_(n_fft), half_(n_fft / 2), quarter_(n_fft / 4), algorithm_(algorithm), c_(n_fft), e_(n_fft), p_(n_fft) {
        if (n_fft < 4 || n_fft % 4 != 0) throw std::invalid_argument("n_fft must be a positive multiple of 4");
    }

    [[nodiscard]] Algorithm algorithm() const { return algorithm_; }
    [[nodiscard]] std::size_t n_fft() const { return n_; }

    /// Bind to `r` and evaluate directly at buffer index `start`.
    void reset(std::span<const cplx> r, std::size_t start) {
        if (start + n_ > r.size()) throw std::out_of_range("correlation window exceeds the signal");
        r_ = r;
        i_ = start;
        g_ = {};
        m_ = 0.0;
        q_ = {};
        for (std::size_t k = start; k < start + half_; ++k) {
            slot(c_, k) = std::conj(r[k]) * r[k + half_];
            g_ += slot(c_, k);
        }
        for (std::size_t k = start + half_; k < start + n_; ++k) {
            slot(e_, k) = std::norm(r[k]);
            m_ += slot(e_, k);
        }
        if (algorithm_ == Algorithm::nirs) {
            for (std::size_t k = start; k < start + 3 * quarter_; ++k) slot(p_, k) = std::conj(r[k]) * r[k + quarter_];
            cplx acc{};
            for (std::size_t m = 0; m < quarter_; ++m)
                acc += slot(p_, start + m) + 2.0 * slot(p_, start + quarter_ + m) + slot(p_, start + half_ + m);
            q_ = 0.5 * acc;
        }
        finish_sample(/*charge=*/false);
    }

    [[nodiscard]] bool can_step() const { return !r_.empty() && i_ + 1 + n_ <= r_.size(); }

    /// Advance one sample.
    void step() {
        if (!can_step()) throw std::out_of_range("correlation window exceeds the signal");
        const std::size_t i = ++i_;
        ++steps_;

        // G: one new lag-N/2 product, drop the oldest.  4 mul, 2 + 4 add
        const cplx c_new = mul(std::conj(r_[i + half_ - 1]), r_[i + n_ - 1]);
        g_ = sub(g_, slot(c_, i - 1));
        g_ = add(g_, c_new);
        slot(c_, i + half_ - 1) = c_new;

        // M: one new energy term.  2 mul, 1 + 2 add
        const double e_new = norm(r_[i + n_ - 1]);
        m_ -= slot(e_, i + half_ - 1);
        m_ += e_new;
        ops_.real_add_sub += 2;
        slot(e_, i + n_ - 1) = e_new;

        if (algorithm_ == Algorithm::nirs) {
            // Q: one new lag-N/4 product, the other three are older ones.
            // 4 mul + 2 add (product), 6 add (combination), 2 mul (x1/2), 2 add (accumulate)
            const std::size_t newest = i + 3 * quarter_ - 1;
            const cplx p_new = mul(std::conj(r_[newest]), r_[i + n_ - 1]);
            slot(p_, newest) = p_new;
            cplx delta = sub(p_new, slot(p_, i - 1));
            delta = add(delta, slot(p_, i + half_ - 1));
            delta = sub(delta, slot(p_, i + quarter_ - 1));
            delta = {0.5 * delta.real(), 0.5 * delta.imag()};
            ops_.real_mul_div += 2;
            q_ = add(q_, delta);
        }
        finish_sample(/*charge=*/true);
    }

    [[nodiscard]] std::size_t index() const { return i_; }
    [[nodiscard]] cplx g() const { return g_; }
    [[nodiscard]] double m() const { return m_; }
    [[nodiscard]] cplx q() const { return q_; }
    [[nodiscard]] cplx g_nirs() const { return g_nirs_; }
    /// |G/M|^2 for S&C, |G_NIRS/M|^2 for NIRS; 0 where M == 0.
    [[nodiscard]] double metric() const { return metric_; }
    [[nodiscard]] const OpCounters& ops() const { return ops_; }
    [[nodiscard]] std::uint64_t steps() const { return steps_; }

private:
    template <typename T>
    T& slot(std::vector<T>& ring, std::size_t k) const {
        return ring[k % n_];
    }

    cplx mul(cplx a, cplx b) {
        ops_.real_mul_div += 4;
        ops_.real_add_sub += 2;
        return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
    }
    cplx add(cplx a, cplx b) {
        ops_.real_add_sub += 2;
        return {a.real() + b.real(), a.imag() + b.imag()};
    }
    cplx sub(cplx a, cplx b) {
        ops_.real_add_sub += 2;
        return {a.real() - b.real(), a.imag() - b.imag()};
    }
    double norm(cplx a) {
        ops_.real_mul_div += 2;
        ops_.real_add_sub += 1;
        return a.real() * a.real() + a.imag() * a.imag();
    }

    void finish_sample(bool charge) {
        const OpCounters before = ops_;
        cplx numerator = g_;
        if (algorithm_ == Algorithm::nirs) {
            // Q^2/|Q|: 4 mul + 1 add for Q^2, 2 mul + 1 add + sqrt for |Q|,
            // 2 div, then one complex subtraction.
            const double a = q_.real();
            const double b = q_.imag();
            const cplx q2{a * a - b * b, 2.0 * (a * b)};
            ops_.real_mul_div += 4;
            ops_.real_add_sub += 1;
            const double mag = std::sqrt(a * a + b * b);
            ops_.real_mul_div += 2;
            ops_.real_add_sub += 1;
            ops_.sqrt_ops += 1;
            const cplx correction = mag == 0.0 ? cplx{} : cplx{q2.real() / mag, q2.imag() / mag};
            ops_.real_mul_div += 2;
            numerator = sub(g_, correction);
        }
        g_nirs_ = numerator;
        // |num|^2 / M^2: 2 mul + 1 add, 1 mul, 1 div
        const double num2 = norm(numerator);
        const double m2 = m_ * m_;
        metric_ = m2 > 0.0 ? num2 / m2 : 0.0;
        ops_.real_mul_div += 2;
        if (!charge) ops_ = before;
    }

    std::size_t n_;
    std::size_t half_;
    std::size_t quarter_;
    Algorithm algorithm_;

    std::span<const cplx> r_;
    std::size_t i_ = 0;
    std::vector<cplx> c_;    // r*(k) r(k+N/2), ring indexed by k mod N
    std::vector<double> e_;  // |r(k)|^2
    std::vector<cplx> p_;    // r*(k) r(k+N/4)

    cplx g_{};
    double m_ = 0.0;
    cplx q_{};
    cplx g_nirs_{};
    double metric_ = 0.0;
    OpCounters ops_{};
    std::uint64_t steps_ = 0;
};

/// Per-index record over a contiguous range of frame indices.
/// An S&C trace carries q = 0 and g_nirs = g.
struct MetricTrace {
    Algorithm algorithm = Algorithm::sc;
    std::int64_t n_first = 0;
    std::vector<cplx> g;
    std::vector<double> m;
    std::vector<cplx> q;
    std::vector<cplx> g_nirs;
    std::vector<double> metric_sc;
    std::vector<double> metric_nirs;
    OpCounters ops{};
    std::uint64_t steps = 0;

    [[nodiscard]] std::size_t size() const { return m.size(); }
    [[nodiscard]] bool empty() const { return m.empty(); }
    [[nodiscard]] std::int64_t n_at(std::size_t i) const { return n_first + static_cast<std::int64_t>(i); }
    [[nodiscard]] const std::vector<double>& metric(Algorithm a) const {
        return a == Algorithm::sc ? metric_sc : metric_nirs;
    }
};

/// Frame indices n whose N-sample span [n, n+N-1] lies inside `r`.
inline std::pair<std::int64_t, std::int64_t> search_window(const TimeSignal& r, std::size_t n_fft) {
    return {r.first_index(), r.last_index() - static_cast<std::int64_t>(n_fft) + 1};
}

inline MetricTrace compute_trace(const TimeSignal& r, std::size_t n_fft, Algorithm algorithm, std::int64_t n_first,
                                 std::int64_t n_last) {
    const auto [lo, hi] = search_window(r, n_fft);
    if (n_first < lo || n_last > hi) throw std::out_of_range("requested indices exceed the search window");
    MetricTrace t;
    t.algorithm = algorithm;
    t.n_first = n_first;
    if (n_last < n_first) return t;
    const auto count = static_cast<std::size_t>(n_last - n_first + 1);
    for (auto* v : {&t.m, &t.metric_sc, &t.metric_nirs}) v->reserve(count);
    for (auto* v : {&t.g, &t.q, &t.g_nirs}) v->reserve(count);

    Correlator corr(n_fft, algorithm);
    corr.reset(r.samples, static_cast<std::size_t>(r.origin + n_first));
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) corr.step();
        t.g.push_back(corr.g());
        t.m.push_back(corr.m());
        t.q.push_back(corr.q());
        t.g_nirs.push_back(corr.g_nirs());
        const double m2 = corr.m() * corr.m();
        const double sc = m2 > 0.0 ? std::norm(corr.g()) / m2 : 0.0;
        t.metric_sc.push_back(sc);
        t.metric_nirs.push_back(algorithm == Algorithm::nirs ? corr.metric() : sc);
    }
    t.ops = corr.ops();
    t.steps = corr.steps();
    return t;
}

/// Trace over the whole search window of `r`.
inline MetricTrace compute_trace(const TimeSignal& r, std::size_t n_fft, Algorithm algorithm) {
    const auto [lo, hi] = search_window(r, n_fft);
    if (hi < lo) throw std::invalid_argument("signal shorter than one correlation window");
    return compute_trace(r, n_fft, algorithm, lo, hi);
}

struct SyncResult {
    std::int64_t n_hat = 0;  // detected frame start, frame index (0 = true start)
    double nu_hat = 0.0;     // CFO estimate in subcarrier spacings
    double peak_value = 0.0;
    OpCounters ops{};
};

inline SyncResult detect(const MetricTrace& trace, Algorithm algorithm, TimingRule rule = TimingRule::argmax) {
    if (trace.empty()) throw std::invalid_argument("empty search window");
    if (algorithm == Algorithm::nirs && trace.algorithm != Algorithm::nirs)
        throw std::invalid_argument("NIRS detection needs a trace computed with Q(n)");
    if (std::all_of(trace.m.begin(), trace.m.end(), [](double v) { return v == 0.0; }))
        throw NoSignal("received energy is zero over the search window");

    const auto& metric = trace.metric(algorithm);
    const auto peak_it = std::max_element(metric.begin(), metric.end());
    const auto peak = static_cast<std::size_t>(peak_it - metric.begin());
    std::size_t chosen = peak;
    if (rule == TimingRule::midpoint90) {
        const double threshold = 0.9 * *peak_it;
        std::size_t left = peak;
        while (left > 0 && metric[left - 1] >= threshold) --left;
        std::size_t right = peak;
        while (right + 1 < metric.size() && metric[right + 1] >= threshold) ++right;
        chosen = left + (right - left) / 2;
    }

    const cplx num = algorithm == Algorithm::sc ? trace.g[chosen] : trace.g_nirs[chosen];
    SyncResult res;
    res.n_hat = trace.n_at(chosen);
    res.nu_hat = std::arg(num) / kPi;
    res.peak_value = *peak_it;
    res.ops = trace.ops;
    return res;
}

/// Columns: n, re_g, im_g, m, re_q, im_q, re_g_nirs, im_g_nirs, metric_sc, metric_nirs
inline void write_trace_csv(std::ostream& os, const MetricTrace& t) {
    os << "n,re_g,im_g,m,re_q,im_q,re_g_nirs,im_g_nirs,metric_sc,metric_nirs\n";
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(10);
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << t.n_at(i) << ',' << t.g[i].real() << ',' << t.g[i].imag() << ',' << t.m[i] << ',' << t.q[i].real()
           << ',' << t.q[i].imag() << ',' << t.g_nirs[i].real() << ',' << t.g_nirs[i].imag() << ','
           << t.metric_sc[i] << ',' << t.metric_nirs[i] << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

}  // namespace ncsync::sync
