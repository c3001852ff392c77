#pragma once

// Unitary DFT of fixed size backed by FFTW.

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <unordered_map>

#include "ncsync/types.hpp"

namespace ncsync {

namespace detail {
// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Size-N transform pair, both directions scaled by 1/sqrt(N).
class Dft {
public:
    explicit Dft(std::size_t n) : n_(n), scale_(1.0 / std::sqrt(static_cast<double>(n))) {
        if (n == 0) throw std::invalid_argument("DFT size must be positive");
        cvec scratch_in(n), scratch_out(n);
        auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
        auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
        const int size = static_cast<int>(n);
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_ = fftw_plan_dft_1d(size, in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        backward_ = fftw_plan_dft_1d(size, in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("FFTW planning failed");
    }

    Dft(const Dft&) = delete;
    Dft& operator=(const Dft&) = delete;

    ~Dft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    [[nodiscard]] std::size_t size() const { return n_; }

    /// X[k] = N^{-1/2} sum_n x[n] e^{-j2pi nk/N}
    void forward(std::span<const cplx> in, std::span<cplx> out) const { run(forward_, in, out); }

    /// x[n] = N^{-1/2} sum_k X[k] e^{+j2pi nk/N}
    void inverse(std::span<const cplx> in, std::span<cplx> out) const { run(backward_, in, out); }

private:
    void run(fftw_plan plan, std::span<const cplx> in, std::span<cplx> out) const {
        if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("DFT buffer size mismatch");
        if (in.data() == out.data()) {
            const cvec copy(in.begin(), in.end());
            run(plan, copy, out);
            return;
        }
        // new-array execute never writes to the input of an out-of-place plan
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                         reinterpret_cast<fftw_complex*>(out.data()));
        for (auto& v : out) v *= scale_;
    }

    std::size_t n_;
    double scale_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Per-thread cached transform of size n.
inline const Dft& dft_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<Dft>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<Dft>(n);
    return *slot;
}

}  // namespace ncsync
