// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ncsync/ncsync.hpp"
#include "oracles.hpp"

using namespace ncsync;

namespace {

constexpr std::size_t N = 256;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ofdm::SubcarrierMap& default_map() {
    static const ofdm::SubcarrierMap m(N, ofdm::index_ranges({{-100, -1}, {1, 3}, {46, 100}}));
    return m;
}

TimeSignal random_frame(const ofdm::FrameSpec& spec, std::uint64_t seed) {
    ofdm::QpskStream q(seed);
    ofdm::SymbolGrid g(spec.map, spec.n_symbols);
    g.set_column(0, ofdm::generate_preamble(spec.map, q));
    for (std::size_t p = 1; p < spec.n_symbols; ++p)
        for (int k : spec.map.occupied()) g.set(p, k, q());
    return ofdm::build_frame(g, spec);
}

Verdict pure_tone_cancellation() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double a = std::pow(10.0, 4.0 * u(rng) - 2.0);
        const double f = -128.0 + 256.0 * u(rng);
        const double phi = 2.0 * kPi * u(rng);
        cvec v(2 * N);
        for (std::size_t n = 0; n < v.size(); ++n) v[n] = std::polar(a, 2.0 * kPi * f * n / N + phi);
        const auto t = sync::compute_trace({v, 0}, N, sync::Algorithm::nirs);
        for (const auto& g : t.g_nirs) worst = std::max(worst, std::abs(g) / (a * a * N / 2.0));
    }
    return {worst < 1e-9, fmt("max |G_NIRS| / (A^2 N/2) = %.3g (limit 1e-9)", worst)};
}

Verdict zero_variance_cfo() {
    const ofdm::FrameSpec spec(default_map(), 32, 11, 3);
    double worst = 0.0;
    int i = 0;
    for (double nu = -0.8; nu <= 0.8 + 1e-12; nu += 0.2, ++i) {
        const auto r = impair::apply_cfo(random_frame(spec, 200 + i), nu, N);
        const auto res = sync::detect(sync::compute_trace(r, N, sync::Algorithm::nirs, 0, 0), sync::Algorithm::nirs);
        worst = std::max(worst, std::abs(res.nu_hat - nu));
    }
    return {worst < 1e-10 && i == 9, fmt("%d-point grid, max |nu_hat - nu| = %.3g (limit 1e-10)", i, worst)};
}

Verdict plateau_law() {
    std::mt19937_64 rng(303);
    bool pass = true;
    std::string detail;
    for (double gamma : {0.1, 1.0, 10.0}) {
        const double si2 = gamma / (1.0 + gamma), sw2 = 1.0 / (1.0 + gamma);
        impair::NbiSpec spec;
        spec.phase0 = 0.3;
        const auto tone = impair::gen_nbi(spec, 1000 + N, N, rng);
        const auto w = oracle::random_cvec(1000 + N, rng(), std::sqrt(sw2));
        cvec v(1000 + N);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(si2) * tone.samples[i] + w[i];
        const auto t = sync::compute_trace({v, 0}, N, sync::Algorithm::sc, 0, 999);
        double mean = 0.0;
        for (double x : t.metric_sc) mean += x;
        mean /= static_cast<double>(t.size());
        const double target = gamma / (gamma + 1.0);
        const bool ok = std::abs(mean / target - 1.0) <= 0.05;
        pass = pass && ok;
        detail += fmt("G=%g: mean %.4f vs %.4f%s; ", gamma, mean, target, ok ? "" : " (off)");
    }
    return {pass, detail + "tolerance 5%"};
}

Verdict iterative_direct() {
    const auto x = oracle::random_cvec(1000, 404);
    const auto t = sync::compute_trace({x, 0}, N, sync::Algorithm::nirs);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        worst = std::max(worst, std::abs(t.g[i] - oracle::g_direct(x, i, N)));
        worst = std::max(worst, std::abs(t.m[i] - oracle::m_direct(x, i, N)));
        worst = std::max(worst, std::abs(t.q[i] - oracle::q_direct(x, i, N)));
    }
    return {worst < 1e-9 * N, fmt("max abs diff %.3g over %zu indices (limit %.3g)", worst, t.size(), 1e-9 * N)};
}

Verdict op_counts() {
    bool pass = true;
    std::string detail;
    for (std::size_t len : {100u, 1000u, 5000u}) {
        const TimeSignal r{oracle::random_cvec(len + N, 500 + len), 0};
        const auto sc = sync::compute_trace(r, N, sync::Algorithm::sc);
        const auto nirs = sync::compute_trace(r, N, sync::Algorithm::nirs);
        const auto a = sync::count_report(sc.ops, sc.steps);
        const auto b = sync::count_report(nirs.ops, nirs.steps);
        pass = pass && a.add_sub == 10.0 && a.mul_div == 10.0 && b.add_sub == 24.0 && b.mul_div == 24.0;
        if (len == 1000)
            detail = fmt("S&C (%g, %g), NIRS (%g, %g) add/mul per sample, %g sqrt", a.add_sub, a.mul_div, b.add_sub,
                         b.mul_div, b.sqrt_ops);
    }
    return {pass, detail};
}

Verdict closed_forms() {
    const ofdm::FrameSpec spec(default_map(), 32, 1, 1);
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int grid = 0; grid < 20; ++grid) {
        ofdm::QpskStream q(rng());
        cvec col(N);
        for (int k : spec.map.occupied()) col[spec.map.column_index(k)] = q();
        ofdm::SymbolGrid g(spec.map, 1);
        g.set_column(0, col);
        auto y = ofdm::build_frame(g, spec);
        y.samples.resize(y.size() + N);
        // every third grid puts f - nu on an occupied bin
        const double nu = 0.9 * u(rng);
        const double f = grid % 3 == 0 ? 60.0 + nu : 128.0 * u(rng);
        std::vector<double> err;
        double peak = 0.0;
        for (std::int64_t n = -128 - 32 + 1; n <= 255; ++n) {
            const cplx d = appendix::b_direct(y, f, nu, n, N);
            err.push_back(std::abs(d - appendix::b_closed_form(col, f, nu, n, spec)));
            peak = std::max(peak, std::abs(d));
        }
        for (double e : err) worst = std::max(worst, e / peak);
    }
    return {worst < 1e-9, fmt("20 grids x 416 indices, max relative error %.3g (limit 1e-9)", worst)};
}

Verdict decomposition() {
    const ofdm::FrameSpec spec(default_map(), 32, 4, 1);
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_g = 0.0, worst_q = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto y = random_frame(spec, rng());
        const appendix::Tone tone{std::pow(10.0, u(rng)), 128.0 * u(rng), kPi * u(rng)};
        const double nu = 0.9 * u(rng);
        const auto r = appendix::compose_received(y, tone, nu, N);
        const auto [lo, hi] = sync::search_window(r, N);
        const auto n = lo + static_cast<std::int64_t>((hi - lo) * (0.5 + 0.5 * u(rng)));
        const auto t = sync::compute_trace(r, N, sync::Algorithm::nirs, n, n);
        const auto d = appendix::decompose(y, tone, nu, n, N);
        const double scale_g = std::max(std::abs(t.g[0]), t.m[0]);
        const double scale_q = std::max(std::abs(t.q[0]), t.m[0]);
        worst_g = std::max(worst_g, std::abs(d.g() - t.g[0]) / scale_g);
        worst_q = std::max(worst_q, std::abs(d.q() - t.q[0]) / scale_q);
    }
    return {worst_g < 1e-10 && worst_q < 1e-10,
            fmt("100 constructions, max relative error G %.3g, Q %.3g (limit 1e-10)", worst_g, worst_q)};
}

harness::Scenario desk_scenario() {
    auto s = harness::load_scenario(std::string(NCSYNC_PRESET_DIR) + "/fig3_ideal_nbi.ini");
    s.n_trials = 2000;
    return s;
}

const harness::CellResult& find(const std::vector<harness::CellResult>& rows, double snr, double sir,
                                sync::Algorithm a) {
    for (const auto& r : rows)
        if (r.snr_db == snr && r.sir_db == sir && r.algorithm == a) return r;
    throw std::logic_error("missing cell");
}

Verdict desk_probabilities() {
    auto s = desk_scenario();
    s.snr_grid = {20.0};
    s.sir_grid = {0.0};
    const auto jam = harness::run_scenario(s);
    s.snr_grid = {8.0};
    s.sir_grid = {100.0};
    const auto quiet = harness::run_scenario(s);
    const double a = find(jam, 20.0, 0.0, sync::Algorithm::sc).summary.p_sync_error;
    const double b = find(jam, 20.0, 0.0, sync::Algorithm::nirs).summary.p_sync_error;
    const double c = find(quiet, 8.0, 100.0, sync::Algorithm::nirs).summary.p_sync_error;
    return {a > 0.9 && b < 0.05 && c <= 0.02,
            fmt("S&C p(20 dB, 0 dB) = %.4f (> 0.9); NIRS p(20 dB, 0 dB) = %.4f (< 0.05); NIRS p(8 dB, 100 dB) = %.4f "
                "(<= 0.02)",
                a, b, c)};
}

Verdict bandwidth_trends() {
    auto s = harness::load_scenario(std::string(NCSYNC_PRESET_DIR) + "/fig8_bandwidth.ini");
    s.n_trials = 2000;
    s.snr_grid = {20.0};
    s.sir_grid = {0.0};
    const auto rows = harness::run_nbi_bandwidth_sweep(s);
    bool pass = s.bandwidths_hz.size() >= 5;
    std::string detail;
    for (auto alg : {sync::Algorithm::nirs, sync::Algorithm::sc}) {
        std::vector<const harness::CellResult*> seq;
        for (const auto& r : rows)
            if (r.algorithm == alg) seq.push_back(&r);
        detail += std::string(sync::to_string(alg)) + " [";
        for (std::size_t i = 0; i < seq.size(); ++i) {
            detail += fmt("%s%.4f", i ? " " : "", seq[i]->summary.p_sync_error);
            if (i == 0) continue;
            const auto& prev = seq[i - 1]->summary;
            const auto& cur = seq[i]->summary;
            // a step against the expected direction must stay inside the overlapping intervals
            const double against = alg == sync::Algorithm::nirs ? prev.p_sync_error - cur.p_sync_error
                                                                : cur.p_sync_error - prev.p_sync_error;
            if (against > prev.ci_halfwidth + cur.ci_halfwidth) pass = false;
        }
        detail += "] ";
    }
    return {pass, detail + "over bandwidths 4..200 kHz; NIRS non-decreasing, S&C non-increasing"};
}

Verdict cross_power_trend() {
    bool pass = true;
    std::string detail;
    for (auto timing : {appendix::TimingPosition::optimal, appendix::TimingPosition::random_data}) {
        const auto wide = appendix::relative_cross_power(0, 0.0, timing, 1000);
        const auto notch = appendix::relative_cross_power(42, 0.0, timing, 1000);
        const bool ok = notch.ci_high < wide.ci_low;
        pass = pass && ok;
        detail += fmt("%s: notch 0 %.4g [%.4g, %.4g], notch 42 %.4g [%.4g, %.4g]; ",
                      std::string(appendix::to_string(timing)).c_str(), wide.ratio, wide.ci_low, wide.ci_high,
                      notch.ratio, notch.ci_low, notch.ci_high);
    }
    return {pass, detail + "99% bootstrap intervals must separate"};
}

Verdict ber_spot_check() {
    auto s = desk_scenario();
    s.snr_grid = {20.0};
    s.sir_grid = {-10.0};
    s.algorithms = {sync::Algorithm::nirs};
    const auto rows = harness::run_scenario(s);
    const double ber = rows.front().summary.ber;
    return {ber < 0.1, fmt("NIRS preamble BER %.4f at 20 dB SNR, -10 dB SIR over %llu frames (< 0.1)", ber,
                           static_cast<unsigned long long>(rows.front().summary.n_trials))};
}

Verdict determinism() {
    auto s = harness::load_scenario(std::string(NCSYNC_PRESET_DIR) + "/smoke.ini");
    std::ostringstream a, b, c;
    harness::write_results_csv(a, harness::run_scenario(s, {1}));
    harness::write_results_csv(b, harness::run_scenario(s, {1}));
    harness::write_results_csv(c, harness::run_scenario(s, {4}));
    const bool ok = a.str() == b.str() && a.str() == c.str();
    return {ok, fmt("smoke preset, %zu CSV bytes, repeat and 4-thread runs %s", a.str().size(),
                    ok ? "identical" : "differ")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"pure-tone cancellation", pure_tone_cancellation},
        {"zero-variance CFO", zero_variance_cfo},
        {"plateau law", plateau_law},
        {"iterative/direct equivalence", iterative_direct},
        {"operation counts", op_counts},
        {"closed-form b(n)", closed_forms},
        {"decomposition identities", decomposition},
        {"desk-scale error probabilities", desk_probabilities},
        {"bandwidth trends", bandwidth_trends},
        {"cross-term vs notch", cross_power_trend},
        {"BER spot check", ber_spot_check},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
