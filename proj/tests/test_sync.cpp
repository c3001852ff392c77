#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ncsync/impairments.hpp"
#include "ncsync/ofdm.hpp"
#include "ncsync/sync.hpp"
#include "oracles.hpp"

using namespace ncsync;
using namespace ncsync::sync;

namespace {

constexpr std::size_t N = 256;

TimeSignal as_signal(cvec v, std::int64_t origin = 0) { return {std::move(v), origin}; }

/// Preamble plus two QPSK data symbols on the default map, one empty symbol before.
TimeSignal clean_preamble(std::uint64_t seed) {
    const ofdm::FrameSpec spec(ofdm::SubcarrierMap(N, ofdm::index_ranges({{-100, -1}, {1, 3}, {46, 100}})), 32, 3,
                               1);
    ofdm::QpskStream src(seed);
    ofdm::SymbolGrid g(spec.map, 3);
    g.set_column(0, ofdm::generate_preamble(spec.map, src));
    for (std::size_t p = 1; p < 3; ++p) {
        cvec col(N);
        for (int k : spec.map.occupied()) col[spec.map.column_index(k)] = src();
        g.set_column(p, col);
    }
    return ofdm::build_frame(g, spec);
}

}  // namespace

TEST(Correlator, ConstantInput) {
    const auto r = as_signal(cvec(3 * N, cplx{1.0, 0.0}));
    const auto t = compute_trace(r, N, Algorithm::nirs);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_NEAR(std::abs(t.g[i] - cplx(128.0, 0.0)), 0.0, 1e-9);
        EXPECT_NEAR(t.m[i], 128.0, 1e-9);
        EXPECT_NEAR(std::abs(t.q[i] - cplx(128.0, 0.0)), 0.0, 1e-9);
    }
}

TEST(Correlator, IterativeMatchesDirectSums) {
    const auto samples = oracle::random_cvec(1000, 21);
    const auto r = as_signal(samples);
    const auto t = compute_trace(r, N, Algorithm::nirs);
    ASSERT_EQ(t.size(), 1000 - N + 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        worst = std::max(worst, std::abs(t.g[i] - oracle::g_direct(samples, i, N)));
        worst = std::max(worst, std::abs(t.m[i] - oracle::m_direct(samples, i, N)));
        worst = std::max(worst, std::abs(t.q[i] - oracle::q_direct(samples, i, N)));
    }
    EXPECT_LT(worst, 1e-9 * N);
}

TEST(Correlator, PureToneValues) {
    cvec v(2 * N);
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = std::polar(1.0, 2.0 * kPi * 24.5 * n / N);
    const auto t = compute_trace(as_signal(v), N, Algorithm::nirs);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_NEAR(std::abs(t.g[i] - cplx(0.0, 128.0)), 0.0, 1e-9);
        EXPECT_NEAR(std::abs(t.q[i] - std::polar(128.0, 0.25 * kPi)), 0.0, 1e-9);
        EXPECT_LT(std::abs(t.g_nirs[i]), 1e-9);
    }
}

TEST(Correlator, WindowBounds) {
    Correlator c(N, Algorithm::sc);
    const cvec short_buf(N - 1);
    EXPECT_THROW(c.reset(short_buf, 0), std::out_of_range);
    const cvec buf(N + 1);
    c.reset(buf, 0);
    EXPECT_TRUE(c.can_step());
    c.step();
    EXPECT_FALSE(c.can_step());
    EXPECT_THROW(c.step(), std::out_of_range);
    EXPECT_THROW(Correlator(10, Algorithm::sc), std::invalid_argument);
}

TEST(GNirs, Cases) {
    const cplx g{0.0, 128.0};
    const cplx q = std::polar(128.0, 0.25 * kPi);
    EXPECT_LT(std::abs(g_nirs(g, q)), 1e-12);
    EXPECT_EQ(g_nirs({5.0, 2.0}, {}), cplx(5.0, 2.0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 200; ++i) {
        const cplx qq{gauss(rng), gauss(rng)};
        const cplx corr = cplx{} - g_nirs({}, qq);
        EXPECT_NEAR(std::abs(corr) / std::abs(qq), 1.0, 1e-12);
        // doubled argument
        EXPECT_NEAR(std::abs(corr / std::abs(corr) - std::polar(1.0, 2.0 * std::arg(qq))), 0.0, 1e-12);
    }
}

TEST(GNirs, PureToneCancellationProperty) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = 0.01 + 100.0 * u(rng);
        const double f = -128.0 + 256.0 * u(rng);
        const double phi = 2.0 * kPi * u(rng);
        cvec v(3 * N);
        for (std::size_t n = 0; n < v.size(); ++n) v[n] = std::polar(a, 2.0 * kPi * f * n / N + phi);
        const auto t = compute_trace(as_signal(v), N, Algorithm::nirs);
        for (const auto& gn : t.g_nirs) ASSERT_LT(std::abs(gn), 1e-9 * a * a * N / 2.0);
    }
}

TEST(Detect, CleanPreambleTimingAndPeak) {
    const auto r = clean_preamble(3);
    const auto t = compute_trace(r, N, Algorithm::sc);
    const auto res = detect(t, Algorithm::sc);
    EXPECT_GE(res.n_hat, -32);
    EXPECT_LE(res.n_hat, 0);
    EXPECT_NEAR(res.peak_value, 1.0, 1e-6);
}

TEST(Detect, CleanPreambleCfo) {
    const auto r = impair::apply_cfo(clean_preamble(4), 0.37, N);
    for (auto alg : {Algorithm::sc, Algorithm::nirs}) {
        for (std::int64_t n : {-32, -10, 0}) {
            const auto res = detect(compute_trace(r, N, alg, n, n), alg);
            EXPECT_EQ(res.n_hat, n);
            EXPECT_NEAR(res.nu_hat, 0.37, 1e-10);
        }
    }
}

TEST(Detect, ZeroVarianceCfoGrid) {
    for (double nu : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto r = impair::apply_cfo(clean_preamble(seed), nu, N);
            const auto res = detect(compute_trace(r, N, Algorithm::nirs, 0, 0), Algorithm::nirs);
            EXPECT_NEAR(res.nu_hat, nu, 1e-10);
        }
    }
}

TEST(Detect, Midpoint90OnSymmetricPlateau) {
    MetricTrace t;
    t.algorithm = Algorithm::sc;
    t.n_first = -50;
    const std::size_t len = 101, centre = 60, w = 7;
    t.m.assign(len, 1.0);
    t.g.assign(len, cplx{1.0, 0.0});
    t.metric_sc.assign(len, 0.1);
    for (std::size_t i = centre - w; i <= centre + w; ++i) t.metric_sc[i] = 0.95;
    t.metric_sc[centre + 3] = 1.0;  // off-centre global peak
    t.metric_nirs = t.metric_sc;
    const auto res = detect(t, Algorithm::sc, TimingRule::midpoint90);
    EXPECT_EQ(res.n_hat, t.n_at(centre));
    EXPECT_EQ(detect(t, Algorithm::sc, TimingRule::argmax).n_hat, t.n_at(centre + 3));
}

TEST(Detect, Errors) {
    MetricTrace empty;
    EXPECT_THROW(detect(empty, Algorithm::sc), std::invalid_argument);
    const auto zeros = compute_trace(as_signal(cvec(2 * N)), N, Algorithm::nirs);
    EXPECT_THROW(detect(zeros, Algorithm::sc), NoSignal);
    const auto sc = compute_trace(as_signal(oracle::random_cvec(2 * N, 1)), N, Algorithm::sc);
    EXPECT_THROW(detect(sc, Algorithm::nirs), std::invalid_argument);
}

TEST(OpCount, TableRows) {
    const auto r = as_signal(oracle::random_cvec(1000 + N, 5));
    const auto sc = compute_trace(r, N, Algorithm::sc);
    const auto nirs = compute_trace(r, N, Algorithm::nirs);
    ASSERT_EQ(sc.steps, 1000u);
    const auto a = count_report(sc.ops, sc.steps);
    EXPECT_EQ(a.add_sub, 10.0);
    EXPECT_EQ(a.mul_div, 10.0);
    EXPECT_EQ(a.sqrt_ops, 0.0);
    const auto b = count_report(nirs.ops, nirs.steps);
    EXPECT_EQ(b.add_sub, 24.0);
    EXPECT_EQ(b.mul_div, 24.0);
    EXPECT_EQ(b.sqrt_ops, 1.0);
    EXPECT_THROW(count_report(sc.ops, 0), std::invalid_argument);
}

TEST(OpCount, MonotoneAndInitExcluded) {
    const auto buf = oracle::random_cvec(2 * N, 6);
    Correlator c(N, Algorithm::nirs);
    c.reset(buf, 0);
    EXPECT_EQ(c.ops(), OpCounters{});
    OpCounters prev = c.ops();
    while (c.can_step()) {
        c.step();
        EXPECT_GE(c.ops().real_add_sub, prev.real_add_sub);
        EXPECT_GE(c.ops().real_mul_div, prev.real_mul_div);
        prev = c.ops();
    }
}

TEST(Metric, CauchySchwarzBound) {
    const auto t = compute_trace(as_signal(oracle::random_cvec(3000, 8)), N, Algorithm::sc);
    for (double v : t.metric_sc) EXPECT_LE(v, 1.0 + 1e-9);
    // |G|^2 <= P1 * M holds everywhere; |G/M|^2 <= 1 needs P1 <= M
    const auto r = clean_preamble(9);
    const auto t2 = compute_trace(r, N, Algorithm::sc);
    for (std::size_t i = 0; i < t2.size(); ++i) {
        const auto base = static_cast<std::size_t>(r.origin + t2.n_at(i));
        double p1 = 0.0;
        for (std::size_t m = 0; m < N / 2; ++m) p1 += std::norm(r.samples[base + m]);
        EXPECT_LE(std::norm(t2.g[i]), p1 * t2.m[i] * (1.0 + 1e-9) + 1e-300);
        if (p1 <= t2.m[i]) {
            EXPECT_LE(t2.metric_sc[i], 1.0 + 1e-9);
        }
    }
}

TEST(Metric, ScaleInvariantDecision) {
    auto r = impair::apply_cfo(clean_preamble(10), 0.2, N);
    const auto noise = oracle::random_cvec(r.size(), 11, 0.05);
    for (std::size_t i = 0; i < r.size(); ++i) r.samples[i] += noise[i];
    for (auto alg : {Algorithm::sc, Algorithm::nirs}) {
        const auto base = detect(compute_trace(r, N, alg), alg).n_hat;
        for (double scale : {1e-3, 0.5, 7.0, 1e4}) {
            TimeSignal s = r;
            for (auto& v : s.samples) v *= scale;
            EXPECT_EQ(detect(compute_trace(s, N, alg), alg).n_hat, base);
        }
    }
}

TEST(Metric, PlateauMatchesSecondMomentOracle) {
    // NBI + AWGN only. Second-moment oracle:
    // E|G|^2 = (N/2)^2 si^4 + (N/2)(sw^4 + 2 si^2 sw^2),  E[M] = (N/2)(si^2 + sw^2)
    std::mt19937_64 rng(12);
    for (double gamma : {0.1, 1.0, 10.0}) {
        const double si2 = gamma / (1.0 + gamma), sw2 = 1.0 / (1.0 + gamma);
        impair::NbiSpec spec;
        double mean = 0.0;
        constexpr int kRuns = 40;
        for (int run = 0; run < kRuns; ++run) {
            spec.phase0 = 2.0 * kPi * run / kRuns;
            const auto tone = impair::gen_nbi(spec, 1000 + N, N, rng);
            const auto w = oracle::random_cvec(1000 + N, rng(), std::sqrt(sw2));
            cvec v(1000 + N);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(si2) * tone.samples[i] + w[i];
            const auto t = compute_trace(as_signal(v), N, Algorithm::sc, 0, 999);
            for (double x : t.metric_sc) mean += x;
        }
        mean /= 1000.0 * kRuns;
        const double h = N / 2.0;
        const double oracle = (h * h * si2 * si2 + h * (sw2 * sw2 + 2.0 * si2 * sw2)) / (h * h * (si2 + sw2) * (si2 + sw2));
        EXPECT_NEAR(mean / oracle, 1.0, 0.1) << "gamma " << gamma;
    }
}

TEST(TraceCsv, Header) {
    const auto t = compute_trace(as_signal(oracle::random_cvec(N + 2, 1)), N, Algorithm::nirs);
    std::ostringstream os;
    write_trace_csv(os, t);
    const auto s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "n,re_g,im_g,m,re_q,im_q,re_g_nirs,im_g_nirs,metric_sc,metric_nirs");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}
