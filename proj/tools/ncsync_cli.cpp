// Command-line front end: scenario runs, bandwidth sweeps, metric traces,
// appendix self-checks and operation counts.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ncsync/ncsync.hpp"

namespace fs = std::filesystem;
using namespace ncsync;

namespace {

struct Common {
    std::string scenario;
    std::size_t trials = 0;  // 0 = keep the file's value
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "results";
    unsigned threads = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

harness::Scenario load(const Common& c, std::string& raw) {
    raw = read_file(c.scenario);
    auto s = harness::load_scenario(c.scenario);
    if (c.trials > 0) s.n_trials = c.trials;
    if (c.seed_set) s.master_seed = c.seed;
    return s;
}

std::ofstream open_out(const fs::path& dir, const std::string& file) {
    fs::create_directories(dir);
    std::ofstream os(dir / file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / file).string());
    return os;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& raw,
                    const harness::Scenario& s, const std::vector<std::string>& outputs) {
    auto os = open_out(dir, "manifest.txt");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(harness::fnv1a64(raw)));
    os << "version = " << harness::kVersion << '\n'
       << "command = " << command << '\n'
       << "scenario = " << s.name << '\n'
       << "config_fnv1a64 = " << hash << '\n'
       << "seed = " << s.master_seed << '\n'
       << "trials = " << s.n_trials << '\n';
    for (const auto& o : outputs) os << "output = " << o << '\n';
}

std::string db_tag(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "minf";
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
    sub->add_option("scenario", c.scenario, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--trials", c.trials, "override trials per cell")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&c](std::uint64_t v) { c.seed = v, c.seed_set = true; }, "override master seed");
    if (with_out) sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads, 0 = all cores")->capture_default_str();
}

int cmd_run(const Common& c) {
    std::string raw;
    const auto s = load(c, raw);
    const auto rows = harness::run_scenario(s, {c.threads});
    const std::string file = s.name + ".csv";
    auto os = open_out(c.out, file);
    harness::write_results_csv(os, rows);
    write_manifest(c.out, "run", raw, s, {file});
    std::cout << "wrote " << (fs::path(c.out) / file).string() << " (" << rows.size() << " rows)\n";
    return 0;
}

int cmd_sweep(const Common& c) {
    std::string raw;
    const auto s = load(c, raw);
    const auto rows = harness::run_nbi_bandwidth_sweep(s, {c.threads});
    const std::string file = s.name + "_bandwidth.csv";
    auto os = open_out(c.out, file);
    harness::write_bandwidth_csv(os, rows);
    write_manifest(c.out, "sweep-bandwidth", raw, s, {file});
    std::cout << "wrote " << (fs::path(c.out) / file).string() << " (" << rows.size() << " rows)\n";
    return 0;
}

int cmd_trace(const Common& c, const std::vector<double>& cell, bool percentiles, const std::vector<long long>& range,
              std::uint64_t trial) {
    std::string raw;
    const auto s = load(c, raw);
    const double snr = cell.at(0), sir = cell.at(1);
    const std::string stem = s.name + "_trace_snr" + db_tag(snr) + "_sir" + db_tag(sir);
    std::string file;
    if (percentiles) {
        file = stem + "_percentiles.csv";
        const auto p = harness::emit_percentile_trace(s, snr, sir, s.n_trials, range.at(0), range.at(1), {c.threads});
        auto os = open_out(c.out, file);
        harness::write_percentile_csv(os, p);
    } else {
        file = stem + ".csv";
        auto t = harness::emit_trace(s, snr, sir, trial);
        auto os = open_out(c.out, file);
        sync::write_trace_csv(os, t);
    }
    write_manifest(c.out, percentiles ? "trace --percentiles" : "trace", raw, s, {file});
    std::cout << "wrote " << (fs::path(c.out) / file).string() << '\n';
    return 0;
}

// Quick oracle cross-checks, then the notch-width table.
int cmd_validate(const std::string& out, std::size_t trials) {
    const ofdm::SubcarrierMap map(256, ofdm::index_ranges({{-100, -1}, {1, 3}, {46, 100}}));
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int failures = 0;

    {
        const ofdm::FrameSpec spec(map, 32, 1, 1);
        double worst = 0.0;
        for (int g = 0; g < 5; ++g) {
            ofdm::QpskStream q(rng());
            cvec col(256);
            for (int k : map.occupied()) col[map.column_index(k)] = q();
            ofdm::SymbolGrid grid(map, 1);
            grid.set_column(0, col);
            auto y = ofdm::build_frame(grid, spec);
            y.samples.resize(y.size() + 256);
            const double f = 128.0 * u(rng), nu = 0.9 * u(rng);
            double peak = 0.0, err = 0.0;
            for (std::int64_t n = -159; n <= 255; ++n) {
                const cplx d = appendix::b_direct(y, f, nu, n, 256);
                peak = std::max(peak, std::abs(d));
                err = std::max(err, std::abs(d - appendix::b_closed_form(col, f, nu, n, spec)));
            }
            worst = std::max(worst, err / peak);
        }
        const bool ok = worst < 1e-9;
        failures += ok ? 0 : 1;
        std::printf("%s closed-form b(n) vs direct sum: max relative error %.3g\n", ok ? "ok  " : "FAIL", worst);
    }
    {
        const ofdm::FrameSpec spec(map, 32, 4, 1);
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            ofdm::QpskStream q(rng());
            ofdm::SymbolGrid grid(map, 4);
            grid.set_column(0, ofdm::generate_preamble(map, q));
            for (std::size_t p = 1; p < 4; ++p)
                for (int k : map.occupied()) grid.set(p, k, q());
            const auto y = ofdm::build_frame(grid, spec);
            const appendix::Tone tone{1.0 + std::abs(u(rng)), 128.0 * u(rng), kPi * u(rng)};
            const double nu = 0.9 * u(rng);
            const auto r = appendix::compose_received(y, tone, nu, 256);
            const auto [lo, hi] = sync::search_window(r, 256);
            const auto tr = sync::compute_trace(r, 256, sync::Algorithm::nirs, lo, hi);
            for (std::size_t i = 0; i < tr.size(); i += 97) {
                const auto d = appendix::decompose(y, tone, nu, tr.n_at(i), 256);
                worst = std::max({worst, std::abs(d.g() - tr.g[i]) / tr.m[i], std::abs(d.q() - tr.q[i]) / tr.m[i]});
            }
        }
        const bool ok = worst < 1e-10;
        failures += ok ? 0 : 1;
        std::printf("%s G/Q decomposition vs streaming correlator: max relative error %.3g\n", ok ? "ok  " : "FAIL",
                    worst);
    }

    std::vector<harness::CrossPowerRow> rows;
    for (double sir : {-10.0, 0.0, 10.0})
        for (auto timing : {appendix::TimingPosition::optimal, appendix::TimingPosition::random_data})
            for (int w : {0, 6, 14, 26, 42})
                rows.push_back({w, sir, timing, appendix::relative_cross_power(w, sir, timing, trials)});
    for (std::size_t i = 0; i < rows.size(); i += 5) {
        const bool ok = rows[i + 4].estimate.ci_high < rows[i].estimate.ci_low;
        failures += ok ? 0 : 1;
        std::printf("%s cross-term ratio at SIR %g dB, %s timing: %.4g (no notch) -> %.4g (42 SCs)\n",
                    ok ? "ok  " : "FAIL", rows[i].sir_db, std::string(appendix::to_string(rows[i].timing)).c_str(),
                    rows[i].estimate.ratio, rows[i + 4].estimate.ratio);
    }
    auto os = open_out(out, "cross_power.csv");
    harness::write_cross_power_csv(os, rows);
    std::cout << "wrote " << (fs::path(out) / "cross_power.csv").string() << '\n';
    return failures == 0 ? 0 : 1;
}

int cmd_count_ops(std::size_t samples) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    TimeSignal r;
    r.samples.resize(samples + 256);
    for (auto& v : r.samples) v = {g(rng), g(rng)};
    std::printf("algorithm,add_sub_per_sample,mul_div_per_sample,sqrt_per_sample,samples\n");
    for (auto alg : {sync::Algorithm::sc, sync::Algorithm::nirs}) {
        const auto t = sync::compute_trace(r, 256, alg);
        const auto c = sync::count_report(t.ops, t.steps);
        std::printf("%s,%g,%g,%g,%llu\n", std::string(sync::to_string(alg)).c_str(), c.add_sub, c.mul_div,
                    c.sqrt_ops, static_cast<unsigned long long>(t.steps));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NC-OFDM timing and frequency synchronization under narrowband interference"};
    app.set_version_flag("--version", harness::kVersion);
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "Monte-Carlo run over the scenario's SNR x SIR grid");
    add_common(run, run_opts);

    Common sweep_opts;
    auto* sweep = app.add_subcommand("sweep-bandwidth", "error probability against FM interferer bandwidth");
    add_common(sweep, sweep_opts);

    Common trace_opts;
    std::vector<double> cell;
    bool percentiles = false;
    std::vector<long long> range{-900, 400};
    std::uint64_t trial = 0;
    auto* trace = app.add_subcommand("trace", "timing-metric trace of one cell");
    add_common(trace, trace_opts);
    trace->add_option("--cell", cell, "SNR,SIR in dB (inf allowed)")->required()->expected(2)->delimiter(',');
    trace->add_flag("--percentiles", percentiles, "10/50/90th percentiles over --trials frames");
    trace->add_option("--range", range, "frame index range lo,hi for percentiles")->expected(2)->delimiter(',');
    trace->add_option("--trial", trial, "trial index for a single trace")->capture_default_str();

    std::string validate_out = "results";
    std::size_t validate_trials = 1000;
    auto* validate = app.add_subcommand("validate-appendix", "closed-form and decomposition checks, notch table");
    validate->add_option("--out", validate_out, "output directory")->capture_default_str();
    validate->add_option("--trials", validate_trials, "trials per notch width")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::size_t ops_samples = 10000;
    auto* ops = app.add_subcommand("count-ops", "per-sample arithmetic of both correlators");
    ops->add_option("--samples", ops_samples, "samples to run")->check(CLI::PositiveNumber)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts);
        if (*trace) return cmd_trace(trace_opts, cell, percentiles, range, trial);
        if (*validate) return cmd_validate(validate_out, validate_trials);
        if (*ops) return cmd_count_ops(ops_samples);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
