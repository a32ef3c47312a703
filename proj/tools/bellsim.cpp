// Command-line front end: run Bell-test experiments and emit plot-ready
// CSV/JSON tables plus a one-line summary.
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bellsim/chsh.hpp"
#include "bellsim/core.hpp"
#include "bellsim/experiments.hpp"
#include "bellsim/output.hpp"
#include "bellsim/sampling.hpp"
#include "bellsim/statistics.hpp"
#include "bellsim/version.hpp"

namespace {

using namespace bellsim;

// Options shared by the experiment subcommands; counts mode switches on
// when --counts-rate is given.
struct CommonOpts {
    std::int64_t trials = 100;
    double visibility = 1.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    double counts_rate = 1000.0;
    bool counts_on = false;
    double duration = 1.0;
    double accidental_rate = 0.0;
    bool raw = false;
    int resamples = 200;
    std::string out = "-";
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o, std::int64_t default_trials) {
    o.trials = default_trials;
    cmd->add_option("--trials", o.trials, "Number of Bell trials")
        ->capture_default_str();
    cmd->add_option("--visibility", o.visibility, "Werner state visibility V in [0,1]")
        ->capture_default_str();
    cmd->add_option("--delta", o.delta,
                    "Raise the violation threshold to 2 + delta")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "RNG seed; fixes every random choice")
        ->capture_default_str();
    auto* rate = cmd->add_option("--counts-rate", o.counts_rate,
                                 "Coincidence rate (counts/s); enables "
                                 "finite-statistics counts mode");
    auto* dur = cmd->add_option("--duration", o.duration,
                                "Seconds counted per setting pair")
                    ->capture_default_str();
    auto* acc = cmd->add_option("--accidental-rate", o.accidental_rate,
                                "Accidental background (counts/s per outcome pair)")
                    ->capture_default_str();
    auto* raw = cmd->add_flag("--raw,!--corrected", o.raw,
                              "Skip (or apply, the default) accidental subtraction");
    auto* res = cmd->add_option("--resamples", o.resamples,
                                "Bootstrap resamples for error bars; 0 disables")
                    ->capture_default_str();
    dur->needs(rate);
    acc->needs(rate);
    raw->needs(rate);
    res->needs(rate);
    rate->each([&o](const std::string&) { o.counts_on = true; });
    cmd->add_option("--out", o.out, "Output path; '-' for stdout")
        ->capture_default_str();
    cmd->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

ExperimentConfig make_config(const CommonOpts& o, SettingsMode mode, int m) {
    ExperimentConfig cfg;
    cfg.mode = mode;
    cfg.m = m;
    cfg.visibility = o.visibility;
    cfg.trials = o.trials;
    cfg.bound = ShiftedBound(o.delta);
    cfg.seed = o.seed;
    if (o.counts_on) {
        CountsConfig cc;
        cc.noise.pair_rate = o.counts_rate;
        cc.noise.accidental_rate = o.accidental_rate;
        cc.duration = o.duration;
        cc.subtract_accidentals = !o.raw;
        cc.resamples = o.resamples;
        cfg.counts = cc;
    }
    return cfg;
}

const char* mode_name(SettingsMode mode) {
    switch (mode) {
        case SettingsMode::Triads: return "triads";
        case SettingsMode::Random: return "random";
        case SettingsMode::UnbiasedPairs: return "unbiased-pairs";
        case SettingsMode::Voltages: return "voltages";
    }
    return "?";
}

SettingsMode parse_mode(const std::string& name) {
    if (name == "random") return SettingsMode::Random;
    if (name == "unbiased-pairs") return SettingsMode::UnbiasedPairs;
    if (name == "voltages") return SettingsMode::Voltages;
    if (name == "triads") return SettingsMode::Triads;
    throw std::invalid_argument("unknown mode: " + name);
}

MetaList base_meta(const std::string& command, const ExperimentConfig& cfg,
                   const CommonOpts& o) {
    MetaList meta;
    meta.emplace_back("tool", "bellsim");
    meta.emplace_back("version", kVersion);
    meta.emplace_back("command", command);
    meta.emplace_back("mode", mode_name(cfg.mode));
    meta.emplace_back("m", std::to_string(cfg.m));
    meta.emplace_back("visibility", format_double(cfg.visibility));
    meta.emplace_back("delta", format_double(cfg.bound.delta()));
    meta.emplace_back("seed", std::to_string(cfg.seed));
    meta.emplace_back("trials", std::to_string(cfg.trials));
    meta.emplace_back("counts", cfg.counts ? "1" : "0");
    if (cfg.counts) {
        meta.emplace_back("counts_rate", format_double(cfg.counts->noise.pair_rate));
        meta.emplace_back("duration", format_double(cfg.counts->duration));
        meta.emplace_back("accidental_rate",
                          format_double(cfg.counts->noise.accidental_rate));
        meta.emplace_back("corrected",
                          cfg.counts->subtract_accidentals ? "1" : "0");
        meta.emplace_back("resamples", std::to_string(cfg.counts->resamples));
    }
    if (cfg.mode == SettingsMode::Voltages) {
        meta.emplace_back("voltage_max", format_double(cfg.voltage_max));
    }
    (void)o;
    return meta;
}

// Human summary goes to stdout when the data went to a file, to stderr when
// the data went to stdout (so machine output stays parseable).
void print_summary(const std::string& out_path, const std::string& line) {
    if (out_path == "-") {
        std::cerr << line << '\n';
    } else {
        std::cout << line << '\n';
    }
}

int run_trials_command(const std::string& command, const CommonOpts& o,
                       SettingsMode mode, int m) {
    const ExperimentConfig cfg = make_config(o, mode, m);
    const std::vector<TrialResult> results = run_trials(cfg);

    const MetaList meta = base_meta(command, cfg, o);
    const std::string content = o.format == "json" ? trials_to_json(results, meta)
                                                   : trials_to_csv(results, meta);
    write_text(o.out, content);

    double sum = 0.0;
    double lo = results.front().chsh.value;
    double hi = lo;
    std::int64_t violated = 0;
    for (const TrialResult& r : results) {
        sum += r.chsh.value;
        lo = std::min(lo, r.chsh.value);
        hi = std::max(hi, r.chsh.value);
        violated += r.violated ? 1 : 0;
    }
    const double n = static_cast<double>(results.size());
    char line[256];
    std::snprintf(line, sizeof(line),
                  "summary: trials=%lld mean=%.6g min=%.6g max=%.6g "
                  "violated=%lld (%.4g%%) bound=%.6g",
                  static_cast<long long>(cfg.trials), sum / n, lo, hi,
                  static_cast<long long>(violated), 100.0 * violated / n,
                  cfg.bound.bound());
    print_summary(o.out, line);
    return 0;
}

int run_hist_command(const CommonOpts& o, SettingsMode mode, int m,
                     double bin_width) {
    const ExperimentConfig cfg = make_config(o, mode, m);
    const std::vector<TrialResult> results = run_trials(cfg);
    std::vector<double> values;
    values.reserve(results.size());
    for (const TrialResult& r : results) values.push_back(r.chsh.value);

    const std::vector<HistogramBin> bins = distribution_histogram(values, bin_width);
    MetaList meta = base_meta("hist", cfg, o);
    meta.emplace_back("bin_width", format_double(bin_width));
    const std::string content = o.format == "json" ? histogram_to_json(bins, meta)
                                                   : histogram_to_csv(bins, meta);
    write_text(o.out, content);

    const auto* tallest = &bins.front();
    for (const HistogramBin& b : bins) {
        if (b.count > tallest->count) tallest = &b;
    }
    char line[256];
    std::snprintf(line, sizeof(line),
                  "summary: trials=%lld bins=%zu mode_bin=[%.6g,%.6g] "
                  "mode_count=%lld",
                  static_cast<long long>(cfg.trials), bins.size(), tallest->lo,
                  tallest->hi, static_cast<long long>(tallest->count));
    print_summary(o.out, line);
    return 0;
}

struct CurveOpts {
    std::string axis = "visibility";
    double v_from = 0.0;
    double v_to = 1.0;
    int points = 41;
    int m_from = 2;
    int m_to = 5;
};

int run_curve_command(const CommonOpts& o, const CurveOpts& c, SettingsMode mode,
                      int m, bool visibility_given) {
    const ExperimentConfig cfg = make_config(o, mode, m);
    MetaList meta = base_meta("curve", cfg, o);
    meta.emplace_back("axis", c.axis);

    ViolationCurve curve;
    if (c.axis == "visibility") {
        std::vector<double> grid;
        if (visibility_given) {
            grid.push_back(o.visibility);
        } else {
            if (c.points < 1) throw std::invalid_argument("--points must be >= 1");
            for (int i = 0; i < c.points; ++i) {
                const double t = c.points == 1
                                     ? 0.0
                                     : static_cast<double>(i) / (c.points - 1);
                grid.push_back(c.v_from + t * (c.v_to - c.v_from));
            }
            meta.emplace_back("v_from", format_double(c.v_from));
            meta.emplace_back("v_to", format_double(c.v_to));
            meta.emplace_back("points", std::to_string(c.points));
        }
        curve = violation_curve_vs_visibility(cfg, grid);
    } else {
        if (c.m_from > c.m_to) {
            throw std::invalid_argument("--m-from must be <= --m-to");
        }
        std::vector<int> grid;
        for (int v = c.m_from; v <= c.m_to; ++v) grid.push_back(v);
        meta.emplace_back("m_from", std::to_string(c.m_from));
        meta.emplace_back("m_to", std::to_string(c.m_to));
        curve = violation_curve_vs_m(cfg, grid);
    }

    const std::string content = o.format == "json" ? curve_to_json(curve, meta)
                                                   : curve_to_csv(curve, meta);
    write_text(o.out, content);

    char line[256];
    std::snprintf(line, sizeof(line),
                  "summary: points=%zu trials_per_point=%lld axis=%s", curve.size(),
                  static_cast<long long>(cfg.trials), c.axis.c_str());
    print_summary(o.out, line);
    return 0;
}

// ---------------------------------------------------------------------------
// `check`: fast cross-module invariant suite. One line per check; nonzero
// exit if anything fails.

bool report(const char* name, bool ok, const std::string& detail = "") {
    if (ok) {
        std::printf("ok   - %s\n", name);
    } else {
        std::printf("FAIL - %s%s%s\n", name, detail.empty() ? "" : ": ",
                    detail.c_str());
    }
    return ok;
}

bool check_rng_vectors() {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    const bool a = RngStream::philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) ==
                   A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u};
    const bool b =
        RngStream::philox4x32(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              A2{0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu};
    const bool c =
        RngStream::philox4x32(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              A2{0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u};
    return report("rng known-answer vectors", a && b && c);
}

// Measurement axis recovered from the explicit 2x2 conjugation U^dag Z U.
BlochVector axis_from_oracle(const MzSettings& s) {
    const Mat2c u = mz_unitary_oracle(s);
    std::complex<double> m[2][2];
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            // (U^dag sigma_Z U)_ij = conj(u[0][i]) u[0][j] - conj(u[1][i]) u[1][j]
            m[i][j] = std::conj(u[0][i]) * u[0][j] - std::conj(u[1][i]) * u[1][j];
        }
    }
    return BlochVector::normalized(m[1][0].real(), m[1][0].imag(), m[0][0].real());
}

bool check_mz_oracle() {
    RngStream rng(12345, 0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const MzSettings s(rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi));
        const BlochVector direct = mz_measurement_vector(s);
        const BlochVector oracle = axis_from_oracle(s);
        worst = std::max({worst, std::abs(direct.x() - oracle.x()),
                          std::abs(direct.y() - oracle.y()),
                          std::abs(direct.z() - oracle.z())});
    }
    return report("interferometer axis matches 2x2 conjugation", worst <= 1e-10,
                  "worst deviation " + format_double(worst));
}

double naive_chsh_max(const CorrelatorMatrix& e) {
    double best = -1.0;
    for (int xa = 0; xa < static_cast<int>(e.rows()); ++xa)
        for (int xa2 = xa + 1; xa2 < static_cast<int>(e.rows()); ++xa2)
            for (int yb = 0; yb < static_cast<int>(e.cols()); ++yb)
                for (int yb2 = yb + 1; yb2 < static_cast<int>(e.cols()); ++yb2)
                    for (int p = 0; p < 4; ++p) {
                        const double v = std::abs(
                            chsh_value(e, ChshWitness{xa, xa2, yb, yb2, p, 0.0}));
                        best = std::max(best, v);
                    }
    return best;
}

bool check_chsh_enumeration() {
    RngStream rng(777, 0);
    for (int i = 0; i < 100; ++i) {
        const int m = 2 + static_cast<int>(rng.next_u32() % 4u);
        CorrelatorMatrix e(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) e.at(r, c) = rng.uniform(-1.0, 1.0);
        if (chsh_max(e).value != naive_chsh_max(e)) {
            return report("chsh_max equals naive enumeration", false,
                          "mismatch at sample " + std::to_string(i));
        }
    }
    return report("chsh_max equals naive enumeration", true);
}

bool check_proof_witness() {
    RngStream rng(2024, 0);
    const WernerState unit(1.0);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const Triad a = random_triad(rng);
        const Triad b = random_triad(rng);
        const CorrelatorMatrix e = correlator_matrix(a.vectors(), b.vectors(), unit);
        const double w = proof_witness(e).value;
        const double mx = chsh_max(e).value;
        if (w > mx + 1e-12 || w < 2.0 - 1e-9) {
            return report("proof certificate stays within [2, chsh_max]", false,
                          "witness " + format_double(w) + " vs max " +
                              format_double(mx));
        }
        worst = std::max(worst, std::abs(mx - w));
    }
    return report("proof certificate stays within [2, chsh_max]", true,
                  "max certificate gap " + format_double(worst));
}

bool check_triads_always_violate() {
    ExperimentConfig cfg;
    cfg.mode = SettingsMode::Triads;
    cfg.m = 3;
    cfg.trials = 2000;
    cfg.seed = 99;
    const TrialSummary s = summarize_trials(cfg, 2.0);
    return report("V=1 triads always violate",
                  s.violated_count == s.trials && s.min > 2.0,
                  "min " + format_double(s.min));
}

bool check_noise_floor() {
    ExperimentConfig cfg;
    cfg.mode = SettingsMode::Triads;
    cfg.m = 3;
    cfg.trials = 2000;
    cfg.seed = 7;
    cfg.visibility = 1.0 / std::numbers::sqrt2;
    const TrialSummary s = summarize_trials(cfg, 2.0);
    return report("V = 1/sqrt(2) never violates", s.violated_count == 0,
                  "max " + format_double(s.max));
}

bool check_counts_estimator() {
    // a . b = 0.5 so the true correlator is -0.5.
    const BlochVector a(0.0, 0.0, 1.0);
    const BlochVector b = BlochVector::normalized(std::sqrt(3.0) / 2.0, 0.0, 0.5);
    NoiseModel noise;
    noise.pair_rate = 1e5;
    RngStream rng(31, 0);
    const CountsRecord rec = simulate_counts(a, b, WernerState(1.0), noise, 1.0, rng);
    const double est = estimate_correlator(subtract_accidentals(rec));
    return report("counts estimator recovers E = -0.5", std::abs(est + 0.5) < 0.02,
                  "estimate " + format_double(est));
}

bool check_thread_determinism() {
    ExperimentConfig cfg;
    cfg.mode = SettingsMode::Random;
    cfg.m = 3;
    cfg.trials = 3000;
    cfg.seed = 5;
    const char* saved = std::getenv("BELLSIM_THREADS");
    const std::string saved_value = saved ? saved : "";
    setenv("BELLSIM_THREADS", "1", 1);
    const std::string one = trials_to_csv(run_trials(cfg), {});
    setenv("BELLSIM_THREADS", "7", 1);
    const std::string seven = trials_to_csv(run_trials(cfg), {});
    if (saved) {
        setenv("BELLSIM_THREADS", saved_value.c_str(), 1);
    } else {
        unsetenv("BELLSIM_THREADS");
    }
    return report("results independent of thread count", one == seven);
}

bool check_violation_probability() {
    std::vector<double> values(100, 2.5);
    for (int i = 0; i < 5; ++i) values[static_cast<std::size_t>(i)] = 1.0;
    const ViolationEstimate est = violation_probability(values, ShiftedBound(0.0));
    const bool ok = std::abs(est.probability - 0.95) < 1e-12 &&
                    std::abs(est.std_error - 0.0217944947177) < 1e-9;
    return report("violation probability and binomial error", ok,
                  format_double(est.probability) + " +/- " +
                      format_double(est.std_error));
}

int run_check_command() {
    bool ok = true;
    ok &= check_rng_vectors();
    ok &= check_mz_oracle();
    ok &= check_chsh_enumeration();
    ok &= check_proof_witness();
    ok &= check_triads_always_violate();
    ok &= check_noise_floor();
    ok &= check_counts_estimator();
    ok &= check_thread_determinism();
    ok &= check_violation_probability();
    std::printf("%s\n", ok ? "all checks passed" : "CHECK FAILURES");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator for CHSH Bell tests with random "
                 "measurement settings"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.footer("Environment:\n  BELLSIM_THREADS=N   worker threads for trial "
               "loops (results never depend on it)");

    CommonOpts triads_opts;
    CLI::App* triads = app.add_subcommand(
        "triads", "Random orthonormal triads per party (m = 3)");
    add_common(triads, triads_opts, 100);

    CommonOpts random_opts;
    std::string random_mode = "random";
    int random_m = 2;
    CLI::App* random_cmd = app.add_subcommand(
        "random", "Independent random settings per party");
    add_common(random_cmd, random_opts, 100);
    random_cmd->add_option("--m", random_m, "Settings per party")
        ->capture_default_str();
    random_cmd
        ->add_option("--mode", random_mode, "Settings generator")
        ->check(CLI::IsMember({"random", "unbiased-pairs", "voltages"}))
        ->capture_default_str();

    CommonOpts curve_opts;
    CurveOpts curve_extra;
    std::string curve_mode = "random";
    int curve_m = 3;
    CLI::App* curve = app.add_subcommand(
        "curve", "Violation probability vs visibility or vs m");
    add_common(curve, curve_opts, 100000);
    CLI::Option* curve_vis = curve->get_option("--visibility");
    curve->add_option("--mode", curve_mode, "Settings generator")
        ->check(CLI::IsMember({"triads", "random", "unbiased-pairs", "voltages"}))
        ->capture_default_str();
    curve->add_option("--m", curve_m, "Settings per party (visibility axis)")
        ->capture_default_str();
    curve->add_option("--axis", curve_extra.axis, "Sweep variable")
        ->check(CLI::IsMember({"visibility", "m"}))
        ->capture_default_str();
    curve->add_option("--v-from", curve_extra.v_from, "Visibility grid start")
        ->capture_default_str();
    curve->add_option("--v-to", curve_extra.v_to, "Visibility grid end")
        ->capture_default_str();
    curve->add_option("--points", curve_extra.points, "Visibility grid points")
        ->capture_default_str();
    curve->add_option("--m-from", curve_extra.m_from, "First m (m axis)")
        ->capture_default_str();
    curve->add_option("--m-to", curve_extra.m_to, "Last m (m axis)")
        ->capture_default_str();

    CommonOpts hist_opts;
    std::string hist_mode = "triads";
    int hist_m = 3;
    double bin_width = 0.05;
    CLI::App* hist = app.add_subcommand(
        "hist", "Histogram of maximal CHSH values over trials");
    add_common(hist, hist_opts, 100000);
    hist->add_option("--mode", hist_mode, "Settings generator")
        ->check(CLI::IsMember({"triads", "random", "unbiased-pairs", "voltages"}))
        ->capture_default_str();
    hist->add_option("--m", hist_m, "Settings per party")->capture_default_str();
    hist->add_option("--bin-width", bin_width, "Histogram bin width")
        ->capture_default_str();

    CLI::App* check = app.add_subcommand(
        "check", "Run the cross-module invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message to the error stream
        return 1;
    }

    try {
        if (triads->parsed()) {
            return run_trials_command("triads", triads_opts, SettingsMode::Triads, 3);
        }
        if (random_cmd->parsed()) {
            const SettingsMode mode = parse_mode(random_mode);
            return run_trials_command("random", random_opts, mode, random_m);
        }
        if (curve->parsed()) {
            const SettingsMode mode = parse_mode(curve_mode);
            return run_curve_command(curve_opts, curve_extra, mode, curve_m,
                                     curve_vis->count() > 0);
        }
        if (hist->parsed()) {
            const SettingsMode mode = parse_mode(hist_mode);
            return run_hist_command(hist_opts, mode, hist_m, bin_width);
        }
        if (check->parsed()) {
            return run_check_command();
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
