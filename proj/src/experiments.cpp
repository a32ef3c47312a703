#include "bellsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "bellsim/sampling.hpp"

namespace bellsim {

namespace {

// Trials are processed in fixed-size blocks so that block boundaries (and
// therefore any per-block reduction order) never depend on the thread count.
constexpr std::int64_t kTrialBlock = 1024;

// Stream reserved for the once-per-experiment calibration draw.
constexpr std::uint64_t kCalibrationStream = ~std::uint64_t{0};

// Disjoint substreams of one trial.
enum : std::uint64_t { kPhaseSettings = 0, kPhaseCounts = 1, kPhaseResampling = 2 };

std::uint64_t trial_stream(std::int64_t trial, std::uint64_t phase) {
    return static_cast<std::uint64_t>(trial) * 4 + phase;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) {
        throw std::invalid_argument("config: trials must be >= 1");
    }
    if (cfg.m < 2) {
        throw std::invalid_argument("config: m must be >= 2");
    }
    if (cfg.mode == SettingsMode::Triads && cfg.m != 3) {
        throw std::invalid_argument("config: triads mode requires m = 3");
    }
    if (cfg.mode == SettingsMode::UnbiasedPairs && cfg.m != 2) {
        throw std::invalid_argument("config: unbiased-pairs mode requires m = 2");
    }
    if (cfg.mode == SettingsMode::Voltages && !(cfg.voltage_max > 0.0)) {
        throw std::invalid_argument("config: voltage_max must be > 0");
    }
    if (!(cfg.visibility >= 0.0 && cfg.visibility <= 1.0)) {
        throw std::invalid_argument("config: visibility must be in [0, 1]");
    }
    if (cfg.counts) {
        const CountsConfig& c = *cfg.counts;
        if (!(c.duration > 0.0)) {
            throw std::invalid_argument("config: counts duration must be > 0");
        }
        if (!(c.noise.pair_rate >= 0.0) || !(c.noise.accidental_rate >= 0.0)) {
            throw std::invalid_argument("config: counts rates must be >= 0");
        }
        if (c.resamples != 0 && c.resamples < 100) {
            throw std::invalid_argument(
                "config: resamples must be 0 (disabled) or >= 100");
        }
    }
}

VoltageCals resolve_calibrations(const ExperimentConfig& cfg) {
    if (cfg.calibrations) return *cfg.calibrations;
    RngStream rng(cfg.seed, kCalibrationStream);
    auto draw = [&rng]() {
        const double alpha = rng.uniform(0.0, kTwoPi);
        const double beta = rng.uniform(0.12, 0.18);
        return PhaseShifterCal(alpha, beta);
    };
    // Braced-init evaluates left to right: a1, a2, b1, b2.
    return VoltageCals{draw(), draw(), draw(), draw()};
}

struct TrialSettings {
    std::vector<BlochVector> alice;
    std::vector<BlochVector> bob;
};

// m directions for one party through its two uncalibrated shifters.
std::vector<BlochVector> voltage_settings(int m, double vmax,
                                          const PhaseShifterCal& shifter1,
                                          const PhaseShifterCal& shifter2,
                                          RngStream& rng) {
    const std::vector<double> volts = random_voltages(rng, 2 * m, vmax);
    std::vector<BlochVector> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double phi1 = phase_from_voltage(volts[2 * i], shifter1);
        const double phi2 = phase_from_voltage(volts[2 * i + 1], shifter2);
        out.push_back(mz_measurement_vector(MzSettings(phi1, phi2)));
    }
    return out;
}

TrialSettings draw_settings(const ExperimentConfig& cfg, const VoltageCals* cals,
                            RngStream& rng) {
    TrialSettings s;
    switch (cfg.mode) {
        case SettingsMode::Triads: {
            const Triad a = random_triad(rng);
            const Triad b = random_triad(rng);
            s.alice.assign(a.vectors().begin(), a.vectors().end());
            s.bob.assign(b.vectors().begin(), b.vectors().end());
            break;
        }
        case SettingsMode::Random: {
            s.alice.reserve(static_cast<std::size_t>(cfg.m));
            s.bob.reserve(static_cast<std::size_t>(cfg.m));
            for (int i = 0; i < cfg.m; ++i) s.alice.push_back(random_unit_vector(rng));
            for (int i = 0; i < cfg.m; ++i) s.bob.push_back(random_unit_vector(rng));
            break;
        }
        case SettingsMode::UnbiasedPairs: {
            const auto [a1, a2] = random_unbiased_pair(rng);
            const auto [b1, b2] = random_unbiased_pair(rng);
            s.alice = {a1, a2};
            s.bob = {b1, b2};
            break;
        }
        case SettingsMode::Voltages: {
            s.alice = voltage_settings(cfg.m, cfg.voltage_max, cals->a1, cals->a2, rng);
            s.bob = voltage_settings(cfg.m, cfg.voltage_max, cals->b1, cals->b2, rng);
            break;
        }
    }
    return s;
}

std::array<double, 4> raw_counts(const CountsRecord& rec) {
    std::array<double, 4> out{};
    for (int k = 0; k < 4; ++k) out[k] = static_cast<double>(rec.main[k]);
    return out;
}

struct TrialEval {
    ChshWitness witness;
    std::optional<double> error;
};

TrialEval evaluate_trial(const ExperimentConfig& cfg, const VoltageCals* cals,
                         std::int64_t trial) {
    RngStream settings_rng(cfg.seed, trial_stream(trial, kPhaseSettings));
    const TrialSettings s = draw_settings(cfg, cals, settings_rng);
    const WernerState state(cfg.visibility);

    TrialEval out;
    if (!cfg.counts) {
        out.witness = chsh_max(correlator_matrix(s.alice, s.bob, state));
        return out;
    }

    const CountsConfig& cc = *cfg.counts;
    const std::size_t m = s.alice.size();
    RngStream counts_rng(cfg.seed, trial_stream(trial, kPhaseCounts));
    CountsGrid grid(m, std::vector<CountsRecord>(m));
    CorrelatorMatrix em(m, m);
    for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t y = 0; y < m; ++y) {
            grid[x][y] = simulate_counts(s.alice[x], s.bob[y], state, cc.noise,
                                         cc.duration, counts_rng);
            const std::array<double, 4> c = cc.subtract_accidentals
                                                ? subtract_accidentals(grid[x][y])
                                                : raw_counts(grid[x][y]);
            // A pair with no net counts carries no information; record 0
            // rather than aborting the whole run on one unlucky draw.
            const double total = c[0] + c[1] + c[2] + c[3];
            em.at(x, y) = total > 0.0 ? estimate_correlator(c) : 0.0;
        }
    }
    out.witness = chsh_max(em);
    if (cc.resamples > 0) {
        RngStream boot_rng(cfg.seed, trial_stream(trial, kPhaseResampling));
        out.error = chsh_error_poisson(grid, cc.subtract_accidentals, cc.resamples,
                                       boot_rng);
    }
    return out;
}

// Run fn(block, lo, hi) over all blocks of [0, n), possibly concurrently.
void for_each_block(std::int64_t n,
                    const std::function<void(std::int64_t, std::int64_t,
                                             std::int64_t)>& fn) {
    const std::int64_t n_blocks = (n + kTrialBlock - 1) / kTrialBlock;
    const int threads = static_cast<int>(
        std::min<std::int64_t>(resolve_thread_count(), n_blocks));
    if (threads <= 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) {
            fn(b, b * kTrialBlock, std::min(n, (b + 1) * kTrialBlock));
        }
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        try {
            for (;;) {
                const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
                if (b >= n_blocks) return;
                fn(b, b * kTrialBlock, std::min(n, (b + 1) * kTrialBlock));
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

const VoltageCals* maybe_calibrations(const ExperimentConfig& cfg,
                                      std::optional<VoltageCals>& storage) {
    if (cfg.mode != SettingsMode::Voltages) return nullptr;
    storage = resolve_calibrations(cfg);
    return &*storage;
}

}  // namespace

int resolve_thread_count() {
    if (const char* env = std::getenv("BELLSIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 1024) {
            return static_cast<int>(v);
        }
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::optional<VoltageCals> cals_storage;
    const VoltageCals* cals = maybe_calibrations(cfg, cals_storage);
    const double threshold = cfg.bound.bound();

    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
    for_each_block(cfg.trials, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t t = lo; t < hi; ++t) {
            TrialEval ev = evaluate_trial(cfg, cals, t);
            results[static_cast<std::size_t>(t)] =
                TrialResult{t, ev.witness, ev.error, ev.witness.value > threshold};
        }
    });
    return results;
}

TrialSummary summarize_trials(const ExperimentConfig& cfg, double below_threshold) {
    validate_config(cfg);
    std::optional<VoltageCals> cals_storage;
    const VoltageCals* cals = maybe_calibrations(cfg, cals_storage);
    const double bound = cfg.bound.bound();

    struct Partial {
        double sum = 0.0;
        double min = std::numeric_limits<double>::infinity();
        double max = -std::numeric_limits<double>::infinity();
        std::int64_t violated = 0;
        std::int64_t below = 0;
    };
    const std::int64_t n_blocks = (cfg.trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<Partial> partials(static_cast<std::size_t>(n_blocks));

    for_each_block(cfg.trials, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        Partial p;
        for (std::int64_t t = lo; t < hi; ++t) {
            const double v = evaluate_trial(cfg, cals, t).witness.value;
            p.sum += v;
            p.min = std::min(p.min, v);
            p.max = std::max(p.max, v);
            if (v > bound) ++p.violated;
            if (v < below_threshold) ++p.below;
        }
        partials[static_cast<std::size_t>(b)] = p;
    });

    // Reduce in block order: the result is independent of the thread count.
    TrialSummary s;
    s.trials = cfg.trials;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Partial& p : partials) {
        sum += p.sum;
        lo = std::min(lo, p.min);
        hi = std::max(hi, p.max);
        s.violated_count += p.violated;
        s.below_count += p.below;
    }
    s.mean = sum / static_cast<double>(cfg.trials);
    s.min = lo;
    s.max = hi;
    return s;
}

ViolationCurve violation_curve_vs_visibility(const ExperimentConfig& cfg,
                                             std::span<const double> v_grid) {
    validate_config(cfg);
    if (cfg.counts) {
        throw std::invalid_argument(
            "visibility curve requires exact mode: counts break the "
            "linear-in-V settings reuse");
    }
    if (v_grid.empty()) {
        throw std::invalid_argument("visibility grid must not be empty");
    }
    for (double v : v_grid) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("visibility grid values must be in [0, 1]");
        }
    }
    std::optional<VoltageCals> cals_storage;
    const VoltageCals* cals = maybe_calibrations(cfg, cals_storage);
    const double threshold = cfg.bound.bound();
    const std::size_t grid_size = v_grid.size();

    const std::int64_t n_blocks = (cfg.trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<std::vector<std::int64_t>> partial_hits(
        static_cast<std::size_t>(n_blocks));

    // One settings draw per trial serves the whole grid: each trial's CHSH
    // value at visibility v is v times its value at V = 1.
    ExperimentConfig base = cfg;
    base.visibility = 1.0;
    for_each_block(cfg.trials, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        std::vector<std::int64_t> hits(grid_size, 0);
        for (std::int64_t t = lo; t < hi; ++t) {
            const double s = evaluate_trial(base, cals, t).witness.value;
            for (std::size_t j = 0; j < grid_size; ++j) {
                if (v_grid[j] * s > threshold) ++hits[j];
            }
        }
        partial_hits[static_cast<std::size_t>(b)] = std::move(hits);
    });

    ViolationCurve curve(grid_size);
    const double n = static_cast<double>(cfg.trials);
    for (std::size_t j = 0; j < grid_size; ++j) {
        std::int64_t total = 0;
        for (const auto& hits : partial_hits) total += hits[j];
        const double p = static_cast<double>(total) / n;
        curve[j] = CurvePoint{v_grid[j], p, std::sqrt(p * (1.0 - p) / n)};
    }
    return curve;
}

ViolationCurve violation_curve_vs_m(const ExperimentConfig& cfg,
                                    std::span<const int> m_grid) {
    if (m_grid.empty()) {
        throw std::invalid_argument("m grid must not be empty");
    }
    for (int m : m_grid) {
        if (m < 2) {
            throw std::invalid_argument("m grid values must be >= 2");
        }
    }
    ViolationCurve curve;
    curve.reserve(m_grid.size());
    for (int m : m_grid) {
        ExperimentConfig point = cfg;
        point.m = m;
        const TrialSummary s = summarize_trials(point, 0.0);
        const double n = static_cast<double>(s.trials);
        const double p = static_cast<double>(s.violated_count) / n;
        curve.push_back(
            CurvePoint{static_cast<double>(m), p, std::sqrt(p * (1.0 - p) / n)});
    }
    return curve;
}

std::vector<HistogramBin> distribution_histogram(std::span<const double> values,
                                                 double bin_width) {
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("distribution_histogram: bin_width must be > 0");
    }
    const double upper = 2.0 * std::numbers::sqrt2;  // Tsirelson bound
    const auto n_bins = static_cast<std::size_t>(
        std::max<double>(1.0, std::ceil(upper / bin_width)));
    std::vector<HistogramBin> bins(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        bins[i].lo = static_cast<double>(i) * bin_width;
        bins[i].hi = std::min(static_cast<double>(i + 1) * bin_width, upper);
    }
    for (double v : values) {
        const double idx = std::floor(v / bin_width);
        const std::size_t i = static_cast<std::size_t>(
            std::clamp(idx, 0.0, static_cast<double>(n_bins - 1)));
        ++bins[i].count;
    }
    return bins;
}

}  // namespace bellsim
