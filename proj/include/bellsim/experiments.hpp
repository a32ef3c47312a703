#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bellsim/chsh.hpp"
#include "bellsim/core.hpp"
#include "bellsim/statistics.hpp"

namespace bellsim {

// How each party's measurement directions are drawn per trial.
enum class SettingsMode {
    Triads,         // orthonormal triad per party (m = 3)
    Random,         // m independent uniform directions per party
    UnbiasedPairs,  // orthogonal pair per party (m = 2)
    Voltages,       // m voltage pairs per party through uncalibrated shifters
};

// Finite-statistics layer: when present, correlators are estimated from
// simulated photon counts instead of computed exactly.
struct CountsConfig {
    NoiseModel noise{};
    double duration = 1.0;          // seconds per setting pair
    bool subtract_accidentals = true;
    int resamples = 200;            // bootstrap size for error bars; 0 disables
};

// Phase-voltage calibrations of the four on-chip shifters (two per party).
// Only the settings generator reads these; the analysis side never does.
struct VoltageCals {
    PhaseShifterCal a1, a2, b1, b2;
};

struct ExperimentConfig {
    SettingsMode mode = SettingsMode::Triads;
    int m = 3;                  // settings per party
    double visibility = 1.0;    // Werner state V
    std::int64_t trials = 100;
    ShiftedBound bound{0.0};    // violation threshold 2 + delta
    std::uint64_t seed = 0;
    std::optional<CountsConfig> counts;
    // Voltages mode: shifter calibrations; when absent they are drawn once
    // per experiment from a dedicated stream (alpha uniform in [0, 2*pi),
    // beta uniform in [0.12, 0.18] rad/V^2).
    std::optional<VoltageCals> calibrations;
    double voltage_max = 7.0;   // settings voltages drawn from [0, voltage_max]
};

struct TrialResult {
    std::int64_t trial_index = 0;
    ChshWitness chsh;                  // maximal witness for this trial
    std::optional<double> chsh_error;  // counts mode with resampling only
    bool violated = false;             // chsh.value > bound
};

// One point of a violation-probability curve.
struct CurvePoint {
    double axis = 0.0;  // V or m
    double probability = 0.0;
    double std_error = 0.0;
};

using ViolationCurve = std::vector<CurvePoint>;

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
};

// Streaming aggregate over trials. `below_count` uses summarize_trials'
// threshold argument; `violated_count` uses the configured bound.
struct TrialSummary {
    std::int64_t trials = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::int64_t violated_count = 0;
    std::int64_t below_count = 0;
};

// Worker threads for trial loops: BELLSIM_THREADS when set, otherwise the
// hardware concurrency; always at least 1. Thread count never changes
// results, only wall time.
int resolve_thread_count();

// Run cfg.trials independent Bell trials. Per trial: draw settings for the
// configured mode, build the correlator matrix (exactly, or through
// simulated counts), and keep the maximal CHSH witness. Deterministic given
// (seed, config) regardless of thread count.
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg);

// Same trial loop without materializing per-trial rows; suitable for very
// large trial counts. Counts violations against cfg.bound and values
// strictly below `below_threshold`. Error bars are skipped (they do not
// affect CHSH values).
TrialSummary summarize_trials(const ExperimentConfig& cfg, double below_threshold);

// Violation probability per visibility in v_grid (each in [0, 1]), reusing
// one settings draw per trial across the whole grid: correlators are linear
// in V, so a trial's value at visibility v is v times its V = 1 value.
// Exact mode only.
ViolationCurve violation_curve_vs_visibility(const ExperimentConfig& cfg,
                                             std::span<const double> v_grid);

// Violation probability per settings count in m_grid (each >= 2) at the
// configured visibility.
ViolationCurve violation_curve_vs_m(const ExperimentConfig& cfg,
                                    std::span<const int> m_grid);

// Fixed-width bins spanning [0, 2*sqrt(2)]; every value lands in a bin
// (out-of-range values clamp to the edge bins), so counts sum to the number
// of values.
std::vector<HistogramBin> distribution_histogram(std::span<const double> values,
                                                 double bin_width);

}  // namespace bellsim
