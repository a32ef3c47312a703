#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bellsim/core.hpp"
#include "bellsim/rng.hpp"

namespace bellsim {

// Coincidence counts for one setting pair over a fixed accumulation time.
// Outcome pairs are indexed ++, +-, -+, -- (Alice's outcome first).
// `main` holds the prompt coincidence window, `delayed` the shifted window
// used to estimate accidentals.
struct CountsRecord {
    std::array<std::int64_t, 4> main{};
    std::array<std::int64_t, 4> delayed{};
    double duration = 1.0;  // seconds
};

// Poissonian source model: `pair_rate` scales true coincidences (counts/s
// across all four outcomes), `accidental_rate` is a uniform background per
// outcome pair (counts/s), present in both coincidence windows.
struct NoiseModel {
    double pair_rate = 1000.0;
    double accidental_rate = 0.0;
};

// Classical bound raised by a safety margin delta: values are counted as
// violations only when strictly above 2 + delta.
class ShiftedBound {
  public:
    explicit ShiftedBound(double delta);

    double delta() const { return delta_; }
    double bound() const { return 2.0 + delta_; }

  private:
    double delta_;
};

// One draw from Poisson(mean). Exact inversion by product of uniforms for
// small means, transformed rejection (PTRS) for mean >= 10.
std::int64_t poisson_sample(double mean, RngStream& rng);

// Simulate the four main-window and four delayed-window counts for one
// setting pair. Each main count is Poisson with mean
//   joint_probability * pair_rate * duration + accidental_rate * duration,
// each delayed count Poisson(accidental_rate * duration), all independent.
// Draw order is fixed (main 0..3, then delayed 0..3) for reproducibility.
CountsRecord simulate_counts(const BlochVector& a, const BlochVector& b,
                             const WernerState& state, const NoiseModel& noise,
                             double duration, RngStream& rng);

// Accidental-corrected counts: main[k] - delayed[k] per outcome pair.
// May be negative; deliberately not floored (flooring would bias the
// correlator estimate).
std::array<double, 4> subtract_accidentals(const CountsRecord& c);

// Correlator estimate (N++ + N-- - N+- - N-+) / total, clamped to [-1, 1].
// Throws std::invalid_argument when the total is not positive.
double estimate_correlator(const std::array<double, 4>& corrected);

// Counts for every setting pair of one trial: counts[x][y] belongs to
// Alice's setting x and Bob's setting y.
using CountsGrid = std::vector<std::vector<CountsRecord>>;

// Monte Carlo error bar on the maximal CHSH value: every observed count is
// redrawn as Poisson with the observed value as mean, the correlator table
// is re-estimated (with or without accidental subtraction, matching how the
// point estimate was made) and chsh_max recomputed; returns the sample
// standard deviation over `resamples` tables. resamples = 0 disables
// resampling and returns 0; otherwise resamples must be >= 100.
double chsh_error_poisson(const CountsGrid& counts, bool subtract,
                          int resamples, RngStream& rng);

// Fraction of values strictly above the bound, with binomial standard error.
struct ViolationEstimate {
    double probability = 0.0;
    double std_error = 0.0;
};

ViolationEstimate violation_probability(std::span<const double> values,
                                        const ShiftedBound& bound);

// Visibility inferred from a mean CHSH value against a V = 1 reference mean.
double estimate_visibility_from_mean(double mean_chsh, double reference_mean);

}  // namespace bellsim
