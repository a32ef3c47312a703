#include "bellsim/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bellsim/chsh.hpp"

namespace bellsim {

namespace {

// Alice's outcome for outcome-pair index k (order ++, +-, -+, --).
int outcome_a(int k) { return (k & 2) ? -1 : +1; }
int outcome_b(int k) { return (k & 1) ? -1 : +1; }

// Knuth's product-of-uniforms method; exact, O(mean) draws.
std::int64_t poisson_knuth(double mean, RngStream& rng) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_double();
    } while (p > limit);
    return k - 1;
}

// Hoermann's PTRS transformed rejection; O(1) expected draws for large mean.
std::int64_t poisson_ptrs(double mean, RngStream& rng) {
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double();
        const double us = 0.5 - std::abs(u);
        if (!(us > 0.0)) continue;
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<std::int64_t>(kf);
    }
}

// Correlator from a resampled table; degenerate tables count as 0 so one
// empty resample cannot abort the whole error estimate.
double correlator_or_zero(const std::array<double, 4>& c) {
    const double total = c[0] + c[1] + c[2] + c[3];
    if (!(total > 0.0)) return 0.0;
    return std::clamp((c[0] + c[3] - c[1] - c[2]) / total, -1.0, 1.0);
}

}  // namespace

ShiftedBound::ShiftedBound(double delta) : delta_(delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("ShiftedBound: delta must be finite and >= 0");
    }
}

std::int64_t poisson_sample(double mean, RngStream& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("poisson_sample: mean must be finite and >= 0");
    }
    if (mean == 0.0) return 0;
    if (mean < 10.0) return poisson_knuth(mean, rng);
    return poisson_ptrs(mean, rng);
}

CountsRecord simulate_counts(const BlochVector& a, const BlochVector& b,
                             const WernerState& state, const NoiseModel& noise,
                             double duration, RngStream& rng) {
    if (!(duration > 0.0)) {
        throw std::invalid_argument("simulate_counts: duration must be > 0");
    }
    if (!(noise.pair_rate >= 0.0) || !(noise.accidental_rate >= 0.0)) {
        throw std::invalid_argument("simulate_counts: rates must be >= 0");
    }
    const double background = noise.accidental_rate * duration;
    CountsRecord rec;
    rec.duration = duration;
    for (int k = 0; k < 4; ++k) {
        const double p = joint_probability(a, b, state, outcome_a(k), outcome_b(k));
        rec.main[k] = poisson_sample(p * noise.pair_rate * duration + background, rng);
    }
    for (int k = 0; k < 4; ++k) {
        rec.delayed[k] = poisson_sample(background, rng);
    }
    return rec;
}

std::array<double, 4> subtract_accidentals(const CountsRecord& c) {
    std::array<double, 4> out{};
    for (int k = 0; k < 4; ++k) {
        out[k] = static_cast<double>(c.main[k]) - static_cast<double>(c.delayed[k]);
    }
    return out;
}

double estimate_correlator(const std::array<double, 4>& corrected) {
    const double total = corrected[0] + corrected[1] + corrected[2] + corrected[3];
    if (!(total > 0.0)) {
        throw std::invalid_argument("estimate_correlator: total count must be > 0");
    }
    const double e = (corrected[0] + corrected[3] - corrected[1] - corrected[2]) / total;
    return std::clamp(e, -1.0, 1.0);
}

double chsh_error_poisson(const CountsGrid& counts, bool subtract,
                          int resamples, RngStream& rng) {
    if (resamples == 0) return 0.0;
    if (resamples < 100) {
        throw std::invalid_argument(
            "chsh_error_poisson: resamples must be >= 100 (or 0 to disable)");
    }
    const std::size_t rows = counts.size();
    const std::size_t cols = rows > 0 ? counts[0].size() : 0;
    if (rows < 2 || cols < 2) {
        throw std::invalid_argument(
            "chsh_error_poisson: need at least a 2x2 grid of setting pairs");
    }
    for (const auto& row : counts) {
        if (row.size() != cols) {
            throw std::invalid_argument("chsh_error_poisson: ragged counts grid");
        }
    }

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(resamples));
    CorrelatorMatrix em(rows, cols);
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t x = 0; x < rows; ++x) {
            for (std::size_t y = 0; y < cols; ++y) {
                const CountsRecord& obs = counts[x][y];
                std::array<double, 4> c{};
                for (int k = 0; k < 4; ++k) {
                    double v = static_cast<double>(
                        poisson_sample(static_cast<double>(obs.main[k]), rng));
                    if (subtract) {
                        v -= static_cast<double>(poisson_sample(
                            static_cast<double>(obs.delayed[k]), rng));
                    }
                    c[k] = v;
                }
                em.at(x, y) = correlator_or_zero(c);
            }
        }
        values.push_back(chsh_max(em).value);
    }

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

ViolationEstimate violation_probability(std::span<const double> values,
                                        const ShiftedBound& bound) {
    if (values.empty()) {
        throw std::invalid_argument("violation_probability: empty value sequence");
    }
    const double threshold = bound.bound();
    std::size_t hits = 0;
    for (double v : values) {
        if (v > threshold) ++hits;
    }
    const double n = static_cast<double>(values.size());
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

double estimate_visibility_from_mean(double mean_chsh, double reference_mean) {
    if (!(reference_mean > 0.0)) {
        throw std::invalid_argument(
            "estimate_visibility_from_mean: reference mean must be > 0");
    }
    return mean_chsh / reference_mean;
}

}  // namespace bellsim
