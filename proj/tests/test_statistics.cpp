#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "bellsim/chsh.hpp"
#include "bellsim/core.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/sampling.hpp"
#include "bellsim/statistics.hpp"
#include "doctest.h"

using namespace bellsim;

namespace {

const BlochVector kZ(0.0, 0.0, 1.0);

double poisson_pmf(double lambda, std::int64_t k) {
    const double kf = static_cast<double>(k);
    return std::exp(kf * std::log(lambda) - lambda - std::lgamma(kf + 1.0));
}

// Chi-square goodness of fit against the Poisson pmf. Values above `hi` are
// pooled into one tail cell; low-expectation cells are pooled forward so
// every cell has expected count >= 5.
double poisson_chi2(double lambda, const std::vector<std::int64_t>& samples) {
    const std::int64_t hi =
        static_cast<std::int64_t>(lambda + 6.0 * std::sqrt(lambda)) + 2;
    std::vector<double> observed(static_cast<std::size_t>(hi) + 2, 0.0);
    for (std::int64_t s : samples) {
        observed[static_cast<std::size_t>(std::min(s, hi + 1))] += 1.0;
    }
    const double n = static_cast<double>(samples.size());
    std::vector<double> expected(observed.size(), 0.0);
    double cdf_below_tail = 0.0;
    for (std::int64_t k = 0; k <= hi; ++k) {
        expected[static_cast<std::size_t>(k)] = n * poisson_pmf(lambda, k);
        cdf_below_tail += poisson_pmf(lambda, k);
    }
    expected.back() = n * std::max(0.0, 1.0 - cdf_below_tail);

    double chi2 = 0.0;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        pooled_obs += observed[k];
        pooled_exp += expected[k];
        if (pooled_exp >= 5.0) {
            const double d = pooled_obs - pooled_exp;
            chi2 += d * d / pooled_exp;
            pooled_obs = 0.0;
            pooled_exp = 0.0;
        }
    }
    if (pooled_obs > 0.0 || pooled_exp > 0.0) {
        const double d = pooled_obs - pooled_exp;
        chi2 += d * d / std::max(pooled_exp, 1.0);
    }
    return chi2;
}

CountsGrid triad_counts_grid(double pair_rate, std::uint64_t stream) {
    RngStream settings(101, stream);
    const Triad ta = random_triad(settings);
    const Triad tb = random_triad(settings);
    NoiseModel noise;
    noise.pair_rate = pair_rate;
    RngStream rng(102, stream);
    CountsGrid grid(3, std::vector<CountsRecord>(3));
    for (std::size_t x = 0; x < 3; ++x) {
        for (std::size_t y = 0; y < 3; ++y) {
            grid[x][y] =
                simulate_counts(ta[x], tb[y], WernerState(1.0), noise, 1.0, rng);
        }
    }
    return grid;
}

}  // namespace

TEST_CASE("ShiftedBound") {
    const ShiftedBound b(0.3);
    CHECK(b.delta() == 0.3);
    CHECK(b.bound() == 2.3);
    CHECK(ShiftedBound(0.0).bound() == 2.0);
    CHECK_THROWS_AS(ShiftedBound(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(ShiftedBound(std::nan("")), std::invalid_argument);
}

TEST_CASE("poisson_sample edge cases") {
    RngStream rng(51, 0);
    for (int i = 0; i < 100; ++i) REQUIRE(poisson_sample(0.0, rng) == 0);
    CHECK_THROWS_AS(poisson_sample(-1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(poisson_sample(std::nan(""), rng), std::invalid_argument);
    CHECK_THROWS_AS(poisson_sample(
                        std::numeric_limits<double>::infinity(), rng),
                    std::invalid_argument);
}

TEST_CASE("poisson_sample mean and variance across the algorithm switch") {
    RngStream rng(52, 0);
    const int n = 200000;
    for (double lambda : {0.5, 3.0, 9.99, 10.0, 50.0, 250.0}) {
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double s = static_cast<double>(poisson_sample(lambda, rng));
            REQUIRE(s >= 0.0);
            sum += s;
            sum2 += s * s;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        CHECK(std::abs(mean - lambda) < 0.05 * lambda);
        CHECK(std::abs(var - lambda) < 0.10 * lambda);
    }
}

TEST_CASE("poisson_sample matches the pmf") {
    RngStream rng(53, 0);
    const int n = 100000;
    for (double lambda : {4.0, 15.0}) {
        std::vector<std::int64_t> samples;
        samples.reserve(n);
        for (int i = 0; i < n; ++i) samples.push_back(poisson_sample(lambda, rng));
        // Cell count is ~ lambda + 6 sqrt(lambda); stay under the 0.1%
        // critical value for a generous 40 degrees of freedom (~ 73).
        CHECK(poisson_chi2(lambda, samples) < 73.0);
    }
}

TEST_CASE("simulate_counts validation") {
    RngStream rng(54, 0);
    NoiseModel noise;
    CHECK_THROWS_AS(simulate_counts(kZ, kZ, WernerState(1.0), noise, 0.0, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_counts(kZ, kZ, WernerState(1.0), noise, -1.0, rng),
                    std::invalid_argument);
    noise.pair_rate = -1.0;
    CHECK_THROWS_AS(simulate_counts(kZ, kZ, WernerState(1.0), noise, 1.0, rng),
                    std::invalid_argument);
    noise.pair_rate = 1000.0;
    noise.accidental_rate = -1.0;
    CHECK_THROWS_AS(simulate_counts(kZ, kZ, WernerState(1.0), noise, 1.0, rng),
                    std::invalid_argument);
}

TEST_CASE("simulate_counts zeroes impossible channels") {
    // Parallel axes at unit visibility: outcomes are perfectly anticorrelated,
    // so ++ and -- never fire.
    RngStream rng(55, 0);
    NoiseModel noise;  // pair_rate 1000, no accidentals
    double sum_pm = 0.0, sum_mp = 0.0;
    const int reps = 200;
    for (int i = 0; i < reps; ++i) {
        const CountsRecord rec =
            simulate_counts(kZ, kZ, WernerState(1.0), noise, 1.0, rng);
        REQUIRE(rec.main[0] == 0);
        REQUIRE(rec.main[3] == 0);
        for (int k = 0; k < 4; ++k) REQUIRE(rec.delayed[k] == 0);
        REQUIRE(rec.duration == 1.0);
        sum_pm += static_cast<double>(rec.main[1]);
        sum_mp += static_cast<double>(rec.main[2]);
    }
    // Each surviving channel has mean 1000 * 0.5 = 500.
    CHECK(std::abs(sum_pm / reps - 500.0) < 15.0);
    CHECK(std::abs(sum_mp / reps - 500.0) < 15.0);
}

TEST_CASE("simulate_counts channel statistics at zero visibility") {
    RngStream rng(56, 0);
    NoiseModel noise;  // pair_rate 1000
    const int reps = 2000;
    std::array<double, 4> sum{}, sum2{};
    for (int i = 0; i < reps; ++i) {
        const CountsRecord rec =
            simulate_counts(kZ, kZ, WernerState(0.0), noise, 1.0, rng);
        for (int k = 0; k < 4; ++k) {
            const double v = static_cast<double>(rec.main[k]);
            sum[k] += v;
            sum2[k] += v * v;
        }
    }
    for (int k = 0; k < 4; ++k) {
        const double mean = sum[k] / reps;
        const double var = sum2[k] / reps - mean * mean;
        CHECK(std::abs(mean - 250.0) < 2.0);     // sd of the mean ~ 0.35
        CHECK(var / mean > 0.9);                 // Poisson: variance == mean
        CHECK(var / mean < 1.1);
    }
}

TEST_CASE("simulate_counts adds background to every channel") {
    RngStream rng(57, 0);
    NoiseModel noise;
    noise.pair_rate = 1000.0;
    noise.accidental_rate = 200.0;
    const double duration = 0.5;  // background = 100 per channel
    const int reps = 1000;
    std::array<double, 4> main_sum{};
    double delayed_sum = 0.0;
    for (int i = 0; i < reps; ++i) {
        const CountsRecord rec =
            simulate_counts(kZ, kZ, WernerState(0.0), noise, duration, rng);
        for (int k = 0; k < 4; ++k) {
            main_sum[k] += static_cast<double>(rec.main[k]);
            delayed_sum += static_cast<double>(rec.delayed[k]);
        }
    }
    for (int k = 0; k < 4; ++k) {
        // p = 1/4 each: 1000 * 0.5 * 0.25 + 100 = 225.
        CHECK(std::abs(main_sum[k] / reps - 225.0) < 3.0);
    }
    CHECK(std::abs(delayed_sum / (4.0 * reps) - 100.0) < 2.0);
}

TEST_CASE("subtract_accidentals is per-channel subtraction") {
    CountsRecord rec;
    rec.main = {10, 20, 30, 40};
    rec.delayed = {1, 2, 3, 4};
    const std::array<double, 4> out = subtract_accidentals(rec);
    CHECK(out[0] == 9.0);
    CHECK(out[1] == 18.0);
    CHECK(out[2] == 27.0);
    CHECK(out[3] == 36.0);
}

TEST_CASE("estimate_correlator arithmetic") {
    CHECK(estimate_correlator({1.0, 0.0, 0.0, 1.0}) == 1.0);
    CHECK(estimate_correlator({0.0, 1.0, 1.0, 0.0}) == -1.0);
    CHECK(estimate_correlator({3.0, 1.0, 1.0, 3.0}) == 0.5);
    // Negative corrected counts can push the ratio out of range; it clamps.
    CHECK(estimate_correlator({5.0, -1.0, -1.0, 5.0}) == 1.0);
    CHECK_THROWS_AS(estimate_correlator({0.0, 0.0, 0.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_correlator({1.0, -1.0, -1.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_correlator({-4.0, 1.0, 1.0, -4.0}),
                    std::invalid_argument);
}

TEST_CASE("corrected estimator is unbiased under accidentals") {
    // a.b = -0.5 so the true correlator is +0.5.
    const BlochVector b = BlochVector::normalized(std::sqrt(3.0) / 2.0, 0.0, -0.5);
    NoiseModel noise;
    noise.pair_rate = 100000.0;
    noise.accidental_rate = 25000.0;
    RngStream rng(58, 0);
    const int reps = 300;
    double corrected_sum = 0.0, raw_sum = 0.0;
    for (int i = 0; i < reps; ++i) {
        const CountsRecord rec =
            simulate_counts(kZ, b, WernerState(1.0), noise, 1.0, rng);
        corrected_sum += estimate_correlator(subtract_accidentals(rec));
        std::array<double, 4> raw{};
        for (int k = 0; k < 4; ++k) raw[k] = static_cast<double>(rec.main[k]);
        raw_sum += estimate_correlator(raw);
    }
    const double corrected = corrected_sum / reps;
    const double raw = raw_sum / reps;
    CHECK(std::abs(corrected - 0.5) < 0.005);
    // Uniform background dilutes the uncorrected estimate toward zero:
    // E_raw = E * pair / (pair + 4 * background) = 0.5 / 2 = 0.25.
    CHECK(std::abs(raw - 0.25) < 0.005);
    CHECK(raw < corrected - 0.2);
}

TEST_CASE("chsh_error_poisson validation and disable switch") {
    RngStream rng(59, 0);
    const CountsGrid grid = triad_counts_grid(10000.0, 0);
    CHECK(chsh_error_poisson(grid, true, 0, rng) == 0.0);
    CHECK_THROWS_AS(chsh_error_poisson(grid, true, 50, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(chsh_error_poisson(grid, true, -1, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(chsh_error_poisson(CountsGrid{}, true, 100, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(chsh_error_poisson(CountsGrid(1, std::vector<CountsRecord>(3)),
                                       true, 100, rng),
                    std::invalid_argument);
    CountsGrid ragged(3, std::vector<CountsRecord>(3));
    ragged[1].resize(2);
    CHECK_THROWS_AS(chsh_error_poisson(ragged, true, 100, rng),
                    std::invalid_argument);
}

TEST_CASE("chsh_error_poisson is deterministic per stream") {
    const CountsGrid grid = triad_counts_grid(10000.0, 1);
    RngStream r1(60, 7);
    RngStream r2(60, 7);
    const double e1 = chsh_error_poisson(grid, true, 200, r1);
    const double e2 = chsh_error_poisson(grid, true, 200, r2);
    CHECK(e1 == e2);
    CHECK(e1 > 0.0);
}

TEST_CASE("chsh_error_poisson scales like 1/sqrt(counts)") {
    const CountsGrid small = triad_counts_grid(10000.0, 2);
    const CountsGrid large = triad_counts_grid(1000000.0, 2);
    RngStream r1(61, 0);
    RngStream r2(61, 1);
    const double e_small = chsh_error_poisson(small, true, 1000, r1);
    const double e_large = chsh_error_poisson(large, true, 1000, r2);
    CHECK(e_small > 0.004);
    CHECK(e_small < 0.06);
    // 100x the counts should shrink the error by ~10x.
    CHECK(e_small / e_large > 8.0);
    CHECK(e_small / e_large < 12.0);
}

TEST_CASE("violation_probability") {
    const std::vector<double> values{2.5, 1.9, 2.1};
    const ViolationEstimate est = violation_probability(values, ShiftedBound(0.0));
    CHECK(est.probability == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(est.std_error ==
          doctest::Approx(std::sqrt((2.0 / 3.0) * (1.0 / 3.0) / 3.0)).epsilon(1e-12));

    // The comparison is strict: a value exactly at the bound is no violation.
    const std::vector<double> at_bound{2.1};
    CHECK(violation_probability(at_bound, ShiftedBound(0.1)).probability == 0.0);

    std::vector<double> many(100, 2.5);
    for (int i = 0; i < 5; ++i) many[static_cast<std::size_t>(i)] = 1.0;
    const ViolationEstimate e95 = violation_probability(many, ShiftedBound(0.0));
    CHECK(e95.probability == 0.95);
    CHECK(e95.std_error == doctest::Approx(0.0217944947177).epsilon(1e-9));

    CHECK_THROWS_AS(violation_probability({}, ShiftedBound(0.0)),
                    std::invalid_argument);
}

TEST_CASE("violation_probability is monotone in the shift") {
    RngStream rng(62, 0);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(rng.uniform(1.5, 2.9));
    double prev = 1.1;
    for (double delta : {0.0, 0.1, 0.3, 0.6}) {
        const double p = violation_probability(values, ShiftedBound(delta)).probability;
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("estimate_visibility_from_mean") {
    CHECK(estimate_visibility_from_mean(2.45, 2.6) == 2.45 / 2.6);
    CHECK(estimate_visibility_from_mean(2.3, 2.6) == 2.3 / 2.6);
    CHECK_THROWS_AS(estimate_visibility_from_mean(2.45, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_visibility_from_mean(2.45, -1.0),
                    std::invalid_argument);
}
