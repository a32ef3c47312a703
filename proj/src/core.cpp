#include "bellsim/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bellsim {

double reduce_angle(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;  // fmod result of -eps can round up to 2*pi
    return r;
}

BlochVector::BlochVector(double x, double y, double z) : v_{x, y, z} {
    const double n2 = dot(v_, v_);
    if (std::abs(n2 - 1.0) > kGeometryTol) {
        throw std::invalid_argument(
            "BlochVector: norm deviates from 1 by more than 1e-9 (|v| = " +
            std::to_string(std::sqrt(n2)) + ")");
    }
}

BlochVector BlochVector::normalized(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n == 0.0) {
        throw std::invalid_argument("BlochVector: cannot normalize zero vector");
    }
    return BlochVector(x / n, y / n, z / n);
}

Triad::Triad(BlochVector v1, BlochVector v2, BlochVector v3) : v_{v1, v2, v3} {
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double d = dot(v_[i], v_[j]);
            if (std::abs(d) > kGeometryTol) {
                throw std::invalid_argument(
                    "Triad: vectors " + std::to_string(i + 1) + " and " +
                    std::to_string(j + 1) + " not orthogonal within 1e-9 (dot = " +
                    std::to_string(d) + ")");
            }
        }
    }
}

WernerState::WernerState(double visibility) : visibility_(visibility) {
    if (!(visibility >= 0.0 && visibility <= 1.0)) {
        throw std::invalid_argument("WernerState: visibility must lie in [0, 1]");
    }
}

PhaseShifterCal::PhaseShifterCal(double alpha, double beta)
    : alpha_(reduce_angle(alpha)), beta_(beta) {
    if (!(beta > 0.0)) {
        throw std::invalid_argument("PhaseShifterCal: beta must be positive");
    }
}

CorrelatorMatrix::CorrelatorMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("CorrelatorMatrix: dimensions must be positive");
    }
}

double correlator(const BlochVector& a, const BlochVector& b,
                  const WernerState& state) {
    return -state.visibility() * dot(a, b);
}

CorrelatorMatrix correlator_matrix(std::span<const BlochVector> alice,
                                   std::span<const BlochVector> bob,
                                   const WernerState& state) {
    if (alice.empty() || bob.empty()) {
        throw std::invalid_argument("correlator_matrix: empty settings sequence");
    }
    CorrelatorMatrix e(alice.size(), bob.size());
    for (std::size_t x = 0; x < alice.size(); ++x) {
        for (std::size_t y = 0; y < bob.size(); ++y) {
            e.at(x, y) = correlator(alice[x], bob[y], state);
        }
    }
    return e;
}

double joint_probability(const BlochVector& a, const BlochVector& b,
                         const WernerState& state, int outcome_a, int outcome_b) {
    if ((outcome_a != 1 && outcome_a != -1) || (outcome_b != 1 && outcome_b != -1)) {
        throw std::invalid_argument("joint_probability: outcomes must be +1 or -1");
    }
    return (1.0 + outcome_a * outcome_b * correlator(a, b, state)) / 4.0;
}

double phase_from_voltage(double volts, const PhaseShifterCal& cal) {
    if (volts < 0.0) {
        throw std::invalid_argument("phase_from_voltage: voltage must be non-negative");
    }
    return reduce_angle(cal.alpha() + cal.beta() * volts * volts);
}

BlochVector mz_measurement_vector(const MzSettings& s) {
    const double s1 = std::sin(s.phi1());
    const double c1 = std::cos(s.phi1());
    const double s2 = std::sin(s.phi2());
    const double c2 = std::cos(s.phi2());
    return BlochVector::normalized(-s2 * c1, s2 * s1, c2);
}

Mat2c mz_unitary_oracle(const MzSettings& s) {
    using C = std::complex<double>;
    const double h1 = s.phi1() / 2.0;
    const double h2 = s.phi2() / 2.0;
    // R_Z(phi1) = diag(e^{-i phi1/2}, e^{+i phi1/2})
    const C ze(std::cos(h1), -std::sin(h1));
    const C zp(std::cos(h1), std::sin(h1));
    // R_Y(phi2) = [[cos, -sin], [sin, cos]] at half angle
    const double c = std::cos(h2);
    const double si = std::sin(h2);
    Mat2c u;
    u[0][0] = c * ze;
    u[0][1] = -si * zp;
    u[1][0] = si * ze;
    u[1][1] = c * zp;
    return u;
}

}  // namespace bellsim
