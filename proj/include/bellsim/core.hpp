#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bellsim/vec3.hpp"

namespace bellsim {

// Tolerance for user-supplied geometry (unit norms, orthogonality).
inline constexpr double kGeometryTol = 1e-9;
// Tolerance for internally generated math (samplers, oracles).
inline constexpr double kInternalTol = 1e-12;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Reduce an angle into [0, 2*pi).
double reduce_angle(double phi);

// A projective qubit measurement direction: unit vector on the Bloch sphere.
class BlochVector {
  public:
    // Throws std::invalid_argument unless x^2+y^2+z^2 = 1 within 1e-9.
    BlochVector(double x, double y, double z);

    /// Rescales (x, y, z) to unit length first; rejects the zero vector.
    static BlochVector normalized(double x, double y, double z);

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }

  private:
    Vec3 v_;
};

inline double dot(const BlochVector& a, const BlochVector& b) {
    return dot(a.vec(), b.vec());
}

// One party's three mutually orthogonal measurement directions.
class Triad {
  public:
    // Throws std::invalid_argument unless the three vectors are orthonormal
    // within 1e-9.
    Triad(BlochVector v1, BlochVector v2, BlochVector v3);

    const BlochVector& operator[](std::size_t i) const { return v_[i]; }
    std::span<const BlochVector, 3> vectors() const { return v_; }

  private:
    std::array<BlochVector, 3> v_;
};

// Singlet mixed with white noise; visibility V scales every correlator.
class WernerState {
  public:
    explicit WernerState(double visibility);  // requires 0 <= V <= 1
    double visibility() const { return visibility_; }

  private:
    double visibility_;
};

// Quadratic phase-voltage law of one thermal phase shifter:
// phi(v) = alpha + beta * v^2.
class PhaseShifterCal {
  public:
    PhaseShifterCal(double alpha, double beta);  // requires beta > 0
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

  private:
    double alpha_;  // stored reduced into [0, 2*pi)
    double beta_;   // rad / V^2
};

// Phases of the two shifters in one Mach-Zehnder measurement circuit.
class MzSettings {
  public:
    MzSettings(double phi1, double phi2)
        : phi1_(reduce_angle(phi1)), phi2_(reduce_angle(phi2)) {}
    double phi1() const { return phi1_; }
    double phi2() const { return phi2_; }

  private:
    double phi1_;
    double phi2_;
};

// Dense row-major matrix of correlators E(x, y) in [-1, 1].
class CorrelatorMatrix {
  public:
    CorrelatorMatrix(std::size_t rows, std::size_t cols);

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

/// Correlator of the noisy singlet: E = -V * (a . b).
double correlator(const BlochVector& a, const BlochVector& b,
                  const WernerState& state);

/// Entry (x, y) is correlator(A[x], B[y], state). Throws on empty input.
CorrelatorMatrix correlator_matrix(std::span<const BlochVector> alice,
                                   std::span<const BlochVector> bob,
                                   const WernerState& state);

/// P(oA, oB) = (1 + oA*oB*E)/4 with uniform marginals; oA, oB in {+1, -1}.
double joint_probability(const BlochVector& a, const BlochVector& b,
                         const WernerState& state, int outcome_a, int outcome_b);

/// phi(v) = alpha + beta*v^2 reduced into [0, 2*pi). Throws if v < 0.
double phase_from_voltage(double volts, const PhaseShifterCal& cal);

// Bloch axis measured by the interferometer: the observable after
// U(phi1, phi2) = R_Y(phi2) R_Z(phi1) and Z-basis detection is
// U^dag sigma_Z U = n . sigma with
//   n = (-sin(phi2) cos(phi1), sin(phi2) sin(phi1), cos(phi2)).
// mz_unitary_oracle() keeps the closed form honest against the explicit
// 2x2 conjugation.
BlochVector mz_measurement_vector(const MzSettings& s);

using Mat2c = std::array<std::array<std::complex<double>, 2>, 2>;

/// U(phi1, phi2) = R_Y(phi2) R_Z(phi1) as an explicit 2x2 unitary.
Mat2c mz_unitary_oracle(const MzSettings& s);

}  // namespace bellsim
