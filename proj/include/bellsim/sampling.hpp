#pragma once

#include <utility>
#include <vector>

#include "bellsim/core.hpp"
#include "bellsim/rng.hpp"

namespace bellsim {

/// Uniform direction on the Bloch sphere.
BlochVector random_unit_vector(RngStream& rng);

// Right-handed orthonormal triad with Haar measure on the rotation group,
// sampled as a uniform unit quaternion (3 uniform draws) mapped to its
// rotation matrix; the triad is the matrix's columns.
Triad random_triad(RngStream& rng);

/// Two orthogonal unit vectors whose frame is Haar-distributed.
std::pair<BlochVector, BlochVector> random_unbiased_pair(RngStream& rng);

/// Independent uniform draws in [0, vmax]; the paper-scale default is 7 V.
std::vector<double> random_voltages(RngStream& rng, int count, double vmax = 7.0);

}  // namespace bellsim
