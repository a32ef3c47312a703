#include "bellsim/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace bellsim {

namespace {

struct Quaternion {
    double w, x, y, z;
};

// Uniform on the unit quaternion sphere S^3 (subgroup algorithm); three
// uniforms, no branches, no rejection.
Quaternion random_unit_quaternion(RngStream& rng) {
    const double u1 = rng.next_double();
    const double t1 = kTwoPi * rng.next_double();
    const double t2 = kTwoPi * rng.next_double();
    const double r1 = std::sqrt(1.0 - u1);
    const double r2 = std::sqrt(u1);
    return {r1 * std::sin(t1), r1 * std::cos(t1), r2 * std::sin(t2),
            r2 * std::cos(t2)};
}

// Columns of the rotation matrix of q; always det +1.
std::array<Vec3, 3> rotation_columns(const Quaternion& q) {
    const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    const Vec3 c0{ww + xx - yy - zz, 2.0 * (xy + wz), 2.0 * (xz - wy)};
    const Vec3 c1{2.0 * (xy - wz), ww - xx + yy - zz, 2.0 * (yz + wx)};
    const Vec3 c2{2.0 * (xz + wy), 2.0 * (yz - wx), ww - xx - yy + zz};
    return {c0, c1, c2};
}

BlochVector to_bloch(const Vec3& v) {
    return BlochVector::normalized(v.x, v.y, v.z);
}

}  // namespace

BlochVector random_unit_vector(RngStream& rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = kTwoPi * rng.next_double();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return BlochVector::normalized(r * std::cos(phi), r * std::sin(phi), z);
}

Triad random_triad(RngStream& rng) {
    const auto cols = rotation_columns(random_unit_quaternion(rng));
    return Triad(to_bloch(cols[0]), to_bloch(cols[1]), to_bloch(cols[2]));
}

std::pair<BlochVector, BlochVector> random_unbiased_pair(RngStream& rng) {
    const auto cols = rotation_columns(random_unit_quaternion(rng));
    return {to_bloch(cols[0]), to_bloch(cols[1])};
}

std::vector<double> random_voltages(RngStream& rng, int count, double vmax) {
    if (count < 1) {
        throw std::invalid_argument("random_voltages: count must be >= 1");
    }
    if (!(vmax > 0.0)) {
        throw std::invalid_argument("random_voltages: vmax must be positive");
    }
    std::vector<double> v(static_cast<std::size_t>(count));
    for (auto& vi : v) vi = vmax * rng.next_double();
    return v;
}

}  // namespace bellsim
