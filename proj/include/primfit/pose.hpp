#pragma once

#include "primfit/errors.hpp"
#include "primfit/mathutil.hpp"

namespace primfit {

// Quaternion convention is (w, x, y, z) with R(1,0,0,0) = I.
//
// The homogeneous (quadratic, non-normalizing) rotation formula. Only a true
// rotation on the unit sphere, but defined for any quaternion, which is what
// the analytic rotation Jacobian differentiates.
inline Matrix3d quat_to_matrix_raw(const Vector4d& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
         2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
         2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y);
    return r;
}

inline Matrix3d rotation_from_quaternion(const Vector4d& q) {
    if (std::abs(q.norm() - 1.0) > 1e-6) {
        throw NonUnitQuaternion("quaternion norm " + std::to_string(q.norm()));
    }
    return quat_to_matrix_raw(q);
}

struct Pose {
    Vector3d c = Vector3d::Zero();
    Vector4d theta = Vector4d(1, 0, 0, 0);

    Matrix3d rotation() const { return rotation_from_quaternion(theta); }
    void renormalize() { theta.normalize(); }

    Vector3d to_world(const Vector3d& p) const { return c + rotation() * p; }
    Vector3d to_model(const Vector3d& x) const { return rotation().transpose() * (x - c); }
};

}  // namespace primfit
