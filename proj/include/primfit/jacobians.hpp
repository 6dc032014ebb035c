#pragma once

#include "primfit/pose.hpp"
#include "primfit/superquadric.hpp"

namespace primfit {

using Matrix3x4d = Eigen::Matrix<double, 3, 4>;
using Matrix3x11d = Eigen::Matrix<double, 3, 11>;
using Matrix3x21d = Eigen::Matrix<double, 3, 21>;
using Vector11d = Eigen::Matrix<double, 11, 1>;
using Vector21d = Eigen::Matrix<double, 21, 1>;

// Parameter order of the global block, shared with GlobalParams::as_vector:
// (a0, a1, a2, a3, eps1, eps2, t1, t2, b1, b2, b3).

// Analytic Jacobian of the globally deformed surface point s = T(e(uv)) with
// respect to the 11 global parameters, at fixed (u, v).
inline Matrix3x11d jacobian_global(const Uv& uv, const GlobalParams& g) {
    const double cu = std::cos(uv.u), su = std::sin(uv.u);
    const double cv = std::cos(uv.v), sv = std::sin(uv.v);
    const double Cu = spow(cu, g.eps1);
    const double Su = spow(su, g.eps1);
    const double Cv = spow(cv, g.eps2);
    const double Sv = spow(sv, g.eps2);
    const double Lcu = log_abs_floored(cu), Lsu = log_abs_floored(su);
    const double Lcv = log_abs_floored(cv), Lsv = log_abs_floored(sv);

    const Vector3d e = g.a0 * Vector3d(g.a1 * Cu * Cv, g.a2 * Cu * Sv, g.a3 * Su);
    const double A = g.a0 * g.a3;
    const double k1 = g.t1 * e.z() / A + 1.0;
    const double k2 = g.t2 * e.z() / A + 1.0;
    const double phi = bend_phase(e.z(), g);
    const double sphi = std::sin(phi), cphi = std::cos(phi);

    // Derivatives of e and of A = a0*a3 per parameter; zero where not stated.
    Matrix3x11d de = Matrix3x11d::Zero();
    Vector11d dA = Vector11d::Zero();
    de.col(0) = e / g.a0;                                   // a0
    de.col(1) = Vector3d(g.a0 * Cu * Cv, 0, 0);             // a1
    de.col(2) = Vector3d(0, g.a0 * Cu * Sv, 0);             // a2
    de.col(3) = Vector3d(0, 0, g.a0 * Su);                  // a3
    de.col(4) = Vector3d(e.x() * Lcu, e.y() * Lcu, e.z() * Lsu);  // eps1
    de.col(5) = Vector3d(e.x() * Lcv, e.y() * Lsv, 0);      // eps2
    dA[0] = g.a3;
    dA[3] = g.a0;

    Matrix3x11d J = Matrix3x11d::Zero();
    for (int i = 0; i < 11; ++i) {
        const Vector3d dei = de.col(i);
        const double dAi = dA[i];
        const double dk1 = g.t1 * (dei.z() * A - e.z() * dAi) / (A * A);
        const double dk2 = g.t2 * (dei.z() * A - e.z() * dAi) / (A * A);
        const double dphi = M_PI * g.b3 * (dei.z() * A - (e.z() + g.b2) * dAi) / (A * A);
        J(0, i) = dk1 * e.x() + k1 * dei.x() - g.b1 * sphi * dphi;
        J(1, i) = dk2 * e.y() + k2 * dei.y();
        J(2, i) = dei.z();
    }

    // Direct dependencies of the taper/bend parameters themselves.
    J(0, 6) = e.z() / A * e.x();                    // t1
    J(1, 7) = e.z() / A * e.y();                    // t2
    J(0, 8) = cphi;                                 // b1
    J(0, 9) = -g.b1 * sphi * M_PI * g.b3 / A;       // b2
    J(0, 10) = -g.b1 * sphi * M_PI * (e.z() + g.b2) / A;  // b3
    return J;
}

// B = d(R(theta) p)/d(theta) for the raw (unnormalized) quaternion and p held
// fixed. Uses Rp = p + 2w (v x p) + 2 v x (v x p) with v = (x, y, z).
inline Matrix3x4d jacobian_rotation(const Vector4d& theta, const Vector3d& p) {
    const double w = theta[0];
    const Vector3d v = theta.tail<3>();
    Matrix3x4d B;
    B.col(0) = 2.0 * v.cross(p);
    const Matrix3d dv = 2.0 * (v.dot(p) * Matrix3d::Identity() + v * p.transpose() -
                               2.0 * p * v.transpose() - w * cross_matrix(p));
    B.rightCols<3>() = dv;
    return B;
}

// Per-point model Jacobian L = [I | B | R J | R], columns ordered exactly as
// the generalized force blocks (3 + 4 + 11 + 3 = 21).
struct PointJacobian {
    Matrix3x4d B;
    Matrix3x11d RJ;
    Matrix3d R;

    Matrix3x21d assembled() const {
        Matrix3x21d L;
        L.leftCols<3>() = Matrix3d::Identity();
        L.middleCols<4>(3) = B;
        L.middleCols<11>(7) = RJ;
        L.rightCols<3>() = R;
        return L;
    }
};

// p is the point's current model-frame position (after local deformation),
// the value B treats as fixed.
inline PointJacobian assemble_L(const Pose& pose, const Uv& uv, const GlobalParams& g,
                                const Vector3d& p) {
    PointJacobian pj;
    pj.R = pose.rotation();
    pj.B = jacobian_rotation(pose.theta, p);
    pj.RJ = pj.R * jacobian_global(uv, g);
    return pj;
}

}  // namespace primfit
