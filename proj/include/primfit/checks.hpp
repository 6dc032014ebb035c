#pragma once

#include "primfit/forces.hpp"

#include <functional>
#include <map>
#include <string>

namespace primfit {

// Finite-difference verification of the model Jacobian L = [I, B, RJ, R],
// column by column against the full forward model
//   x(q) = c + R_raw(theta) (s(uv, q_s) + d).
// Shared by the unit tests, the acceptance suite, and the check-jacobians CLI.

struct JacobianCheckReport {
    bool pass = true;
    std::map<std::string, double> worst_error;  // per column label
    std::string first_failure;

    double worst_overall() const {
        double w = 0.0;
        for (const auto& [_, e] : worst_error) w = std::max(w, e);
        return w;
    }
};

namespace detail {

inline const char* kColumnLabels[21] = {
    "trans:x", "trans:y", "trans:z",
    "rot:w", "rot:x", "rot:y", "rot:z",
    "global:a0", "global:a1", "global:a2", "global:a3",
    "global:eps1", "global:eps2", "global:t1", "global:t2",
    "global:b1", "global:b2", "global:b3",
    "local:x", "local:y", "local:z"};

inline Vector3d full_model(const Vector21d& q, const Uv& uv) {
    const Vector3d c = q.head<3>();
    const Vector4d theta = q.segment<4>(3);
    const GlobalParams g = GlobalParams::from_vector(q.segment<11>(7));
    const Vector3d d = q.tail<3>();
    const Vector3d s = taper_bend(superquadric_surface(uv, g), g);
    return c + quat_to_matrix_raw(theta) * (s + d);
}

// Random configurations away from the angular singularities of the signed
// powers (poles and axis crossings), where FD of an unclamped base cannot
// match a clamped analytic derivative.
inline Uv random_uv(Rng& rng) {
    auto pick = [&](double scale) {
        double mag = rng.uniform(0.15, 1.41);
        return (rng.uniform() < 0.5 ? -mag : mag) * scale;
    };
    return {pick(1.0), pick(1.0)};
}

inline GlobalParams random_globals(Rng& rng) {
    GlobalParams g;
    g.a0 = rng.uniform(0.5, 2.0);
    g.a1 = rng.uniform(0.5, 1.5);
    g.a2 = rng.uniform(0.5, 1.5);
    g.a3 = rng.uniform(0.5, 1.5);
    g.eps1 = rng.uniform(0.3, 1.8);
    g.eps2 = rng.uniform(0.3, 1.8);
    g.t1 = rng.uniform(-0.6, 0.6);
    g.t2 = rng.uniform(-0.6, 0.6);
    g.b1 = rng.uniform(-0.3, 0.3);
    g.b2 = rng.uniform(-0.3, 0.3);
    g.b3 = rng.uniform(-1.0, 1.0);
    return g;
}

inline Vector4d random_unit_quaternion(Rng& rng) {
    Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    return q.normalized();
}

}  // namespace detail

// `tamper` lets a test inject a fault into the global block before assembly.
inline JacobianCheckReport
check_jacobians(std::uint64_t seed, int trials, double tol = 1e-4,
                const std::function<void(Matrix3x11d&)>& tamper = nullptr) {
    Rng rng(seed);
    JacobianCheckReport report;
    for (const auto* label : detail::kColumnLabels) report.worst_error[label] = 0.0;

    for (int trial = 0; trial < trials; ++trial) {
        Pose pose;
        pose.c = rng.vec3(-1.0, 1.0);
        pose.theta = detail::random_unit_quaternion(rng);
        const GlobalParams g = detail::random_globals(rng);
        const Uv uv = detail::random_uv(rng);
        const Vector3d d = rng.vec3(-0.1, 0.1);

        Vector21d q;
        q.head<3>() = pose.c;
        q.segment<4>(3) = pose.theta;
        q.segment<11>(7) = g.as_vector();
        q.tail<3>() = d;

        const Vector3d s = taper_bend(superquadric_surface(uv, g), g);
        PointJacobian pj;
        pj.R = pose.rotation();
        pj.B = jacobian_rotation(pose.theta, s + d);
        Matrix3x11d J = jacobian_global(uv, g);
        if (tamper) tamper(J);
        pj.RJ = pj.R * J;
        const Matrix3x21d L = pj.assembled();

        for (int i = 0; i < 21; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(q[i]));
            Vector21d qp = q, qm = q;
            qp[i] += h;
            qm[i] -= h;
            const Vector3d fd = (detail::full_model(qp, uv) - detail::full_model(qm, uv)) / (2 * h);
            const Vector3d an = L.col(i);
            const double err = (fd - an).norm() / (1.0 + an.norm());
            const std::string label = detail::kColumnLabels[i];
            report.worst_error[label] = std::max(report.worst_error[label], err);
            if (err >= tol && report.pass) {
                report.pass = false;
                report.first_failure = "block " + label + " error " + std::to_string(err) +
                                       " at trial " + std::to_string(trial);
            }
        }
    }
    return report;
}

// Virtual-work identity f^T dx = f_q^T dq, block by block. The pose and
// global blocks share the same algebra on both sides; the local block goes
// through the splat/smooth adjoint.
struct VirtualWorkErrors {
    double lhs[4] = {0, 0, 0, 0};  // sum_r f_r^T (L_r dq), per block
    double rhs[4] = {0, 0, 0, 0};  // f_q^T dq, per block

    double abs_error(int block) const { return std::abs(lhs[block] - rhs[block]); }
    double rel_error(int block) const { return abs_error(block) / (std::abs(rhs[block]) + 1e-300); }
    bool within(int block, double rel_tol, double abs_tol) const {
        return abs_error(block) <= rel_tol * std::abs(rhs[block]) + abs_tol;
    }
};

inline VirtualWorkErrors virtual_work_check(const Primitive& prim, const ForceField& forces,
                                            double h = 1e-6) {
    const GeneralizedForce gf = generalized_forces(prim, forces);
    const Matrix3d R = prim.pose.rotation();
    const auto& samples = prim.samples();

    const Vector3d dc = h * gf.f_c;
    const Vector4d dtheta = h * gf.f_theta;
    const Vector11d dqs = h * gf.f_s;
    VectorGrid dv = gf.f_d;
    dv.scale(h);
    const VectorGrid dv_smoothed = gaussian_smooth(dv, prim.field.sigma);

    double lhs_trans = 0, lhs_rot = 0, lhs_glob = 0, lhs_loc = 0;
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const Vector3d& fr = forces.f[r];
        if (fr.isZero()) continue;
        lhs_trans += fr.dot(dc);
        lhs_rot += fr.dot(jacobian_rotation(prim.pose.theta, samples[r].p) * dtheta);
        lhs_glob += fr.dot(R * (jacobian_global(samples[r].uv, prim.globals) * dqs));
        lhs_loc += fr.dot(R * dv_smoothed.sample(samples[r].s));
    }
    const double rhs_trans = gf.f_c.dot(dc);
    const double rhs_rot = gf.f_theta.dot(dtheta);
    const double rhs_glob = gf.f_s.dot(dqs);
    double rhs_loc = 0.0;
    for (std::size_t n = 0; n < gf.f_d.size(); ++n)
        rhs_loc += gf.f_d.data()[n].dot(dv.data()[n]);

    VirtualWorkErrors e;
    e.lhs[0] = lhs_trans; e.rhs[0] = rhs_trans;
    e.lhs[1] = lhs_rot;   e.rhs[1] = rhs_rot;
    e.lhs[2] = lhs_glob;  e.rhs[2] = rhs_glob;
    e.lhs[3] = lhs_loc;   e.rhs[3] = rhs_loc;
    return e;
}

}  // namespace primfit
