#pragma once

#include "primfit/errors.hpp"
#include "primfit/velocity_field.hpp"

namespace primfit {

// Displacement field psi - id of an integrated stationary velocity field.
struct FlowField {
    VectorGrid displacement;
    bool inverse = false;

    // p = psi(s) = s + d(s), with d sampled trilinearly; points outside the
    // grid extent are left untouched (zero local deformation in the far field).
    Vector3d apply(const Vector3d& s) const {
        return s + displacement.sample(s);
    }

    static FlowField identity(int resolution, const Extent& extent) {
        return {VectorGrid::cube(resolution, extent), false};
    }
};

inline Vector3d apply_flow(const FlowField& flow, const Vector3d& s) {
    return flow.apply(s);
}

// Scaling-and-squaring integration of a stationary velocity field to time 1:
// scale v by 2^-steps, then compose the small flow with itself `steps` times.
inline FlowField integrate_ss(const VectorGrid& v, int steps = 7) {
    const double scale = std::ldexp(1.0, -steps);
    if (v.max_norm() * scale > v.min_spacing()) {
        throw UnstableField("initial SS displacement exceeds one grid cell");
    }
    VectorGrid d = v;
    d.scale(scale);
    VectorGrid next(v.nx(), v.ny(), v.nz(), v.extent());
    for (int s = 0; s < steps; ++s) {
        for (int k = 0; k < d.nz(); ++k)
            for (int j = 0; j < d.ny(); ++j)
                for (int i = 0; i < d.nx(); ++i) {
                    const Vector3d x = d.node_position(i, j, k);
                    const Vector3d dx = d.at(i, j, k);
                    next.at(i, j, k) = dx + d.sample(x + dx);
                }
        std::swap(d, next);
    }
    return {d, false};
}

inline FlowField inverse_flow(const VectorGrid& v, int steps = 7) {
    VectorGrid neg = v;
    neg.scale(-1.0);
    FlowField f = integrate_ss(neg, steps);
    f.inverse = true;
    return f;
}

inline FlowField integrate_ss(const VelocityField& v, int steps = 7) {
    return integrate_ss(v.effective(), steps);
}

inline FlowField inverse_flow(const VelocityField& v, int steps = 7) {
    return inverse_flow(v.effective(), steps);
}

// Topology-preservation proxy: finite-difference Jacobian determinant of
// psi = id + d, evaluated with one-sided differences at every grid cell corner.
inline double min_jacobian_determinant(const FlowField& flow) {
    const VectorGrid& d = flow.displacement;
    double min_det = std::numeric_limits<double>::max();
    for (int k = 0; k + 1 < d.nz(); ++k)
        for (int j = 0; j + 1 < d.ny(); ++j)
            for (int i = 0; i + 1 < d.nx(); ++i) {
                Matrix3d jac;
                const Vector3d base = d.at(i, j, k);
                jac.col(0) = (d.at(i + 1, j, k) - base) / d.spacing(0);
                jac.col(1) = (d.at(i, j + 1, k) - base) / d.spacing(1);
                jac.col(2) = (d.at(i, j, k + 1) - base) / d.spacing(2);
                jac += Matrix3d::Identity();
                min_det = std::min(min_det, jac.determinant());
            }
    return min_det;
}

}  // namespace primfit
