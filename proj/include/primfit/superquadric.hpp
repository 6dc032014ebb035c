#pragma once

#include "primfit/errors.hpp"
#include "primfit/global_params.hpp"
#include "primfit/mathutil.hpp"

namespace primfit {

inline constexpr double kTaperFactorMin = 1e-9;

// Angular surface coordinates, u in [-pi/2, pi/2], v in [-pi, pi].
struct Uv {
    double u = 0.0;
    double v = 0.0;
};

// Base superquadric surface point in the model frame, using signed powers.
inline Vector3d superquadric_surface(const Uv& uv, const GlobalParams& g) {
    const double cu = std::cos(uv.u), su = std::sin(uv.u);
    const double cv = std::cos(uv.v), sv = std::sin(uv.v);
    const double Cu = spow(cu, g.eps1);
    const double Su = spow(su, g.eps1);
    const double Cv = spow(cv, g.eps2);
    const double Sv = spow(sv, g.eps2);
    return g.a0 * Vector3d(g.a1 * Cu * Cv, g.a2 * Cu * Sv, g.a3 * Su);
}

// Bending phase at height e3. The cosine argument groups as
// pi * b3 * (e3 + b2) / (a0 a3).
inline double bend_phase(double e3, const GlobalParams& g) {
    return M_PI * g.b3 * (e3 + g.b2) / (g.a0 * g.a3);
}

// Linear tapering along x/y plus a circular-profile bend on x, both driven by
// the height coordinate e3. Height itself is unchanged, which is what makes
// the exact inverse possible.
inline Vector3d taper_bend(const Vector3d& e, const GlobalParams& g) {
    const double A = g.a0 * g.a3;
    const double k1 = g.t1 * e.z() / A + 1.0;
    const double k2 = g.t2 * e.z() / A + 1.0;
    return {k1 * e.x() + g.b1 * std::cos(bend_phase(e.z(), g)),
            k2 * e.y(),
            e.z()};
}

inline Vector3d inverse_taper_bend(const Vector3d& s, const GlobalParams& g) {
    const double A = g.a0 * g.a3;
    const double k1 = g.t1 * s.z() / A + 1.0;
    const double k2 = g.t2 * s.z() / A + 1.0;
    if (std::abs(k1) < kTaperFactorMin || std::abs(k2) < kTaperFactorMin) {
        throw DegenerateTaper("tapering factor vanishes at height " + std::to_string(s.z()));
    }
    return {(s.x() - g.b1 * std::cos(bend_phase(s.z(), g))) / k1,
            s.y() / k2,
            s.z()};
}

// Superquadric inside-outside function; F <= 1 iff the point is inside.
// Expects a model-frame point with the global deformation already inverted.
inline double inside_outside(const Vector3d& x, const GlobalParams& g) {
    const double wx = std::abs(x.x() / (g.a0 * g.a1));
    const double wy = std::abs(x.y() / (g.a0 * g.a2));
    const double wz = std::abs(x.z() / (g.a0 * g.a3));
    const double planar = std::pow(wx, 2.0 / g.eps2) + std::pow(wy, 2.0 / g.eps2);
    return std::pow(planar, g.eps2 / g.eps1) + std::pow(wz, 2.0 / g.eps1);
}

}  // namespace primfit
