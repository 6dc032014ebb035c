#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>

namespace primfit {

inline constexpr double kEpsMin = 0.1;
inline constexpr double kEpsMax = 2.0;
inline constexpr double kTaperMax = 0.95;

// The 11 global shape parameters: overall scale a0, per-axis aspect ratios
// a1..a3, squareness exponents eps1/eps2, linear tapering t1/t2 and circular
// bending (magnitude b1, location b2, influence b3).
struct GlobalParams {
    double a0 = 1.0, a1 = 1.0, a2 = 1.0, a3 = 1.0;
    double eps1 = 1.0, eps2 = 1.0;
    double t1 = 0.0, t2 = 0.0;
    double b1 = 0.0, b2 = 0.0, b3 = 0.0;

    static constexpr int kCount = 11;

    Eigen::Matrix<double, kCount, 1> as_vector() const {
        Eigen::Matrix<double, kCount, 1> v;
        v << a0, a1, a2, a3, eps1, eps2, t1, t2, b1, b2, b3;
        return v;
    }

    static GlobalParams from_vector(const Eigen::Matrix<double, kCount, 1>& v) {
        GlobalParams g;
        g.a0 = v[0]; g.a1 = v[1]; g.a2 = v[2]; g.a3 = v[3];
        g.eps1 = v[4]; g.eps2 = v[5];
        g.t1 = v[6]; g.t2 = v[7];
        g.b1 = v[8]; g.b2 = v[9]; g.b3 = v[10];
        return g;
    }

    bool valid() const {
        return a0 > 0 && a1 > 0 && a2 > 0 && a3 > 0 &&
               eps1 >= kEpsMin && eps1 <= kEpsMax &&
               eps2 >= kEpsMin && eps2 <= kEpsMax &&
               std::abs(t1) < 1.0 && std::abs(t2) < 1.0;
    }

    // Box projection onto the valid parameter ranges; used after every
    // dynamics update so the invariants hold exactly.
    void project() {
        a0 = std::clamp(a0, 1e-4, 1e4);
        a1 = std::clamp(a1, 1e-2, 1e2);
        a2 = std::clamp(a2, 1e-2, 1e2);
        a3 = std::clamp(a3, 1e-2, 1e2);
        eps1 = std::clamp(eps1, kEpsMin, kEpsMax);
        eps2 = std::clamp(eps2, kEpsMin, kEpsMax);
        t1 = std::clamp(t1, -kTaperMax, kTaperMax);
        t2 = std::clamp(t2, -kTaperMax, kTaperMax);
        b1 = std::clamp(b1, -1e3, 1e3);
        b2 = std::clamp(b2, -1e3, 1e3);
        b3 = std::clamp(b3, -2.0, 2.0);
    }
};

}  // namespace primfit
