#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace primfit {

using Eigen::Matrix3d;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

inline constexpr double kPowBaseFloor = 1e-6;

// Signed power: w^e := sgn(w) * |w|^e. Keeps superquadric surfaces odd-symmetric
// for fractional exponents.
inline double spow(double w, double e) {
    if (w == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(w), e), w);
}

// log|w| with the base floored away from zero; used in derivatives of w^e
// w.r.t. the exponent, where the unfloored log diverges.
inline double log_abs_floored(double w) {
    return std::log(std::max(std::abs(w), kPowBaseFloor));
}

inline Matrix3d cross_matrix(const Vector3d& v) {
    Matrix3d m;
    m << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
        -v.y(), v.x(), 0;
    return m;
}

// Deterministic RNG wrapper. All randomness in the project goes through this
// so that a (seed, call sequence) pair fully determines the output.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next_u64() { return gen_(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    double normal() {
        // Box-Muller; avoids distribution-object portability quirks.
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    Vector3d vec3(double lo, double hi) {
        double x = uniform(lo, hi), y = uniform(lo, hi), z = uniform(lo, hi);
        return {x, y, z};
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace primfit
